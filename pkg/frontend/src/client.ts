// Console-side session over the WebSocket bridge. One binary WebSocket
// message carries exactly one wire frame. The client subscribes to joint
// state, the three video topics and session events, runs the heartbeat, and
// keeps per-topic sequence accounting so lost video is visible and lost
// commands would be too (they never are: commands ride the same ordered
// stream and are not ring-buffered anywhere).

import { FeedSet } from "./feeds.js";
import { InputMap } from "./input.js";
import {
  ControlOp,
  EventKind,
  FLAG_ECHO,
  Message,
  SessionControlMsg,
  SessionEventMsg,
  TOPIC_EVENTS,
  TOPIC_JOINTS,
  VIDEO_TOPICS,
  WireError,
  decode,
  encode,
  topicOf,
} from "./protocol.js";
import { SessionView } from "./session.js";

/** The part of the browser WebSocket the client touches, so node tests can
 * hand in the `ws` implementation and unit tests a scripted fake. */
export interface SocketLike {
  binaryType: string;
  readyState: number;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: ArrayBuffer | Uint8Array }) => void) | null;
  send(data: Uint8Array): void;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

const WS_OPEN = 1;

export type ConnectionStatus = "idle" | "connecting" | "open" | "closed" | "error";

export interface TopicAccount {
  received: number;
  dropped: number; // gaps in the wire seq
  outOfOrder: number;
  lastSeq: number | null;
}

export interface ClientOptions {
  url?: string;
  socketFactory?: SocketFactory;
  commandHz?: number;
  heartbeatMs?: number;
  /** ms clock for the session view and β timers (injectable for tests) */
  now?: () => number;
  /** ns clock stamped into outgoing headers */
  nowNs?: () => bigint;
}

export const DEFAULT_URL = "ws://127.0.0.1:7451";

export class ConsoleClient {
  status: ConnectionStatus = "idle";
  readonly feeds = new FeedSet();
  readonly session = new SessionView();
  readonly input = new InputMap();
  joints: Float64Array | null = null;
  decodeErrors = 0;
  rttMs: number | null = null;
  readonly accounts = new Map<string, TopicAccount>();

  onchange: (() => void) | null = null;

  private socket: SocketLike | null = null;
  private readonly url: string;
  private readonly makeSocket: SocketFactory;
  private readonly now: () => number;
  private readonly nowNs: () => bigint;
  private seqByTopic = new Map<string, number>();
  private timers: ReturnType<typeof setInterval>[] = [];
  readonly commandPeriodMs: number;
  readonly heartbeatMs: number;

  constructor(opts: ClientOptions = {}) {
    this.url = opts.url ?? DEFAULT_URL;
    this.makeSocket = opts.socketFactory ?? ((url) => new WebSocket(url) as unknown as SocketLike);
    this.commandPeriodMs = 1000 / (opts.commandHz ?? 50);
    this.heartbeatMs = opts.heartbeatMs ?? 500;
    this.now = opts.now ?? (() => Date.now());
    this.nowNs = opts.nowNs ?? (() => BigInt(Math.round(performance.now() * 1e6)));
  }

  connect(): void {
    this.status = "connecting";
    const sock = this.makeSocket(this.url);
    sock.binaryType = "arraybuffer";
    sock.onopen = () => {
      this.status = "open";
      for (const topic of [TOPIC_JOINTS, TOPIC_EVENTS, ...VIDEO_TOPICS]) {
        this.sendControl({ type: "session_control", op: ControlOp.Subscribe, topic });
      }
      this.onchange?.();
    };
    sock.onclose = () => {
      if (this.status !== "error") this.status = "closed";
      this.stopTimers();
      this.onchange?.();
    };
    sock.onerror = () => {
      this.status = "error";
      this.onchange?.();
    };
    sock.onmessage = (ev) => this.handleData(ev.data);
    this.socket = sock;
  }

  /** Browser entry point: start the fixed-cadence command and heartbeat
   * loops. Tests drive tickCommand()/heartbeat() directly instead. */
  start(): void {
    this.connect();
    this.timers.push(setInterval(() => this.tickCommand(), this.commandPeriodMs));
    this.timers.push(setInterval(() => this.heartbeat(), this.heartbeatMs));
  }

  close(): void {
    this.stopTimers();
    this.socket?.close();
  }

  private stopTimers(): void {
    for (const t of this.timers) clearInterval(t);
    this.timers = [];
  }

  get isOpen(): boolean {
    return this.socket !== null && this.socket.readyState === WS_OPEN && this.status === "open";
  }

  /** One step of the steering loop; input while disconnected is discarded. */
  tickCommand(): void {
    if (!this.isOpen) return;
    this.send(this.input.command());
  }

  heartbeat(): void {
    if (!this.isOpen) return;
    this.sendControl({ type: "session_control", op: ControlOp.Heartbeat, topic: "" });
  }

  /** Extra topics beyond the defaults (e.g. another operator's commands). */
  subscribe(topic: string): void {
    this.sendControl({ type: "session_control", op: ControlOp.Subscribe, topic });
  }

  /** Emit a scoring event and fold it into the local view immediately (the
   * hub does not echo a sender's own messages back). */
  sendEvent(kind: EventKind, fields: Partial<Pick<SessionEventMsg, "subtaskId" | "alpha" | "label">> = {}): boolean {
    const ev: SessionEventMsg = {
      type: "session_event",
      kind,
      subtaskId: fields.subtaskId ?? 0,
      eventTimeNs: this.nowNs(),
      alpha: fields.alpha ?? 0,
      label: fields.label ?? "",
    };
    const accepted = this.session.apply(ev, this.now());
    if (accepted) this.send(ev);
    return accepted;
  }

  send(msg: Message): void {
    if (!this.isOpen || this.socket === null) return;
    const topic = topicOf(msg);
    const seq = this.seqByTopic.get(topic) ?? 0;
    this.seqByTopic.set(topic, seq + 1);
    this.socket.send(encode(msg, { seq, sendTimeNs: this.nowNs() }));
  }

  private sendControl(msg: SessionControlMsg): void {
    this.send(msg);
  }

  sentSeq(topic: string): number {
    return this.seqByTopic.get(topic) ?? 0;
  }

  gaps(topic: string): TopicAccount {
    let acc = this.accounts.get(topic);
    if (acc === undefined) {
      acc = { received: 0, dropped: 0, outOfOrder: 0, lastSeq: null };
      this.accounts.set(topic, acc);
    }
    return acc;
  }

  /** Decode one inbound WebSocket message. Malformed bytes bump a counter
   * and nothing else: the steering loop must keep its cadence no matter
   * what arrives. */
  handleData(data: ArrayBuffer | Uint8Array): void {
    const bytes = data instanceof Uint8Array ? data : new Uint8Array(data);
    let decoded;
    try {
      decoded = decode(bytes);
    } catch (err) {
      if (err instanceof WireError) {
        this.decodeErrors += 1;
        return;
      }
      throw err;
    }
    const { msg, header } = decoded;
    const topic = topicOf(msg);
    const acc = this.gaps(topic);
    if (acc.lastSeq !== null) {
      if (header.seq <= acc.lastSeq) {
        acc.outOfOrder += 1;
        return;
      }
      acc.dropped += header.seq - acc.lastSeq - 1;
    }
    acc.lastSeq = header.seq;
    acc.received += 1;
    this.dispatch(msg, header.flags, header.sendTimeNs);
    this.onchange?.();
  }

  private dispatch(msg: Message, flags: number, sendTimeNs: bigint): void {
    switch (msg.type) {
      case "joint_state":
        this.joints = msg.values;
        break;
      case "frame":
        this.feeds.accept(msg); // stale frames are counted inside the feed
        break;
      case "session_event":
        this.session.apply(msg, this.now());
        break;
      case "session_control":
        if (msg.op === ControlOp.Heartbeat && (flags & FLAG_ECHO) !== 0) {
          // the hub echoes our probe with our own send time preserved
          this.rttMs = Number(this.nowNs() - sendTimeNs) / 1e6;
        }
        break;
      case "command_retarget":
        // another operator's commands (forwarded); nothing to show yet
        break;
    }
  }
}
