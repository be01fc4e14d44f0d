// Binary wire codec for the teleoperation link, byte-compatible with the
// server. Every frame is a 24-byte little-endian header followed by a
// type-specific payload:
//
//   magic        4 bytes  "WBTP"
//   version      u8       1
//   msg_type     u8       MessageType
//   flags        u16      bit 0: echo (hub returning a heartbeat)
//   seq          u32      per-topic monotonic counter
//   send_time_ns u64      sender monotonic clock
//   payload_len  u32
//
// Decoding is total: any byte string either yields a message or throws one
// of the WireError subclasses below, never anything else.

export const MAGIC = new Uint8Array([0x57, 0x42, 0x54, 0x50]); // "WBTP"
export const VERSION = 1;
export const HEADER_SIZE = 24;
export const MAX_PAYLOAD = 16 * 1024 * 1024;
export const FLAG_ECHO = 0x0001;

export enum MessageType {
  CommandRetarget = 1,
  JointState = 2,
  Frame = 3,
  SessionControl = 4,
  SessionEvent = 5,
}

export enum ControlOp {
  Subscribe = 1,
  Unsubscribe = 2,
  Heartbeat = 3,
}

export enum EventKind {
  RoundStart = 1,
  SubtaskStart = 2,
  ComponentAchieved = 3,
  SubtaskComplete = 4,
  RoundFinish = 5,
}

export class WireError extends Error {}
export class BadMagic extends WireError {}
export class UnsupportedVersion extends WireError {}
export class UnknownMsgType extends WireError {}
export class TruncatedFrame extends WireError {}
export class LengthMismatch extends WireError {}
export class PayloadTooLarge extends WireError {}

export interface CommandRetarget {
  type: "command_retarget";
  leftPosition: [number, number, number];
  leftQuat: [number, number, number, number]; // w, x, y, z
  rightPosition: [number, number, number];
  rightQuat: [number, number, number, number];
  clutchEngaged: boolean;
  leftGripperClosed: boolean;
  rightGripperClosed: boolean;
}

export interface JointStateMsg {
  type: "joint_state";
  values: Float64Array; // left 7, right 7, grippers 2, head 2
}

export interface FrameMsg {
  type: "frame";
  cameraId: number; // 0 head, 1 wrist_left, 2 wrist_right
  frameSeq: number;
  captureTimeNs: bigint;
  codec: number; // 0 = JFIF
  width: number;
  height: number;
  payload: Uint8Array;
}

export interface SessionControlMsg {
  type: "session_control";
  op: ControlOp;
  topic: string;
}

export interface SessionEventMsg {
  type: "session_event";
  kind: EventKind;
  subtaskId: number; // 1..3 where applicable, else 0
  eventTimeNs: bigint;
  alpha: number; // operation coefficient for SubtaskStart, else 0
  label: string; // component label for ComponentAchieved, else ""
}

export type Message = CommandRetarget | JointStateMsg | FrameMsg | SessionControlMsg | SessionEventMsg;

export interface FrameHeader {
  msgType: number;
  flags: number;
  seq: number;
  sendTimeNs: bigint;
  payloadLen: number;
}

export interface Decoded {
  msg: Message;
  header: FrameHeader;
  consumed: number;
}

const COMMAND_PAYLOAD_SIZE = 14 * 8 + 3; // 115
const JOINT_PAYLOAD_SIZE = 18 * 8; // 144
const FRAME_HEAD_SIZE = 18; // <BIQBHH
const EVENT_HEAD_SIZE = 20; // <BBQdH

const utf8Encode = new TextEncoder();
// fatal: a topic or label that is not valid UTF-8 is a protocol violation,
// not something to silently replace.
const utf8Decode = new TextDecoder("utf-8", { fatal: true });

function boolByte(view: DataView, offset: number): boolean {
  const b = view.getUint8(offset);
  if (b !== 0 && b !== 1) throw new LengthMismatch(`boolean byte must be 0 or 1, got ${b}`);
  return b === 1;
}

function isJfif(body: Uint8Array): boolean {
  return (
    body.length >= 4 &&
    body[0] === 0xff &&
    body[1] === 0xd8 &&
    body[body.length - 2] === 0xff &&
    body[body.length - 1] === 0xd9
  );
}

// --- payload encoders -------------------------------------------------------

function encodePayload(msg: Message): Uint8Array {
  switch (msg.type) {
    case "command_retarget": {
      const out = new Uint8Array(COMMAND_PAYLOAD_SIZE);
      const view = new DataView(out.buffer);
      const doubles = [...msg.leftPosition, ...msg.leftQuat, ...msg.rightPosition, ...msg.rightQuat];
      doubles.forEach((v, i) => view.setFloat64(i * 8, v, true));
      view.setUint8(112, msg.clutchEngaged ? 1 : 0);
      view.setUint8(113, msg.leftGripperClosed ? 1 : 0);
      view.setUint8(114, msg.rightGripperClosed ? 1 : 0);
      return out;
    }
    case "joint_state": {
      if (msg.values.length !== 18) throw new LengthMismatch(`joint state needs 18 values, got ${msg.values.length}`);
      const out = new Uint8Array(JOINT_PAYLOAD_SIZE);
      const view = new DataView(out.buffer);
      msg.values.forEach((v, i) => view.setFloat64(i * 8, v, true));
      return out;
    }
    case "frame": {
      const out = new Uint8Array(FRAME_HEAD_SIZE + msg.payload.length);
      const view = new DataView(out.buffer);
      view.setUint8(0, msg.cameraId);
      view.setUint32(1, msg.frameSeq, true);
      view.setBigUint64(5, msg.captureTimeNs, true);
      view.setUint8(13, msg.codec);
      view.setUint16(14, msg.width, true);
      view.setUint16(16, msg.height, true);
      out.set(msg.payload, FRAME_HEAD_SIZE);
      return out;
    }
    case "session_control": {
      const topic = utf8Encode.encode(msg.topic);
      const out = new Uint8Array(3 + topic.length);
      const view = new DataView(out.buffer);
      view.setUint8(0, msg.op);
      view.setUint16(1, topic.length, true);
      out.set(topic, 3);
      return out;
    }
    case "session_event": {
      const label = utf8Encode.encode(msg.label);
      const out = new Uint8Array(EVENT_HEAD_SIZE + label.length);
      const view = new DataView(out.buffer);
      view.setUint8(0, msg.kind);
      view.setUint8(1, msg.subtaskId);
      view.setBigUint64(2, msg.eventTimeNs, true);
      view.setFloat64(10, msg.alpha, true);
      view.setUint16(18, label.length, true);
      out.set(label, EVENT_HEAD_SIZE);
      return out;
    }
  }
}

// --- payload decoders -------------------------------------------------------

function decodeCommand(payload: Uint8Array): CommandRetarget {
  if (payload.length !== COMMAND_PAYLOAD_SIZE)
    throw new LengthMismatch(`CommandRetarget payload must be ${COMMAND_PAYLOAD_SIZE} bytes, got ${payload.length}`);
  const view = new DataView(payload.buffer, payload.byteOffset, payload.byteLength);
  const d = (i: number) => view.getFloat64(i * 8, true);
  return {
    type: "command_retarget",
    leftPosition: [d(0), d(1), d(2)],
    leftQuat: [d(3), d(4), d(5), d(6)],
    rightPosition: [d(7), d(8), d(9)],
    rightQuat: [d(10), d(11), d(12), d(13)],
    clutchEngaged: boolByte(view, 112),
    leftGripperClosed: boolByte(view, 113),
    rightGripperClosed: boolByte(view, 114),
  };
}

function decodeJointState(payload: Uint8Array): JointStateMsg {
  if (payload.length !== JOINT_PAYLOAD_SIZE)
    throw new LengthMismatch(`JointState payload must be ${JOINT_PAYLOAD_SIZE} bytes, got ${payload.length}`);
  const view = new DataView(payload.buffer, payload.byteOffset, payload.byteLength);
  const values = new Float64Array(18);
  for (let i = 0; i < 18; i++) values[i] = view.getFloat64(i * 8, true);
  return { type: "joint_state", values };
}

function decodeFrame(payload: Uint8Array): FrameMsg {
  if (payload.length < FRAME_HEAD_SIZE)
    throw new LengthMismatch(`Frame payload needs at least ${FRAME_HEAD_SIZE} bytes, got ${payload.length}`);
  const view = new DataView(payload.buffer, payload.byteOffset, payload.byteLength);
  const width = view.getUint16(14, true);
  const height = view.getUint16(16, true);
  if (width === 0 || height === 0) throw new LengthMismatch("Frame width/height must be positive");
  const codec = view.getUint8(13);
  const body = payload.slice(FRAME_HEAD_SIZE);
  if (codec === 0 && !isJfif(body)) throw new LengthMismatch("codec 0 payload must be a JFIF stream (SOI…EOI)");
  return {
    type: "frame",
    cameraId: view.getUint8(0),
    frameSeq: view.getUint32(1, true),
    captureTimeNs: view.getBigUint64(5, true),
    codec,
    width,
    height,
    payload: body,
  };
}

function decodeText(raw: Uint8Array, what: string): string {
  try {
    return utf8Decode.decode(raw);
  } catch {
    throw new LengthMismatch(`${what} is not valid UTF-8`);
  }
}

function decodeControl(payload: Uint8Array): SessionControlMsg {
  if (payload.length < 3)
    throw new LengthMismatch(`SessionControl payload needs at least 3 bytes, got ${payload.length}`);
  const view = new DataView(payload.buffer, payload.byteOffset, payload.byteLength);
  const op = view.getUint8(0);
  if (op < ControlOp.Subscribe || op > ControlOp.Heartbeat)
    throw new LengthMismatch(`unknown SessionControl op ${op}`);
  const topicLen = view.getUint16(1, true);
  const raw = payload.slice(3);
  if (raw.length !== topicLen)
    throw new LengthMismatch(`SessionControl topic length ${topicLen} vs ${raw.length} actual`);
  return { type: "session_control", op, topic: decodeText(raw, "SessionControl topic") };
}

function decodeEvent(payload: Uint8Array): SessionEventMsg {
  if (payload.length < EVENT_HEAD_SIZE)
    throw new LengthMismatch(`SessionEvent payload needs at least ${EVENT_HEAD_SIZE} bytes, got ${payload.length}`);
  const view = new DataView(payload.buffer, payload.byteOffset, payload.byteLength);
  const kind = view.getUint8(0);
  if (kind < EventKind.RoundStart || kind > EventKind.RoundFinish)
    throw new LengthMismatch(`unknown SessionEvent kind ${kind}`);
  const labelLen = view.getUint16(18, true);
  const raw = payload.slice(EVENT_HEAD_SIZE);
  if (raw.length !== labelLen)
    throw new LengthMismatch(`SessionEvent label length ${labelLen} vs ${raw.length} actual`);
  return {
    type: "session_event",
    kind,
    subtaskId: view.getUint8(1),
    eventTimeNs: view.getBigUint64(2, true),
    alpha: view.getFloat64(10, true),
    label: decodeText(raw, "SessionEvent label"),
  };
}

const MSG_TYPE_OF: Record<Message["type"], MessageType> = {
  command_retarget: MessageType.CommandRetarget,
  joint_state: MessageType.JointState,
  frame: MessageType.Frame,
  session_control: MessageType.SessionControl,
  session_event: MessageType.SessionEvent,
};

export interface EncodeOptions {
  seq?: number;
  sendTimeNs?: bigint;
  flags?: number;
}

export function encode(msg: Message, opts: EncodeOptions = {}): Uint8Array {
  const payload = encodePayload(msg);
  if (payload.length > MAX_PAYLOAD)
    throw new PayloadTooLarge(`payload of ${payload.length} bytes exceeds ${MAX_PAYLOAD}`);
  const out = new Uint8Array(HEADER_SIZE + payload.length);
  const view = new DataView(out.buffer);
  out.set(MAGIC, 0);
  view.setUint8(4, VERSION);
  view.setUint8(5, MSG_TYPE_OF[msg.type]);
  view.setUint16(6, opts.flags ?? 0, true);
  view.setUint32(8, opts.seq ?? 0, true);
  view.setBigUint64(12, opts.sendTimeNs ?? 0n, true);
  view.setUint32(20, payload.length, true);
  out.set(payload, HEADER_SIZE);
  return out;
}

export function decode(data: Uint8Array, offset = 0): Decoded {
  const avail = data.length - offset;
  if (avail < HEADER_SIZE)
    throw new TruncatedFrame(`need ${HEADER_SIZE} header bytes, have ${Math.max(avail, 0)}`);
  const view = new DataView(data.buffer, data.byteOffset + offset, avail);
  for (let i = 0; i < 4; i++) {
    if (view.getUint8(i) !== MAGIC[i]) throw new BadMagic("frame does not start with WBTP");
  }
  const version = view.getUint8(4);
  if (version !== VERSION) throw new UnsupportedVersion(`wire version ${version}, expected ${VERSION}`);
  const msgType = view.getUint8(5);
  const flags = view.getUint16(6, true);
  const seq = view.getUint32(8, true);
  const sendTimeNs = view.getBigUint64(12, true);
  const payloadLen = view.getUint32(20, true);
  if (payloadLen > MAX_PAYLOAD)
    throw new LengthMismatch(`declared payload of ${payloadLen} bytes exceeds ${MAX_PAYLOAD}`);
  if (avail < HEADER_SIZE + payloadLen)
    throw new TruncatedFrame(`need ${HEADER_SIZE + payloadLen} bytes, have ${avail}`);
  const payload = data.slice(offset + HEADER_SIZE, offset + HEADER_SIZE + payloadLen);

  let msg: Message;
  switch (msgType) {
    case MessageType.CommandRetarget:
      msg = decodeCommand(payload);
      break;
    case MessageType.JointState:
      msg = decodeJointState(payload);
      break;
    case MessageType.Frame:
      msg = decodeFrame(payload);
      break;
    case MessageType.SessionControl:
      msg = decodeControl(payload);
      break;
    case MessageType.SessionEvent:
      msg = decodeEvent(payload);
      break;
    default:
      throw new UnknownMsgType(`unknown message type ${msgType}`);
  }
  return { msg, header: { msgType, flags, seq, sendTimeNs, payloadLen }, consumed: HEADER_SIZE + payloadLen };
}

// --- topics -----------------------------------------------------------------

export const CAMERA_NAMES = ["head", "wrist_left", "wrist_right"] as const;
export type CameraName = (typeof CAMERA_NAMES)[number];

export const TOPIC_COMMANDS = "commands";
export const TOPIC_JOINTS = "joints";
export const TOPIC_EVENTS = "events";
export const TOPIC_CONTROL = "_control";
export const VIDEO_TOPICS = CAMERA_NAMES.map((name) => `video/${name}`);

/** Canonical topic for a message; the wire carries no topic field. */
export function topicOf(msg: Message): string {
  switch (msg.type) {
    case "command_retarget":
      return TOPIC_COMMANDS;
    case "joint_state":
      return TOPIC_JOINTS;
    case "frame":
      return msg.cameraId < CAMERA_NAMES.length ? VIDEO_TOPICS[msg.cameraId] : `video/${msg.cameraId}`;
    case "session_event":
      return TOPIC_EVENTS;
    case "session_control":
      return TOPIC_CONTROL;
  }
}
