// End-to-end against the real server: spawn `wbcd serve`, connect through
// the WebSocket bridge exactly as the browser does, and check the operator-
// facing contracts — feeds live fast, clutch release freezes the robot,
// session events propagate, and commands stay lossless under video load.

import { ChildProcess, spawn } from "node:child_process";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ConsoleClient, SocketLike } from "../src/client.js";
import { EventKind, TOPIC_COMMANDS, TOPIC_JOINTS } from "../src/protocol.js";

const here = dirname(fileURLToPath(import.meta.url));
const repoRoot = join(here, "..", "..");
const python = process.env.PYTHON ?? "python3";

const tcpPort = 18100 + (process.pid % 700);
const wsPort = tcpPort + 1;
const wsUrl = `ws://127.0.0.1:${wsPort}`;

let server: ChildProcess;
let serverLog = "";

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function waitFor(check: () => boolean, timeoutMs: number, what: string): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (check()) return;
    await sleep(10);
  }
  throw new Error(`timed out after ${timeoutMs} ms waiting for ${what}\nserver log:\n${serverLog}`);
}

interface Harness {
  client: ConsoleClient;
  stop: () => void;
}

const harnesses: Harness[] = [];

async function openConsole(): Promise<ConsoleClient> {
  const client = new ConsoleClient({
    url: wsUrl,
    socketFactory: (url) => new WebSocket(url) as unknown as SocketLike,
  });
  client.connect();
  // keep the peer alive on the server (reaped after 3 missed heartbeats)
  const beat = setInterval(() => client.heartbeat(), 200);
  harnesses.push({ client, stop: () => clearInterval(beat) });
  await waitFor(() => client.status === "open", 5_000, "websocket open");
  return client;
}

beforeAll(async () => {
  server = spawn(
    python,
    ["-m", "wbcd", "serve", "--port", String(tcpPort), "--ws-port", String(wsPort), "--ticks", "3000"],
    { cwd: repoRoot, stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stdout?.on("data", (chunk) => (serverLog += chunk));
  server.stderr?.on("data", (chunk) => (serverLog += chunk));

  // readiness = the bridge accepts a websocket handshake
  const deadline = Date.now() + 15_000;
  let lastErr: unknown = null;
  while (Date.now() < deadline) {
    if (server.exitCode !== null) throw new Error(`server exited early (${server.exitCode}):\n${serverLog}`);
    try {
      await new Promise<void>((resolve, reject) => {
        const probe = new WebSocket(wsUrl);
        probe.on("open", () => {
          probe.close();
          resolve();
        });
        probe.on("error", reject);
      });
      return;
    } catch (err) {
      lastErr = err;
      await sleep(150);
    }
  }
  throw new Error(`server never came up: ${lastErr}\n${serverLog}`);
});

afterAll(async () => {
  for (const h of harnesses) {
    h.stop();
    h.client.close();
  }
  if (server && server.exitCode === null) {
    server.kill("SIGTERM");
    await new Promise((resolve) => server.once("exit", resolve));
  }
});

describe("console loopback", () => {
  it("renders all three labeled feeds within 2 s of connecting", async () => {
    const client = await openConsole();
    const t0 = Date.now();
    await waitFor(() => client.feeds.allLive(), 2_000, "three live feeds");
    expect(Date.now() - t0).toBeLessThan(2_000);

    for (const name of ["head", "wrist_left", "wrist_right"] as const) {
      const view = client.feeds.get(name);
      expect(view.frame).not.toBeNull();
      expect(view.frame!.codec).toBe(0);
      // JFIF SOI/EOI framing — these really are images
      expect(view.frame!.payload[0]).toBe(0xff);
      expect(view.frame!.payload[1]).toBe(0xd8);
      expect(view.frame!.width).toBeGreaterThan(0);
    }
  });

  it("leaves the robot motionless when wild input arrives unclutched", async () => {
    const client = await openConsole();
    await waitFor(() => client.joints !== null, 3_000, "joint state");
    await sleep(100); // let any startup slew settle
    const before = client.joints!.slice();

    // wild pointer motion with the clutch released: poses on the wire are
    // arbitrary and large, and the robot must not move a single bit
    client.input.setClutch(false);
    for (let i = 0; i < 60; i++) {
      client.send({
        type: "command_retarget",
        leftPosition: [Math.sin(i) * 5, i * 0.3, -4],
        leftQuat: [0, 1, 0, 0],
        rightPosition: [9, -9, 9],
        rightQuat: [0.5, 0.5, 0.5, 0.5],
        clutchEngaged: false,
        leftGripperClosed: false,
        rightGripperClosed: false,
      });
      await sleep(5);
    }
    await sleep(200);
    const after = client.joints!;
    expect(Array.from(after.slice(0, 14))).toEqual(Array.from(before.slice(0, 14)));
  });

  it("propagates session events to every operator station", async () => {
    const driver = await openConsole();
    const watcher = await openConsole();

    expect(driver.sendEvent(EventKind.RoundStart)).toBe(true);
    expect(driver.sendEvent(EventKind.SubtaskStart, { subtaskId: 1, alpha: 1 })).toBe(true);
    await sleep(600);
    expect(driver.sendEvent(EventKind.ComponentAchieved, { label: "unfold tablecloth" })).toBe(true);
    expect(driver.sendEvent(EventKind.SubtaskComplete)).toBe(true);

    await waitFor(() => watcher.session.completed.length === 1, 3_000, "forwarded completion");
    const mine = driver.session.completed[0];
    const theirs = watcher.session.completed[0];
    expect(theirs.subtaskId).toBe(1);
    expect(theirs.s).toBe(5);
    expect(theirs.alpha).toBe(1);
    // both stations timed the same subtask against their own clocks; the
    // exact s/β·α display arithmetic is pinned in session.test.ts
    expect(Math.abs(theirs.betaS! - mine.betaS!)).toBeLessThan(0.3);
    expect(mine.score).toBeGreaterThan(0);
  });

  it("loses no commands while every video topic is streaming", async () => {
    const driver = await openConsole();
    const watcher = await openConsole(); // all video by default…
    watcher.subscribe(TOPIC_COMMANDS); // …plus the driver's command stream

    driver.input.setClutch(true);
    const steer = setInterval(() => {
      driver.input.pointerMove(3, -2);
      driver.tickCommand();
    }, driver.commandPeriodMs);
    try {
      await sleep(2_500);
    } finally {
      clearInterval(steer);
    }
    await sleep(300);

    const commands = watcher.gaps(TOPIC_COMMANDS);
    expect(commands.received).toBeGreaterThan(80); // ~50 Hz for 2.5 s
    expect(commands.dropped).toBe(0);
    expect(commands.outOfOrder).toBe(0);

    // video genuinely flowed the whole time on both stations
    const watched = watcher.feeds.views.reduce((acc, v) => acc + v.stats.received, 0);
    expect(watched).toBeGreaterThan(50);
    expect(driver.gaps(TOPIC_JOINTS).dropped).toBe(0);
    expect(driver.decodeErrors).toBe(0);
  });
});
