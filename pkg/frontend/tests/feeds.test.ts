import { describe, expect, it } from "vitest";

import { FeedSet } from "../src/feeds.js";
import { FrameMsg } from "../src/protocol.js";

function frame(cameraId: number, frameSeq: number): FrameMsg {
  return {
    type: "frame",
    cameraId,
    frameSeq,
    captureTimeNs: BigInt(frameSeq),
    codec: 0,
    width: 4,
    height: 4,
    payload: new Uint8Array([0xff, 0xd8, frameSeq & 0xff, 0xff, 0xd9]),
  };
}

describe("feed bookkeeping", () => {
  it("exposes the three cameras under their wire names", () => {
    const feeds = new FeedSet();
    expect(feeds.views.map((v) => v.name)).toEqual(["head", "wrist_left", "wrist_right"]);
    expect(feeds.allLive()).toBe(false);
  });

  it("keeps only the latest frame per camera", () => {
    const feeds = new FeedSet();
    feeds.accept(frame(0, 1));
    feeds.accept(frame(0, 2));
    expect(feeds.get("head").frame?.frameSeq).toBe(2);
    expect(feeds.get("head").stats.received).toBe(2);
  });

  it("counts gaps from the capture sequence numbers", () => {
    const feeds = new FeedSet();
    feeds.accept(frame(2, 10));
    feeds.accept(frame(2, 14)); // 11..13 never arrived
    expect(feeds.get("wrist_right").stats.dropped).toBe(3);
  });

  it("rejects stale frames instead of going backwards", () => {
    const feeds = new FeedSet();
    feeds.accept(frame(1, 5));
    expect(feeds.accept(frame(1, 5))).toBe(false);
    expect(feeds.accept(frame(1, 3))).toBe(false);
    expect(feeds.get("wrist_left").frame?.frameSeq).toBe(5);
    expect(feeds.get("wrist_left").stats.rejected).toBe(2);
  });

  it("ignores cameras outside the roster without crashing", () => {
    const feeds = new FeedSet();
    expect(feeds.accept(frame(7, 0))).toBe(false);
    feeds.reject(7); // also a no-op
    expect(feeds.allLive()).toBe(false);
  });

  it("goes live once every camera has shown a frame", () => {
    const feeds = new FeedSet();
    feeds.accept(frame(0, 0));
    feeds.accept(frame(1, 0));
    expect(feeds.allLive()).toBe(false);
    feeds.accept(frame(2, 0));
    expect(feeds.allLive()).toBe(true);
  });
});
