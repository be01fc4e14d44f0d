// Camera feed state: latest frame per camera plus the counters the operator
// watches when a link degrades. Decode problems increment a counter and drop
// the one frame — they must never take the stream (or the command loop) down.

import { CAMERA_NAMES, CameraName, FrameMsg } from "./protocol.js";

export interface FeedStats {
  received: number;
  dropped: number; // sequence gaps: frames the server sent that never arrived
  rejected: number; // frames that arrived malformed and were discarded
  lastSeq: number | null;
}

export interface FeedView {
  name: CameraName;
  frame: FrameMsg | null;
  stats: FeedStats;
}

function emptyStats(): FeedStats {
  return { received: 0, dropped: 0, rejected: 0, lastSeq: null };
}

export class FeedSet {
  readonly views: FeedView[];

  constructor() {
    this.views = CAMERA_NAMES.map((name) => ({ name, frame: null, stats: emptyStats() }));
  }

  /** Store a frame as the camera's latest; stale seqs are rejected. */
  accept(frame: FrameMsg): boolean {
    const view = this.views[frame.cameraId];
    if (view === undefined) return false; // not one of our three cameras
    const s = view.stats;
    if (s.lastSeq !== null) {
      if (frame.frameSeq <= s.lastSeq) {
        s.rejected += 1;
        return false;
      }
      s.dropped += frame.frameSeq - s.lastSeq - 1;
    }
    s.lastSeq = frame.frameSeq;
    s.received += 1;
    view.frame = frame;
    return true;
  }

  reject(cameraId: number): void {
    const view = this.views[cameraId];
    if (view !== undefined) view.stats.rejected += 1;
  }

  get(name: CameraName): FeedView {
    const view = this.views.find((v) => v.name === name);
    if (view === undefined) throw new Error(`unknown camera ${name}`);
    return view;
  }

  /** True once every camera has shown at least one frame. */
  allLive(): boolean {
    return this.views.every((v) => v.frame !== null);
  }
}
