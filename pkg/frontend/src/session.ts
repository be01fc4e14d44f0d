// Live session panel state, driven by the event stream. The server's
// scoring engine is authoritative (it re-stamps events with its own clock
// and rejects illegal ones); this view mirrors the same rules so the
// operator sees the running β timer and the accumulating score without a
// round trip. Both sides compute s/β·α, so they agree to well past the
// 4 decimals we display.

import { EventKind, SessionEventMsg } from "./protocol.js";

export interface SubtaskSpec {
  id: number;
  name: string;
  components: [string, number][]; // label, points — 5 per subtask in total
}

export const SUBTASKS: SubtaskSpec[] = [
  { id: 1, name: "tablecloth unfolding", components: [["unfold tablecloth", 5]] },
  {
    id: 2,
    name: "container opening",
    components: [
      ["unlock two sides", 3],
      ["remove lid", 2],
    ],
  },
  {
    id: 3,
    name: "pizza packing",
    components: [
      ["place pizza", 1],
      ["align lid", 2],
      ["lock two sides", 2],
    ],
  },
];

export const ALPHAS = { inPerson: 0.5, remote: 1.0, autonomous: 4.0 } as const;

export function pointsFor(subtaskId: number, label: string): number | null {
  const spec = SUBTASKS.find((s) => s.id === subtaskId);
  const hit = spec?.components.find(([name]) => name === label);
  return hit ? hit[1] : null;
}

export interface SubtaskView {
  subtaskId: number;
  s: number;
  betaS: number | null;
  alpha: number;
  score: number; // 0 when untimed
}

export interface ActiveSubtask {
  subtaskId: number;
  alpha: number;
  startedAtMs: number;
  achieved: string[];
  s: number;
}

export class SessionView {
  round = 0; // 0 = no round yet
  roundOpen = false;
  active: ActiveSubtask | null = null;
  completed: SubtaskView[] = []; // across all rounds
  lastError: string | null = null;
  private completedInRound = 0;
  private lastAlpha = 1.0;

  /** Fold one event into the view; timestamps come from the caller so tests
   * and the render loop share one clock. Returns false for events this view
   * considers illegal (the server will have rejected them too). */
  apply(ev: SessionEventMsg, nowMs: number): boolean {
    this.lastError = null;
    switch (ev.kind) {
      case EventKind.RoundStart:
        if (this.roundOpen) return this.fail("round already open");
        this.round += 1;
        this.roundOpen = true;
        this.active = null;
        this.completedInRound = 0;
        return true;
      case EventKind.SubtaskStart: {
        if (!this.roundOpen) return this.fail("no open round");
        if (this.active) return this.fail(`subtask ${this.active.subtaskId} still running`);
        if (this.completedInRound >= 3) return this.fail("round already played all 3 subtasks");
        const expected = this.completedInRound + 1;
        if (ev.subtaskId !== expected) return this.fail(`expected subtask ${expected}, got ${ev.subtaskId}`);
        this.active = { subtaskId: ev.subtaskId, alpha: ev.alpha, startedAtMs: nowMs, achieved: [], s: 0 };
        this.lastAlpha = ev.alpha;
        return true;
      }
      case EventKind.ComponentAchieved: {
        if (!this.active) return this.fail("no subtask running");
        if (this.active.achieved.includes(ev.label)) return this.fail(`"${ev.label}" already achieved`);
        const points = pointsFor(this.active.subtaskId, ev.label);
        if (points === null) return this.fail(`"${ev.label}" is not part of subtask ${this.active.subtaskId}`);
        this.active.achieved.push(ev.label);
        this.active.s += points;
        return true;
      }
      case EventKind.SubtaskComplete: {
        if (!this.active) return this.fail("no subtask running");
        const betaS = (nowMs - this.active.startedAtMs) / 1000;
        this.completed.push({
          subtaskId: this.active.subtaskId,
          s: this.active.s,
          betaS,
          alpha: this.active.alpha,
          score: betaS > 0 ? (this.active.s / betaS) * this.active.alpha : 0,
        });
        this.active = null;
        this.completedInRound += 1;
        return true;
      }
      case EventKind.RoundFinish: {
        if (!this.roundOpen) return this.fail("no open round");
        if (this.active) {
          // mid-subtask finish: achieved points stand, but the entry is untimed
          this.completed.push({
            subtaskId: this.active.subtaskId,
            s: this.active.s,
            betaS: null,
            alpha: this.active.alpha,
            score: 0,
          });
          this.completedInRound += 1;
          this.active = null;
        }
        // subtasks never attempted appear as empty rows, like the scorecard
        while (this.completedInRound < 3) {
          this.completedInRound += 1;
          this.completed.push({
            subtaskId: this.completedInRound,
            s: 0,
            betaS: null,
            alpha: this.lastAlpha,
            score: 0,
          });
        }
        this.roundOpen = false;
        return true;
      }
      default:
        return this.fail(`unknown event kind ${ev.kind}`);
    }
  }

  private fail(reason: string): boolean {
    this.lastError = reason;
    return false;
  }

  /** Running β of the active subtask, seconds. */
  runningBetaS(nowMs: number): number {
    return this.active ? (nowMs - this.active.startedAtMs) / 1000 : 0;
  }

  totalScore(): number {
    return this.completed.reduce((acc, r) => acc + r.score, 0);
  }
}

export function formatScore(score: number): string {
  return score.toFixed(4);
}

export function formatBeta(betaS: number | null): string {
  if (betaS === null) return "–";
  const m = Math.floor(betaS / 60);
  const s = betaS - m * 60;
  return `${m}'${s.toFixed(1).padStart(4, "0")}''`;
}
