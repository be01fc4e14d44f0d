// Desk-scale stand-in for the VR controllers: pointer motion becomes hand
// pose deltas, keys toggle clutch and grippers. The clutch gates input on
// this side *and* rides the wire, where the server's retarget contract is
// the real enforcement — an unclutched command can carry any pose at all
// and the robot must hold still.

import { CommandRetarget } from "./protocol.js";

export interface InputConfig {
  /** meters of hand motion per pixel of pointer motion */
  scale: number;
  /** pointer vertical axis maps to z (screen up = world up) */
  invertY: boolean;
}

export const DEFAULT_INPUT: InputConfig = { scale: 0.0015, invertY: true };

export type Hand = "left" | "right";

const IDENTITY_QUAT: [number, number, number, number] = [1, 0, 0, 0];

export class InputMap {
  clutch = false;
  grippers: Record<Hand, boolean> = { left: false, right: false }; // true = closed
  offsets: Record<Hand, [number, number, number]> = { left: [0, 0, 0], right: [0, 0, 0] };
  activeHand: Hand = "left";

  constructor(readonly config: InputConfig = DEFAULT_INPUT) {}

  /** Pointer moved by (dx, dy) pixels; only matters while clutched. */
  pointerMove(dx: number, dy: number): void {
    if (!this.clutch) return;
    const p = this.offsets[this.activeHand];
    p[0] += dx * this.config.scale;
    p[2] += (this.config.invertY ? -dy : dy) * this.config.scale;
  }

  /** Scroll or key-driven depth axis (toward/away from the table). */
  depthMove(delta: number): void {
    if (!this.clutch) return;
    this.offsets[this.activeHand][1] += delta * this.config.scale;
  }

  setClutch(held: boolean): void {
    this.clutch = held;
  }

  toggleGripper(hand: Hand): void {
    this.grippers[hand] = !this.grippers[hand];
  }

  /** Current state as one wire command. Offsets are relative hand poses;
   * the server anchors them against the robot's pose at clutch engage. */
  command(): CommandRetarget {
    return {
      type: "command_retarget",
      leftPosition: [...this.offsets.left],
      leftQuat: IDENTITY_QUAT,
      rightPosition: [...this.offsets.right],
      rightQuat: IDENTITY_QUAT,
      clutchEngaged: this.clutch,
      leftGripperClosed: this.grippers.left,
      rightGripperClosed: this.grippers.right,
    };
  }
}

/** Keyboard layer: space = clutch, tab = hand select, q/e = grippers. */
export function applyKey(input: InputMap, key: string, down: boolean): boolean {
  switch (key) {
    case " ":
      input.setClutch(down);
      return true;
    case "Tab":
      if (down) input.activeHand = input.activeHand === "left" ? "right" : "left";
      return true;
    case "q":
      if (down) input.toggleGripper("left");
      return true;
    case "e":
      if (down) input.toggleGripper("right");
      return true;
    default:
      return false;
  }
}
