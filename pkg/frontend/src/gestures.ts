// Translate raw pointer events into the app's gesture vocabulary.
//
// One-thumb use drives the choices: swipe moves between pages, drag gives
// hover-like detail, tap selects, long press saves. Double-tap is left
// unbound on purpose (too slow with the non-dominant hand), so a fast
// second tap simply reports another tap.

import type { Gesture } from "./state.js";

export interface PointerSample {
  x: number;
  y: number;
  t: number; // ms
}

export const SWIPE_MIN_DISTANCE = 60;
export const SWIPE_AXIS_RATIO = 1.5; // dominant axis must win by this factor
export const LONG_PRESS_MS = 500;
export const TAP_MAX_DISTANCE = 12;
export const DRAG_MIN_DISTANCE = 12;

export type GestureHandler = (gesture: Gesture) => void;

/**
 * Stateful recognizer fed with pointer down/move/up samples. Emits at most
 * one swipe/tap/long-press per touch; drags stream while the finger moves
 * slowly across a chart.
 */
export class GestureRecognizer {
  private start: PointerSample | null = null;
  private longPressFired = false;
  private dragging = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(private readonly emit: GestureHandler,
              private readonly schedule: boolean = true) {}

  down(sample: PointerSample): void {
    this.start = sample;
    this.longPressFired = false;
    this.dragging = false;
    if (this.schedule) {
      this.timer = setTimeout(() => this.firePress(), LONG_PRESS_MS);
    }
  }

  move(sample: PointerSample): void {
    if (!this.start || this.longPressFired) return;
    const dx = sample.x - this.start.x;
    const dy = sample.y - this.start.y;
    const dist = Math.hypot(dx, dy);
    if (dist >= DRAG_MIN_DISTANCE) {
      this.cancelTimer(); // a moving finger is not a press
    }
    // slow movement reads as hover: report detail position while the
    // travel stays below swipe range
    if (dist >= DRAG_MIN_DISTANCE && dist < SWIPE_MIN_DISTANCE) {
      this.dragging = true;
      this.emit({ kind: "drag", x: sample.x, y: sample.y });
    }
  }

  up(sample: PointerSample): void {
    this.cancelTimer();
    const start = this.start;
    this.start = null;
    if (!start || this.longPressFired) return;

    const dx = sample.x - start.x;
    const dy = sample.y - start.y;
    const adx = Math.abs(dx);
    const ady = Math.abs(dy);
    const dist = Math.hypot(dx, dy);
    const held = sample.t - start.t;

    if (dist >= SWIPE_MIN_DISTANCE) {
      if (adx >= ady * SWIPE_AXIS_RATIO) {
        this.emit({ kind: "swipe", direction: dx > 0 ? "right" : "left" });
      } else if (ady >= adx * SWIPE_AXIS_RATIO) {
        // screen y grows downward: finger moving up means "next page"
        this.emit({ kind: "swipe", direction: dy < 0 ? "up" : "down" });
      }
      return; // diagonal swipes are deliberately no-ops
    }
    if (!this.schedule && held >= LONG_PRESS_MS) {
      this.emit({ kind: "long_press" });
      return;
    }
    if (dist <= TAP_MAX_DISTANCE && !this.dragging) {
      this.emit({ kind: "tap" });
    }
  }

  private firePress(): void {
    if (!this.start) return;
    this.longPressFired = true; // once per touch, release emits nothing more
    this.emit({ kind: "long_press" });
  }

  private cancelTimer(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }
}
