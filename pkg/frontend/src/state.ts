/** Editor state: selected candidate, box edits, undo history, locks. */

import { Box, Layout, clampBox } from "./schema.js";

export const UNDO_LIMIT = 50;

export type DragMode = "move" | "scale";

export class EditorState {
  private history: Box[][] = [];
  private boxes: Box[] = [];
  private lockedIndices = new Set<number>();
  canvas: [number, number] = [128, 128];

  load(layout: Layout): void {
    this.canvas = layout.canvas;
    this.boxes = layout.boxes.map((b) => ({ ...b }));
    this.history = [];
    this.lockedIndices.clear();
  }

  current(): Layout {
    return { canvas: this.canvas, boxes: this.boxes.map((b) => ({ ...b })) };
  }

  get edited(): boolean {
    return this.history.length > 0;
  }

  toggleLock(index: number): boolean {
    if (this.lockedIndices.has(index)) {
      this.lockedIndices.delete(index);
      return false;
    }
    this.lockedIndices.add(index);
    return true;
  }

  isLocked(index: number): boolean {
    return this.lockedIndices.has(index);
  }

  locks(): { index: number; box: number[] }[] {
    return [...this.lockedIndices]
      .sort((a, b) => a - b)
      .map((i) => ({
        index: i,
        box: [this.boxes[i].x, this.boxes[i].y, this.boxes[i].w, this.boxes[i].h],
      }));
  }

  /** Apply a move or scale drag to one box; clamped to the canvas. */
  applyDrag(index: number, mode: DragMode, dx: number, dy: number): Box {
    if (index < 0 || index >= this.boxes.length) {
      throw new Error(`no box at index ${index}`);
    }
    this.pushHistory();
    const b = this.boxes[index];
    const next =
      mode === "move"
        ? { ...b, x: b.x + dx, y: b.y + dy }
        : { ...b, w: b.w + dx, h: b.h + dy };
    this.boxes[index] = clampBox(next, this.canvas);
    return { ...this.boxes[index] };
  }

  undo(): boolean {
    const prev = this.history.pop();
    if (!prev) {
      return false;
    }
    this.boxes = prev;
    return true;
  }

  get undoDepth(): number {
    return this.history.length;
  }

  private pushHistory(): void {
    this.history.push(this.boxes.map((b) => ({ ...b })));
    if (this.history.length > UNDO_LIMIT) {
      this.history.shift();
    }
  }
}

/** Trailing-edge debounce used for recompose-on-edit. */
export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs: number,
  timers: { set: typeof setTimeout; clear: typeof clearTimeout } = {
    set: setTimeout,
    clear: clearTimeout,
  },
): (...args: A) => void {
  let handle: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    if (handle !== undefined) {
      timers.clear(handle);
    }
    handle = timers.set(() => fn(...args), waitMs);
  };
}
