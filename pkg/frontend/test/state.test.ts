import { describe, expect, it, vi } from "vitest";

import { EditorState, UNDO_LIMIT, debounce } from "../src/state.js";
import type { Layout } from "../src/schema.js";

function demoLayout(): Layout {
  return {
    canvas: [128, 128],
    boxes: [
      { x: 30, y: 64, w: 20, h: 20 },
      { x: 70, y: 64, w: 20, h: 20 },
    ],
  };
}

describe("EditorState", () => {
  it("starts unedited and reports the loaded layout", () => {
    const s = new EditorState();
    s.load(demoLayout());
    expect(s.edited).toBe(false);
    expect(s.current()).toEqual(demoLayout());
  });

  it("moves and scales boxes with clamping", () => {
    const s = new EditorState();
    s.load(demoLayout());
    const moved = s.applyDrag(0, "move", 5, -3);
    expect(moved).toEqual({ x: 35, y: 61, w: 20, h: 20 });
    const scaled = s.applyDrag(1, "scale", 10, 4);
    expect(scaled.w).toBe(30);
    expect(scaled.h).toBe(24);
    const clamped = s.applyDrag(0, "move", -500, 0);
    expect(clamped.x).toBe(10); // half the width from the edge
    expect(s.edited).toBe(true);
  });

  it("undo restores previous boxes and caps history", () => {
    const s = new EditorState();
    s.load(demoLayout());
    s.applyDrag(0, "move", 1, 0);
    s.applyDrag(0, "move", 1, 0);
    expect(s.undoDepth).toBe(2);
    expect(s.undo()).toBe(true);
    expect(s.current().boxes[0].x).toBe(31);
    expect(s.undo()).toBe(true);
    expect(s.current().boxes[0].x).toBe(30);
    expect(s.undo()).toBe(false);

    for (let i = 0; i < UNDO_LIMIT + 25; i++) {
      s.applyDrag(0, "move", 0.1, 0);
    }
    expect(s.undoDepth).toBe(UNDO_LIMIT);
  });

  it("tracks locks and serializes them for the sample request", () => {
    const s = new EditorState();
    s.load(demoLayout());
    expect(s.toggleLock(1)).toBe(true);
    expect(s.isLocked(1)).toBe(true);
    expect(s.locks()).toEqual([{ index: 1, box: [70, 64, 20, 20] }]);
    expect(s.toggleLock(1)).toBe(false);
    expect(s.locks()).toEqual([]);
  });

  it("load clears history and locks", () => {
    const s = new EditorState();
    s.load(demoLayout());
    s.applyDrag(0, "move", 1, 1);
    s.toggleLock(0);
    s.load(demoLayout());
    expect(s.edited).toBe(false);
    expect(s.locks()).toEqual([]);
  });
});

describe("debounce", () => {
  it("fires once on the trailing edge", () => {
    vi.useFakeTimers();
    const fn = vi.fn();
    const wrapped = debounce(fn, 100);
    wrapped();
    wrapped();
    wrapped();
    expect(fn).not.toHaveBeenCalled();
    vi.advanceTimersByTime(99);
    expect(fn).not.toHaveBeenCalled();
    vi.advanceTimersByTime(1);
    expect(fn).toHaveBeenCalledTimes(1);
    vi.useRealTimers();
  });
});
