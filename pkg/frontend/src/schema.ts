/** Layout JSON schema shared with the generator's export format. */

export interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface Layout {
  canvas: [number, number];
  boxes: Box[];
}

export const CANVAS_SIZE = 128;
export const MAX_ELEMENTS = 20;

export function boxesToArrays(boxes: Box[]): number[][] {
  return boxes.map((b) => [b.x, b.y, b.w, b.h]);
}

export function boxesFromArrays(arrays: number[][]): Box[] {
  return arrays.map((a) => {
    if (a.length !== 4 || a.some((v) => typeof v !== "number" || !isFinite(v))) {
      throw new Error(`invalid box: ${JSON.stringify(a)}`);
    }
    return { x: a[0], y: a[1], w: a[2], h: a[3] };
  });
}

/** Serialize in the generator's export shape (keys sorted, Nx4 arrays). */
export function layoutToJson(layout: Layout): string {
  return JSON.stringify({
    boxes: boxesToArrays(layout.boxes),
    canvas: layout.canvas,
  });
}

export function layoutFromJson(text: string): Layout {
  const data = JSON.parse(text);
  if (!Array.isArray(data.canvas) || data.canvas.length !== 2) {
    throw new Error("layout.canvas must be [W, H]");
  }
  if (!Array.isArray(data.boxes)) {
    throw new Error("layout.boxes must be an array");
  }
  return {
    canvas: [Number(data.canvas[0]), Number(data.canvas[1])],
    boxes: boxesFromArrays(data.boxes),
  };
}

export function validateLayout(layout: Layout): string | null {
  const [wc, hc] = layout.canvas;
  if (layout.boxes.length < 1 || layout.boxes.length > MAX_ELEMENTS) {
    return `layout must have 1..${MAX_ELEMENTS} boxes`;
  }
  for (const b of layout.boxes) {
    if (!(b.x > 0 && b.x < wc && b.y > 0 && b.y < hc)) {
      return `box center (${b.x}, ${b.y}) outside the canvas`;
    }
    if (!(b.w > 0 && b.w < wc && b.h > 0 && b.h < hc)) {
      return `box size (${b.w}, ${b.h}) out of range`;
    }
  }
  return null;
}

/** Keep a box inside the canvas while preserving its size where possible. */
export function clampBox(box: Box, canvas: [number, number] = [CANVAS_SIZE, CANVAS_SIZE]): Box {
  const [wc, hc] = canvas;
  const w = Math.min(Math.max(box.w, 2), wc - 2);
  const h = Math.min(Math.max(box.h, 2), hc - 2);
  const x = Math.min(Math.max(box.x, w / 2), wc - w / 2);
  const y = Math.min(Math.max(box.y, h / 2), hc - h / 2);
  return { x, y, w, h };
}
