/** Studio app: sample candidates, inspect and edit boxes, export artifacts. */

import { ApiClient, Candidate } from "./api.js";
import { orderColor } from "./color.js";
import { CANVAS_SIZE, MAX_ELEMENTS, layoutToJson } from "./schema.js";
import { DragMode, EditorState, debounce } from "./state.js";

const SCALE = 3;
const HANDLE = 10; // px, in screen space
const COMPOSE_DEBOUNCE_MS = 100;

class StudioApp {
  private api = new ApiClient();
  private state = new EditorState();
  private text = "";
  private fontId = "default";
  private candidates: Candidate[] = [];
  private selected = -1;
  private overlayOn = true;
  private currentPngB64 = "";
  private overlap = 0;
  private sampling = false;
  private drag: { index: number; mode: DragMode; lastX: number; lastY: number } | null = null;

  private readonly recompose = debounce(() => void this.compose(), COMPOSE_DEBOUNCE_MS);

  constructor(private root: Document) {}

  async start(): Promise<void> {
    this.bindControls();
    try {
      const fonts = await this.api.fonts();
      const select = this.el<HTMLSelectElement>("font");
      select.innerHTML = "";
      for (const f of fonts) {
        const opt = this.root.createElement("option");
        opt.value = f.id;
        opt.textContent = f.name;
        select.appendChild(opt);
      }
      const health = await this.api.health();
      this.setStatus(health.model ? `model: ${health.model}` : "no model loaded");
    } catch (err) {
      this.setError(err);
    }
  }

  private el<T extends HTMLElement>(id: string): T {
    const node = this.root.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
  }

  private bindControls(): void {
    this.el<HTMLButtonElement>("sample").addEventListener("click", () => void this.sample(false));
    this.el<HTMLButtonElement>("resample").addEventListener("click", () => void this.sample(true));
    this.el<HTMLButtonElement>("undo").addEventListener("click", () => {
      if (this.state.undo()) this.afterEdit();
    });
    this.el<HTMLInputElement>("overlay").addEventListener("change", (e) => {
      this.overlayOn = (e.target as HTMLInputElement).checked;
      this.renderGrid(); // client-state only: no re-fetch
      this.drawEditor();
    });
    this.el<HTMLButtonElement>("export").addEventListener("click", () => this.exportFiles());
    const canvas = this.el<HTMLCanvasElement>("editor");
    canvas.addEventListener("mousedown", (e) => this.onMouseDown(e));
    canvas.addEventListener("mousemove", (e) => this.onMouseMove(e));
    this.root.addEventListener("mouseup", () => (this.drag = null));
  }

  private setStatus(msg: string): void {
    this.el("status").textContent = msg;
  }

  private setError(err: unknown): void {
    this.el("error").textContent = err instanceof Error ? err.message : String(err);
  }

  private clearError(): void {
    this.el("error").textContent = "";
  }

  async sample(keepLocks: boolean): Promise<void> {
    if (this.sampling) return; // at most one in-flight sample request
    this.clearError();
    this.text = this.el<HTMLInputElement>("text").value.trim();
    this.fontId = this.el<HTMLSelectElement>("font").value || "default";
    if (!this.text) {
      this.setError(new Error("enter a text first"));
      return;
    }
    if (this.text.length > MAX_ELEMENTS) {
      this.setError(new Error(`text has ${this.text.length} glyphs; the model supports at most N = ${MAX_ELEMENTS}`));
      return;
    }
    const k = Number(this.el<HTMLInputElement>("k").value) || 4;
    const seedRaw = this.el<HTMLInputElement>("seed").value.trim();
    const seed = seedRaw === "" ? undefined : Number(seedRaw);
    const locks = keepLocks ? this.state.locks() : undefined;
    this.sampling = true;
    try {
      this.candidates = await this.api.sample(this.text, this.fontId, k, seed, locks);
      this.selected = -1;
      this.renderGrid();
    } catch (err) {
      this.setError(err);
    } finally {
      this.sampling = false;
    }
  }

  private renderGrid(): void {
    const grid = this.el("grid");
    grid.innerHTML = "";
    this.candidates.forEach((cand, idx) => {
      const card = this.root.createElement("div");
      card.className = "card" + (idx === this.selected ? " selected" : "");
      const wrap = this.root.createElement("div");
      wrap.className = "preview";
      const img = this.root.createElement("img");
      img.src = `data:image/png;base64,${cand.previewPngB64}`;
      img.width = CANVAS_SIZE * 2;
      img.height = CANVAS_SIZE * 2;
      wrap.appendChild(img);
      if (this.overlayOn) {
        wrap.appendChild(this.overlayCanvas(cand, 2));
      }
      card.appendChild(wrap);
      const label = this.root.createElement("div");
      label.textContent = `score ${cand.score.toFixed(3)}`;
      card.appendChild(label);
      const pick = this.root.createElement("button");
      pick.textContent = "edit";
      pick.addEventListener("click", () => this.select(idx));
      card.appendChild(pick);
      grid.appendChild(card);
    });
  }

  private overlayCanvas(cand: Candidate, scale: number): HTMLCanvasElement {
    const canvas = this.root.createElement("canvas");
    canvas.width = CANVAS_SIZE * scale;
    canvas.height = CANVAS_SIZE * scale;
    canvas.className = "overlay";
    const ctx = canvas.getContext("2d")!;
    const n = cand.layout.boxes.length;
    cand.layout.boxes.forEach((b, i) => {
      ctx.strokeStyle = orderColor(i, n);
      ctx.lineWidth = 2;
      ctx.strokeRect(
        (b.x - b.w / 2) * scale,
        (b.y - b.h / 2) * scale,
        b.w * scale,
        b.h * scale,
      );
    });
    return canvas;
  }

  private select(idx: number): void {
    this.selected = idx;
    const cand = this.candidates[idx];
    this.state.load(cand.layout);
    this.currentPngB64 = cand.previewPngB64;
    this.overlap = 0;
    this.renderGrid();
    this.renderLockList();
    this.drawEditor();
    void this.compose();
  }

  private renderLockList(): void {
    const list = this.el("locks");
    list.innerHTML = "";
    const layout = this.state.current();
    layout.boxes.forEach((_, i) => {
      const label = this.root.createElement("label");
      const cb = this.root.createElement("input");
      cb.type = "checkbox";
      cb.checked = this.state.isLocked(i);
      cb.addEventListener("change", () => this.state.toggleLock(i));
      label.appendChild(cb);
      label.appendChild(this.root.createTextNode(` ${this.text[i] ?? i}`));
      (label.firstChild as HTMLElement).setAttribute("data-index", String(i));
      list.appendChild(label);
    });
  }

  private drawEditor(): void {
    const canvas = this.el<HTMLCanvasElement>("editor");
    const ctx = canvas.getContext("2d")!;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    if (this.selected < 0) return;
    const img = new Image();
    img.onload = () => {
      ctx.imageSmoothingEnabled = false;
      ctx.drawImage(img, 0, 0, canvas.width, canvas.height);
      if (this.overlayOn) {
        const layout = this.state.current();
        const n = layout.boxes.length;
        layout.boxes.forEach((b, i) => {
          ctx.strokeStyle = orderColor(i, n);
          ctx.lineWidth = 2;
          ctx.strokeRect(
            (b.x - b.w / 2) * SCALE,
            (b.y - b.h / 2) * SCALE,
            b.w * SCALE,
            b.h * SCALE,
          );
          ctx.fillStyle = orderColor(i, n);
          ctx.fillRect(
            (b.x + b.w / 2) * SCALE - HANDLE / 2,
            (b.y + b.h / 2) * SCALE - HANDLE / 2,
            HANDLE,
            HANDLE,
          );
        });
      }
    };
    img.src = `data:image/png;base64,${this.currentPngB64}`;
  }

  private hitTest(px: number, py: number): { index: number; mode: DragMode } | null {
    const layout = this.state.current();
    for (let i = layout.boxes.length - 1; i >= 0; i--) {
      const b = layout.boxes[i];
      const hx = (b.x + b.w / 2) * SCALE;
      const hy = (b.y + b.h / 2) * SCALE;
      if (Math.abs(px - hx) <= HANDLE && Math.abs(py - hy) <= HANDLE) {
        return { index: i, mode: "scale" };
      }
      if (
        px >= (b.x - b.w / 2) * SCALE &&
        px <= (b.x + b.w / 2) * SCALE &&
        py >= (b.y - b.h / 2) * SCALE &&
        py <= (b.y + b.h / 2) * SCALE
      ) {
        return { index: i, mode: "move" };
      }
    }
    return null;
  }

  private onMouseDown(e: MouseEvent): void {
    if (this.selected < 0) return;
    const rect = (e.target as HTMLCanvasElement).getBoundingClientRect();
    const px = e.clientX - rect.left;
    const py = e.clientY - rect.top;
    const hit = this.hitTest(px, py);
    if (hit) {
      this.drag = { ...hit, lastX: px, lastY: py };
    }
  }

  private onMouseMove(e: MouseEvent): void {
    if (!this.drag || this.selected < 0) return;
    const rect = this.el<HTMLCanvasElement>("editor").getBoundingClientRect();
    const px = e.clientX - rect.left;
    const py = e.clientY - rect.top;
    const dx = (px - this.drag.lastX) / SCALE;
    const dy = (py - this.drag.lastY) / SCALE;
    this.drag.lastX = px;
    this.drag.lastY = py;
    this.state.applyDrag(this.drag.index, this.drag.mode, dx, dy);
    this.afterEdit();
  }

  private afterEdit(): void {
    this.drawEditor();
    this.recompose();
  }

  private async compose(): Promise<void> {
    if (this.selected < 0) return;
    try {
      const result = await this.api.compose(this.text, this.fontId, this.state.current());
      this.currentPngB64 = result.pngB64;
      this.overlap = result.overlap;
      const warn = this.el("warning");
      warn.textContent = this.overlap > 0
        ? `glyphs overlap: ${this.overlap.toFixed(0)} px`
        : "";
      this.drawEditor();
    } catch (err) {
      this.setError(err);
    }
  }

  private exportFiles(): void {
    if (this.selected < 0) return;
    const json = layoutToJson(this.state.current());
    this.download("layout.json", new Blob([json], { type: "application/json" }));
    const bytes = Uint8Array.from(atob(this.currentPngB64), (c) => c.charCodeAt(0));
    this.download("logo.png", new Blob([bytes], { type: "image/png" }));
  }

  private download(name: string, blob: Blob): void {
    const a = this.root.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = name;
    a.click();
    URL.revokeObjectURL(a.href);
  }
}

if (typeof document !== "undefined" && document.getElementById("grid")) {
  new StudioApp(document).start();
}

export { StudioApp };
