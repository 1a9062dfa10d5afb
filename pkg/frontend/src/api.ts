/** Typed client for the layout service; all geometry stays server-side. */

import { Layout, boxesToArrays, boxesFromArrays } from "./schema.js";

export interface Candidate {
  layout: Layout;
  previewPngB64: string;
  score: number;
}

export interface ComposeResult {
  pngB64: string;
  overlap: number;
}

export interface FontInfo {
  id: string;
  name: string;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async post(path: string, body: unknown): Promise<any> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        detail = (await resp.json()).detail ?? detail;
      } catch {
        /* non-JSON error body */
      }
      throw new Error(`${path} failed (${resp.status}): ${detail}`);
    }
    return resp.json();
  }

  private async get(path: string): Promise<any> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`);
    if (!resp.ok) {
      throw new Error(`${path} failed (${resp.status}): ${resp.statusText}`);
    }
    return resp.json();
  }

  async health(): Promise<{ status: string; n_max: number; model: string | null }> {
    return this.get("/api/health");
  }

  async fonts(): Promise<FontInfo[]> {
    const body = await this.get("/api/fonts");
    return body.fonts;
  }

  async sample(
    text: string,
    fontId: string,
    k: number,
    seed?: number,
    locks?: { index: number; box: number[] }[],
  ): Promise<Candidate[]> {
    const body = await this.post("/api/sample", {
      text,
      font_id: fontId,
      k,
      ...(seed !== undefined ? { seed } : {}),
      ...(locks && locks.length ? { locks } : {}),
    });
    return body.candidates.map((c: any) => ({
      layout: {
        canvas: [c.layout.canvas[0], c.layout.canvas[1]] as [number, number],
        boxes: boxesFromArrays(c.layout.boxes),
      },
      previewPngB64: c.preview_png_b64,
      score: c.score,
    }));
  }

  async compose(text: string, fontId: string, layout: Layout): Promise<ComposeResult> {
    const body = await this.post("/api/compose", {
      text,
      font_id: fontId,
      layout: { canvas: layout.canvas, boxes: boxesToArrays(layout.boxes) },
    });
    return { pngB64: body.png_b64, overlap: body.overlap };
  }
}
