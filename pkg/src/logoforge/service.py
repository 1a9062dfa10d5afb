"""HTTP facade over a frozen model snapshot for the designer studio.

The service owns one immutable snapshot (model + discriminators + fonts);
requests only read it, so concurrent handling is safe, and a reload swaps
the snapshot reference atomically. Layout JSON matches the generator export
schema; previews travel inline as base64 PNGs.
"""

from __future__ import annotations

import base64
import io
import os
from dataclasses import dataclass

import numpy as np
import torch
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from PIL import Image
from pydantic import BaseModel, Field

from . import __version__, composition, corpus
from .composition import CANVAS_SIZE
from .corpus import MAX_ELEMENTS
from .training import Trainer

MAX_CANDIDATES = 16


@dataclass(frozen=True)
class ModelSnapshot:
    """Everything a request needs, loaded once and never mutated."""

    trainer: Trainer
    fonts: dict[str, str]       # font_id -> path
    checkpoint: str

    @classmethod
    def load(cls, ckpt_path: str, fonts: list[str] | None = None) -> "ModelSnapshot":
        trainer = Trainer.load_checkpoint(ckpt_path)
        trainer.model.eval()
        trainer.d_seq.eval()
        trainer.d_img.eval()
        for module in (trainer.model, trainer.d_seq, trainer.d_img):
            for p in module.parameters():
                p.requires_grad_(False)
        font_paths = fonts if fonts is not None else corpus.discover_fonts()
        registry = {os.path.splitext(os.path.basename(f))[0]: f
                    for f in sorted(font_paths)}
        return cls(trainer=trainer, fonts=registry,
                   checkpoint=os.path.basename(ckpt_path))

    def font_path(self, font_id: str) -> str:
        if font_id == "default":
            if not self.fonts:
                raise KeyError("no fonts available")
            return next(iter(self.fonts.values()))
        if font_id not in self.fonts:
            raise KeyError(f"unknown font_id: {font_id}")
        return self.fonts[font_id]


class BoxLock(BaseModel):
    index: int
    box: list[float] = Field(min_length=4, max_length=4)


class SampleRequest(BaseModel):
    text: str
    font_id: str = "default"
    k: int = 4
    seed: int | None = None
    locks: list[BoxLock] = Field(default_factory=list)


class ComposeRequest(BaseModel):
    text: str
    font_id: str = "default"
    layout: dict


def _png_b64(arr: np.ndarray) -> str:
    img = Image.fromarray(np.clip(np.round(arr), 0, 255).astype(np.uint8))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _validate_boxes(boxes: list[list[float]]) -> None:
    for b in boxes:
        x, y, w, h = b
        if not (0 < x < CANVAS_SIZE and 0 < y < CANVAS_SIZE
                and 0 < w < CANVAS_SIZE and 0 < h < CANVAS_SIZE):
            raise HTTPException(status_code=400,
                                detail=f"box {b} outside the open canvas range")


def create_app(ckpt_path: str | None = None,
               fonts: list[str] | None = None,
               studio_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="logoforge", version=__version__)
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    app.state.snapshot = (ModelSnapshot.load(ckpt_path, fonts)
                          if ckpt_path else None)

    def snapshot() -> ModelSnapshot:
        snap = app.state.snapshot
        if snap is None:
            raise HTTPException(status_code=503, detail="no model loaded")
        return snap

    def reload_snapshot(path: str) -> None:
        # single assignment: in-flight requests keep their old reference
        app.state.snapshot = ModelSnapshot.load(path, fonts)

    app.state.reload_snapshot = reload_snapshot

    @app.get("/api/health")
    def health():
        snap = app.state.snapshot
        return {"status": "ok", "n_max": MAX_ELEMENTS, "version": __version__,
                "model": snap.checkpoint if snap else None}

    @app.get("/api/fonts")
    def fonts_endpoint():
        snap = app.state.snapshot
        registry = snap.fonts if snap else {
            os.path.splitext(os.path.basename(f))[0]: f
            for f in sorted(fonts if fonts is not None else corpus.discover_fonts())}
        return {"fonts": [{"id": fid, "name": fid} for fid in registry]}

    @app.post("/api/sample")
    def sample(req: SampleRequest):
        snap = snapshot()
        if not (1 <= len(req.text) <= MAX_ELEMENTS):
            raise HTTPException(status_code=400,
                                detail=f"text length must be in [1, {MAX_ELEMENTS}]")
        if not (1 <= req.k <= MAX_CANDIDATES):
            raise HTTPException(status_code=400,
                                detail=f"k must be in [1, {MAX_CANDIDATES}]")
        for lock in req.locks:
            if not (0 <= lock.index < len(req.text)):
                raise HTTPException(status_code=400,
                                    detail=f"lock index {lock.index} out of range")
        _validate_boxes([lock.box for lock in req.locks])
        try:
            font = snap.font_path(req.font_id)
        except KeyError as e:
            raise HTTPException(status_code=400, detail=str(e))

        trainer = snap.trainer
        glyphs_np = np.stack([corpus.render_glyph(c, font) for c in req.text])
        glyphs = torch.as_tensor(glyphs_np, dtype=torch.float32).unsqueeze(0)
        char_ids = trainer.model.char_ids(req.text).unsqueeze(0)
        gen = torch.Generator()
        if req.seed is not None:
            gen.manual_seed(req.seed)
        else:
            gen.seed()

        candidates = []
        with torch.no_grad():
            cond = trainer.model.condition(glyphs, char_ids)
            for _ in range(req.k):
                z = torch.randn(1, trainer.cfg.d_z, generator=gen)
                boxes = trainer.model.generator(cond.sequence, z)
                boxes = (boxes * 1e4).round() / 1e4
                for lock in req.locks:  # post-generation overwrite, documented
                    boxes[0, lock.index] = torch.tensor(lock.box)
                placed = composition.place_glyphs(glyphs[0], boxes[0])
                logo = composition.compose_canvas(placed)
                score = float((trainer.d_seq(boxes, cond.holistic)
                               + trainer.d_img(logo.unsqueeze(0), cond.holistic)) / 2)
                candidates.append({
                    "layout": {"canvas": [CANVAS_SIZE, CANVAS_SIZE],
                               "boxes": boxes[0].tolist()},
                    "preview_png_b64": _png_b64(logo.numpy()),
                    "score": round(score, 6),
                })
        return {"candidates": candidates}

    @app.post("/api/compose")
    def compose(req: ComposeRequest):
        snap = snapshot()
        boxes = req.layout.get("boxes")
        if not isinstance(boxes, list) or any(len(b) != 4 for b in boxes):
            raise HTTPException(status_code=400, detail="layout.boxes must be Nx4")
        if len(boxes) != len(req.text):
            raise HTTPException(
                status_code=400,
                detail=f"text has {len(req.text)} glyphs, layout has {len(boxes)}")
        if not req.text:
            raise HTTPException(status_code=400, detail="empty text")
        _validate_boxes(boxes)
        try:
            font = snap.font_path(req.font_id)
        except KeyError as e:
            raise HTTPException(status_code=400, detail=str(e))
        glyphs = torch.as_tensor(
            np.stack([corpus.render_glyph(c, font) for c in req.text]),
            dtype=torch.float32)
        placed = composition.place_glyphs(
            glyphs, torch.as_tensor(np.asarray(boxes, dtype=np.float32)))
        logo = composition.compose_canvas(placed)
        overlap = float(composition.hard_overlap(placed))
        return {"png_b64": _png_b64(logo.numpy()), "overlap": overlap}

    studio = studio_dir or os.environ.get("LOGOFORGE_STUDIO_DIR", "")
    if studio and os.path.isdir(studio):
        from fastapi.staticfiles import StaticFiles
        app.mount("/studio", StaticFiles(directory=studio, html=True),
                  name="studio")

    return app
