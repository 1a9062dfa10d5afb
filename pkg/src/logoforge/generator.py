"""Coordinate generator: condition features + noise -> box sequence.

A recurrent encoder-decoder. The latent noise seeds the encoder's initial
state so the layout style reaches every position; the decoder starts from
the encoder's final state and emits one box per step. The output head is a
sigmoid scaled by the canvas dimensions, so every coordinate lands strictly
inside (0, W_c) x (0, H_c) for any parameter values, trained or not.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import torch
import torch.nn as nn

from .composition import CANVAS_SIZE

SIGMOID_EPS = 1e-6  # keeps outputs strictly inside the open interval


@dataclass
class GeneratorConfig:
    d_c: int = 256
    d_z: int = 64
    hidden: int = 256
    canvas: tuple[int, int] = (CANVAS_SIZE, CANVAS_SIZE)


def sample_noise(d_z: int, seed: int | None = None, batch: int = 1,
                 generator: torch.Generator | None = None) -> torch.Tensor:
    """Standard-normal latent draws, deterministic under a seed."""
    if d_z < 1:
        raise ValueError(f"d_z must be >= 1, got {d_z}")
    if generator is None:
        generator = torch.Generator()
        if seed is not None:
            generator.manual_seed(seed)
    return torch.randn(batch, d_z, generator=generator)


class CoordinateGenerator(nn.Module):
    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        self.cfg = cfg
        self.z_proj = nn.Linear(cfg.d_z, cfg.hidden)
        self.encoder = nn.GRU(cfg.d_c, cfg.hidden, batch_first=True)
        self.decoder = nn.GRU(cfg.d_c, cfg.hidden, batch_first=True)
        self.head = nn.Linear(cfg.hidden, 4)
        wc, hc = cfg.canvas
        self.register_buffer("scale", torch.tensor([float(wc), float(hc),
                                                    float(wc), float(hc)]))

    def forward(self, cond_seq: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        """cond_seq (B, N, d_c), z (B, d_z) -> boxes (B, N, 4) in pixels."""
        if cond_seq.ndim != 3 or cond_seq.shape[1] == 0:
            raise ValueError("condition sequence must be (B, N, d_c) with N >= 1")
        h0 = torch.tanh(self.z_proj(z)).unsqueeze(0)
        _, h_enc = self.encoder(cond_seq, h0)
        dec_out, _ = self.decoder(cond_seq, h_enc)
        raw = torch.sigmoid(self.head(dec_out))
        squashed = SIGMOID_EPS + (1.0 - 2.0 * SIGMOID_EPS) * raw
        return squashed * self.scale


def layout_to_json(boxes, canvas=(CANVAS_SIZE, CANVAS_SIZE)) -> str:
    """Canonical layout export: {"canvas": [W, H], "boxes": [[x,y,w,h]...]}."""
    if isinstance(boxes, torch.Tensor):
        boxes = boxes.detach().cpu().tolist()
    boxes = [[float(v) for v in b] for b in boxes]
    return json.dumps({"canvas": [int(canvas[0]), int(canvas[1])], "boxes": boxes},
                      sort_keys=True)


def layout_from_json(text: str) -> tuple[tuple[int, int], list[list[float]]]:
    data = json.loads(text)
    canvas = tuple(int(v) for v in data["canvas"])
    boxes = [[float(v) for v in b] for b in data["boxes"]]
    for b in boxes:
        if len(b) != 4:
            raise ValueError(f"box must have 4 entries, got {b}")
    return canvas, boxes
