"""The dual critics: one reads the box sequence, one reads the rendered logo.

Both are conditioned on the holistic condition vector. The sequence critic
receives it as its initial recurrent state; the image critic tiles a
projection of it across the feature maps after the first convolution.
Probabilities are kept strictly inside (0, 1); training uses the raw logits.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn

from .composition import CANVAS_SIZE, V_MAX

PROB_EPS = 1e-6


@dataclass
class DiscriminatorConfig:
    d_c: int = 256
    seq_hidden: int = 128
    seq_layers: int = 2
    img_base: int = 64
    tile_channels: int = 64
    canvas: tuple[int, int] = (CANVAS_SIZE, CANVAS_SIZE)


def _squash(p: torch.Tensor) -> torch.Tensor:
    return p.clamp(PROB_EPS, 1.0 - PROB_EPS)


class SequenceDiscriminator(nn.Module):
    """Recurrent critic over the box-parameter trajectory."""

    def __init__(self, cfg: DiscriminatorConfig):
        super().__init__()
        self.cfg = cfg
        self.cond_proj = nn.Linear(cfg.d_c, cfg.seq_layers * cfg.seq_hidden)
        self.rnn = nn.GRU(4, cfg.seq_hidden, num_layers=cfg.seq_layers,
                          batch_first=True)
        self.head = nn.Linear(cfg.seq_hidden, 1)
        wc, hc = cfg.canvas
        self.register_buffer("scale", torch.tensor([float(wc), float(hc),
                                                    float(wc), float(hc)]))

    def logit(self, boxes: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        if boxes.ndim != 3 or boxes.shape[1] == 0:
            raise ValueError("boxes must be (B, N, 4) with N >= 1")
        x = boxes / self.scale
        h0 = torch.tanh(self.cond_proj(cond))
        h0 = h0.reshape(-1, self.cfg.seq_layers, self.cfg.seq_hidden).permute(1, 0, 2)
        _, h_last = self.rnn(x, h0.contiguous())
        return self.head(h_last[-1]).squeeze(-1)

    def forward(self, boxes: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        return _squash(torch.sigmoid(self.logit(boxes, cond)))


class ImageDiscriminator(nn.Module):
    """Convolutional critic over the composed logo image."""

    def __init__(self, cfg: DiscriminatorConfig):
        super().__init__()
        self.cfg = cfg
        b = cfg.img_base
        self.conv1 = nn.Conv2d(1, b, 4, stride=2, padding=1)
        self.cond_proj = nn.Linear(cfg.d_c, cfg.tile_channels)
        self.rest = nn.Sequential(
            nn.Conv2d(b + cfg.tile_channels, 2 * b, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.Conv2d(2 * b, 4 * b, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.Conv2d(4 * b, 8 * b, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.AdaptiveAvgPool2d(1),
        )
        self.head = nn.Linear(8 * b, 1)
        self.act = nn.LeakyReLU(0.2)

    def logit(self, logo: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        wc, hc = self.cfg.canvas
        if logo.ndim != 3 or logo.shape[-2:] != (hc, wc):
            raise ValueError(f"logo must be (B, {hc}, {wc}), got {tuple(logo.shape)}")
        x = (logo / V_MAX).unsqueeze(1)
        feat = self.act(self.conv1(x))
        tile = self.cond_proj(cond)[:, :, None, None].expand(
            -1, -1, feat.shape[-2], feat.shape[-1])
        feat = torch.cat([feat, tile], dim=1)
        return self.head(self.rest(feat).flatten(1)).squeeze(-1)

    def forward(self, logo: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        return _squash(torch.sigmoid(self.logit(logo, cond)))
