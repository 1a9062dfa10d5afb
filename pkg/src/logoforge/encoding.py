"""Fuse glyph appearance and character identity into condition features.

Each glyph image goes through a convolutional visual encoder; its character
embedding is concatenated to the visual feature and a recurrent condition
encoder turns the per-glyph sequence into condition features. The final
recurrent state doubles as the holistic condition vector that both
discriminators receive.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn

from .composition import V_MAX


@dataclass
class EncoderConfig:
    d_v: int = 256          # visual feature width
    d_e: int = 128          # character embedding width
    d_c: int = 256          # condition feature width
    backbone: str = "small"  # "small" | "vgg19"
    pretrained: bool = False
    use_text: bool = True    # False zero-masks character embeddings
    use_img: bool = True     # False zero-masks visual features

    def __post_init__(self):
        if self.backbone not in ("small", "vgg19"):
            raise ValueError(f"unknown backbone: {self.backbone}")


@dataclass
class VisualFeatures:
    sequence: torch.Tensor  # (B, N, d_v)


@dataclass
class ConditionFeatures:
    sequence: torch.Tensor  # (B, N, d_c)
    holistic: torch.Tensor  # (B, d_c), equals sequence[:, -1]


def _small_trunk() -> tuple[nn.Module, int]:
    return nn.Sequential(
        nn.Conv2d(1, 32, 3, stride=2, padding=1), nn.LeakyReLU(0.2),
        nn.Conv2d(32, 64, 3, stride=2, padding=1), nn.LeakyReLU(0.2),
        nn.Conv2d(64, 128, 3, stride=2, padding=1), nn.LeakyReLU(0.2),
        nn.Conv2d(128, 256, 3, stride=2, padding=1), nn.LeakyReLU(0.2),
        nn.AdaptiveAvgPool2d(1),
    ), 256


def _vgg19_trunk(pretrained: bool) -> tuple[nn.Module, int]:
    import logging

    from torchvision import models
    weights = None
    if pretrained:
        try:
            trunk = models.vgg19(weights=models.VGG19_Weights.IMAGENET1K_V1).features
            return nn.Sequential(trunk, nn.AdaptiveAvgPool2d(1)), 512
        except Exception as e:  # no cached weights, offline: fall back
            logging.getLogger(__name__).warning(
                "pretrained vgg19 weights unavailable (%s); using random init", e)
    trunk = models.vgg19(weights=weights).features
    return nn.Sequential(trunk, nn.AdaptiveAvgPool2d(1)), 512


class VisualEncoder(nn.Module):
    """Per-glyph convolutional feature extractor.

    Input glyphs are (B, N, H_g, W_g) with values in [0, v_max]; they are
    normalized to [0, 1] internally. Output is (B, N, d_v).
    """

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        if cfg.backbone == "vgg19":
            self.trunk, trunk_out = _vgg19_trunk(cfg.pretrained)
            self.in_channels = 3
        else:
            self.trunk, trunk_out = _small_trunk()
            self.in_channels = 1
        self.proj = nn.Linear(trunk_out, cfg.d_v)

    def forward(self, glyphs: torch.Tensor) -> VisualFeatures:
        if glyphs.ndim != 4 or glyphs.shape[1] == 0:
            raise ValueError("glyphs must be (B, N, H, W) with N >= 1")
        b, n, h, w = glyphs.shape
        x = (glyphs / V_MAX).reshape(b * n, 1, h, w)
        if self.in_channels == 3:
            x = x.expand(-1, 3, -1, -1)
        feats = self.trunk(x).flatten(1)
        return VisualFeatures(sequence=self.proj(feats).reshape(b, n, -1))


class ConditionEncoder(nn.Module):
    """Recurrent fusion of visual features and character embeddings."""

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        self.rnn = nn.GRU(cfg.d_v + cfg.d_e, cfg.d_c, batch_first=True)

    def forward(self, f_v: torch.Tensor, f_e: torch.Tensor) -> ConditionFeatures:
        if f_v.shape[:2] != f_e.shape[:2]:
            raise ValueError(
                f"visual {tuple(f_v.shape[:2])} and embedding {tuple(f_e.shape[:2])} "
                "sequence shapes differ")
        if not self.cfg.use_img:
            f_v = torch.zeros_like(f_v)
        if not self.cfg.use_text:
            f_e = torch.zeros_like(f_e)
        fused = torch.cat([f_v, f_e], dim=-1)
        seq, _ = self.rnn(fused)
        return ConditionFeatures(sequence=seq, holistic=seq[:, -1])
