"""Distribution metrics and rule-based layout baselines.

FID is the Fréchet distance between Gaussian fits of backbone activations
for generated vs reference logo sets; IS is the exponentiated mean KL
between per-image class posteriors and their marginal. The standard
inception backbone requires downloaded weights; when none are pinned under
$LOGOFORGE_CACHE the metrics run on a fixed, seeded convolutional feature
extractor instead and are labeled "proxy". Orderings within one backbone
are comparable; absolute values across backbones are not.

Rule baselines: (a) one horizontal line of uniform glyphs, (b) a seeded
coin flip between a horizontal and a vertical line, (c) one line per token
with seeded spacing jitter. All produce boxes strictly inside the canvas.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np
import torch
from scipy import linalg
from torch import nn

from .composition import CANVAS_SIZE, V_MAX
from .corpus import LayoutParams, LogoRecord

WEIGHTS_ENV = "LOGOFORGE_CACHE"
PROXY_SEED = 1234


class ProxyBackbone(nn.Module):
    """Fixed random-weight CNN used when no pinned inception weights exist.

    Seeded construction makes it a stable measurement instrument: the same
    images always map to the same features, so orderings are meaningful.
    """

    name = "proxy"
    n_classes = 16

    def __init__(self, seed: int = PROXY_SEED):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        self.convs = nn.Sequential(
            nn.Conv2d(1, 16, 3, stride=2, padding=1), nn.LeakyReLU(0.2),
            nn.Conv2d(16, 32, 3, stride=2, padding=1), nn.LeakyReLU(0.2),
            nn.Conv2d(32, 64, 3, stride=2, padding=1), nn.LeakyReLU(0.2),
            nn.Conv2d(64, 128, 3, stride=2, padding=1), nn.LeakyReLU(0.2),
            nn.AdaptiveAvgPool2d(1),
        )
        self.head = nn.Linear(128, self.n_classes)
        with torch.no_grad():
            for p in self.parameters():
                p.copy_(torch.randn(p.shape, generator=gen) * 0.2)
        self.eval()
        for p in self.parameters():
            p.requires_grad_(False)

    @torch.no_grad()
    def forward(self, images: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """(B, H, W) in [0, v_max] -> (features (B, 128), class probs (B, K))."""
        x = (images / V_MAX).unsqueeze(1)
        feats = self.convs(x).flatten(1)
        probs = torch.softmax(self.head(feats), dim=-1)
        return feats, probs


class InceptionBackbone(nn.Module):
    """Standard inception-v3 activations, loaded from pinned local weights."""

    name = "inception"
    n_classes = 1000

    def __init__(self, weights_path: str):
        super().__init__()
        from torchvision import models
        net = models.inception_v3(weights=None, aux_logits=True, init_weights=False)
        net.load_state_dict(torch.load(weights_path, weights_only=True))
        self.classifier = net.fc          # class posteriors for IS
        net.fc = nn.Identity()            # pooled activations for FID
        self.net = net.eval()
        for p in self.net.parameters():
            p.requires_grad_(False)

    @torch.no_grad()
    def forward(self, images: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        x = (images / V_MAX).unsqueeze(1).repeat(1, 3, 1, 1)
        x = torch.nn.functional.interpolate(x, size=(299, 299), mode="bilinear",
                                            align_corners=False)
        x = (x - 0.5) / 0.5
        feats = self.net(x)
        probs = torch.softmax(self.classifier(feats), dim=-1)
        return feats, probs


def default_backbone() -> nn.Module:
    cache = os.environ.get(WEIGHTS_ENV, "")
    path = os.path.join(cache, "inception_v3.pt") if cache else ""
    if path and os.path.isfile(path):
        return InceptionBackbone(path)
    return ProxyBackbone()


def _extract(images, backbone, batch: int = 64):
    feats, probs = [], []
    arr = [torch.as_tensor(np.asarray(im), dtype=torch.float32) for im in images]
    for s in range(0, len(arr), batch):
        chunk = torch.stack(arr[s:s + batch])
        f, p = backbone(chunk)
        feats.append(f.double().numpy())
        probs.append(p.double().numpy())
    return np.concatenate(feats), np.concatenate(probs)


def frechet_distance(mu1, sigma1, mu2, sigma2, eps: float = 1e-8) -> float:
    import warnings

    diff = mu1 - mu2
    with warnings.catch_warnings():
        # sqrtm's error estimate divides by zero on exactly singular products
        warnings.simplefilter("ignore", RuntimeWarning)
        covmean, _ = linalg.sqrtm(sigma1 @ sigma2, disp=False)
        if not np.isfinite(covmean).all():
            offset = np.eye(sigma1.shape[0]) * eps
            covmean, _ = linalg.sqrtm((sigma1 + offset) @ (sigma2 + offset),
                                      disp=False)
    if np.iscomplexobj(covmean):
        covmean = covmean.real
    return float(diff @ diff + np.trace(sigma1) + np.trace(sigma2)
                 - 2.0 * np.trace(covmean))


def inception_score(probs: np.ndarray, splits: int = 10) -> float:
    n = probs.shape[0]
    splits = max(1, min(splits, n))
    scores = []
    for chunk in np.array_split(probs, splits):
        marginal = chunk.mean(axis=0, keepdims=True)
        kl = (chunk * (np.log(chunk + 1e-12) - np.log(marginal + 1e-12))).sum(axis=1)
        scores.append(float(np.exp(kl.mean())))
    return float(np.mean(scores))


def evaluate_fid_is(generated, reference, backbone: nn.Module | None = None,
                    splits: int = 10) -> tuple[float, float]:
    """FID between the two image sets and IS of the generated set."""
    generated = list(generated)
    reference = list(reference)
    if len(generated) < 2 or len(reference) < 2:
        raise ValueError("need at least 2 images per set for covariance estimates")
    if backbone is None:
        backbone = default_backbone()
    f_gen, p_gen = _extract(generated, backbone)
    f_ref, _ = _extract(reference, backbone)
    mu_g, sig_g = f_gen.mean(axis=0), np.cov(f_gen, rowvar=False)
    mu_r, sig_r = f_ref.mean(axis=0), np.cov(f_ref, rowvar=False)
    fid = frechet_distance(mu_g, sig_g, mu_r, sig_r)
    return fid, inception_score(p_gen, splits=splits)


# ---------------------------------------------------------------------------
# Rule baselines

def _line(n: int, horizontal: bool, canvas: tuple[int, int],
          pitch_jitter=None, size: int | None = None) -> list[LayoutParams]:
    wc, hc = canvas
    limit = (wc if horizontal else hc) - 8
    if size is None:
        size = min(int(0.35 * (hc if horizontal else wc)), (limit // n) - 2)
        size = max(size, 3)
    gap = 2
    if n * (size + gap) > limit:
        size = max(3, limit // n - gap)
    pitch = size + gap
    total = n * pitch - gap
    start = ((wc if horizontal else hc) - total) / 2.0 + size / 2.0
    across = (hc if horizontal else wc) / 2.0
    boxes = []
    pos = start
    for i in range(n):
        if horizontal:
            boxes.append(LayoutParams(pos, across, float(size), float(size)))
        else:
            boxes.append(LayoutParams(across, pos, float(size), float(size)))
        pos += pitch if pitch_jitter is None else pitch + pitch_jitter[i]
    return boxes


def rule_layout(record: LogoRecord, rule: str, seed: int = 0) -> list[LayoutParams]:
    """Deterministic baseline layouts (a), (b), (c) for one record."""
    n = len(record.glyphs)
    canvas = (CANVAS_SIZE, CANVAS_SIZE)
    if rule == "a":
        return _line(n, horizontal=True, canvas=canvas)
    if rule == "b":
        rng = np.random.default_rng(seed)
        return _line(n, horizontal=bool(rng.integers(0, 2)), canvas=canvas)
    if rule == "c":
        return _rule_c(record, seed, canvas)
    raise ValueError(f"unknown rule: {rule!r} (expected 'a', 'b' or 'c')")


def _rule_c(record: LogoRecord, seed: int, canvas: tuple[int, int]) -> list[LayoutParams]:
    """One line per token, seeded orientation and spacing jitter."""
    wc, hc = canvas
    rng = np.random.default_rng(seed)
    tokens = record.tokens or [(i, i + 1) for i in range(len(record.glyphs))]
    horizontal = bool(rng.integers(0, 2))
    lines = [list(range(s, e)) for s, e in tokens]
    k = len(lines)
    longest = max(len(line) for line in lines)

    along_limit = (wc if horizontal else hc) - 8
    across_limit = (hc if horizontal else wc) - 8
    line_gap = int(rng.integers(2, 8))
    size = min(int(0.3 * across_limit),
               along_limit // longest - 2,
               (across_limit - (k - 1) * line_gap) // k)
    size = max(size, 3)
    if k * size + (k - 1) * line_gap > across_limit:
        line_gap = max(1, (across_limit - k * size) // max(1, k - 1))

    total_across = k * size + (k - 1) * line_gap
    across0 = ((hc if horizontal else wc) - total_across) / 2.0 + size / 2.0
    boxes_by_index: dict[int, LayoutParams] = {}
    for li, line in enumerate(lines):
        m = len(line)
        # spacing jitter only widens gaps, so lines can never overlap
        slack = along_limit - m * (size + 2) + 2
        jitter = rng.uniform(0.0, max(0.0, min(4.0, slack / max(1, m - 1))),
                             size=max(0, m - 1))
        pitch_extra = list(jitter) + [0.0]
        total = m * size + 2 * (m - 1) + float(sum(jitter))
        along = ((wc if horizontal else hc) - total) / 2.0 + size / 2.0
        across = across0 + li * (size + line_gap)
        for j, gi in enumerate(line):
            if horizontal:
                boxes_by_index[gi] = LayoutParams(along, across, float(size), float(size))
            else:
                boxes_by_index[gi] = LayoutParams(across, along, float(size), float(size))
            along += size + 2 + pitch_extra[j]
    return [boxes_by_index[i] for i in range(len(record.glyphs))]


def monotone_rate(layouts, slack: float = 3.0) -> float:
    """Share of layouts whose centers advance monotonically in x or in y.

    A layout passes if its x centers never step backwards by more than
    ``slack`` pixels, or its y centers never do; this covers horizontal,
    vertical and stacked-line reading orders.
    """
    ok = 0
    layouts = list(layouts)
    for layout in layouts:
        b = layout_tensor(layout).numpy()
        dx = np.diff(b[:, 0])
        dy = np.diff(b[:, 1])
        if len(dx) == 0 or np.all(dx >= -slack) or np.all(dy >= -slack):
            ok += 1
    return ok / max(1, len(layouts))


def layout_tensor(layout) -> torch.Tensor:
    """list[LayoutParams] | array-like -> (N, 4) float tensor."""
    if isinstance(layout, torch.Tensor):
        return layout.float()
    if layout and isinstance(layout[0], LayoutParams):
        return torch.as_tensor(np.stack([p.as_array() for p in layout]))
    return torch.as_tensor(np.asarray(layout, dtype=np.float32))


def mean_hard_overlap(records, layouts) -> float:
    """Mean overlapping-pixel count of each record composed under a layout."""
    from . import composition as comp
    total = 0.0
    for rec, layout in zip(records, layouts):
        placed = comp.place_glyphs(torch.as_tensor(rec.glyphs_array()),
                                   layout_tensor(layout))
        total += float(comp.hard_overlap(placed))
    return total / max(1, len(records))


def write_report(rows: list[dict], csv_path: str, md_path: str | None = None) -> None:
    """Method/FID/IS table as CSV and an optional markdown mirror."""
    fields = ["method", "fid", "is_score", "mean_overlap"]
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in fields})
    if md_path:
        lines = ["| method | FID | IS | mean overlap |", "| --- | --- | --- | --- |"]
        for row in rows:
            lines.append(f"| {row['method']} | {row.get('fid', '')} | "
                         f"{row.get('is_score', '')} | {row.get('mean_overlap', '')} |")
        with open(md_path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
