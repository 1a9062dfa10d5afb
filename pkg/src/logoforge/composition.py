"""Differentiable placement of glyphs on the logo canvas.

Glyph boxes are (x_c, y_c, w, h) in canvas pixels. A box is turned into a
scale+translation affine map from canvas pixel coordinates to glyph pixel
coordinates, the glyph is resampled onto the canvas with bilinear
interpolation (zero outside the glyph), per-glyph canvases are summed and
truncated at ``v_max``, and the overlap penalty counts ink that lands on
previously placed glyphs. Everything is a pure function of its inputs and
differentiable with respect to the box parameters and the glyph pixels.

Coordinate convention: pixel ``j`` spans the interval ``[j, j+1)`` with its
center at ``j + 0.5``; a box covers ``[x_c - w/2, x_c + w/2]`` in continuous
canvas coordinates and the glyph's continuous extent ``[0, W_g] x [0, H_g]``
is mapped exactly onto it (the four glyph corners land on the four box
corners). Off-diagonal affine terms are fixed to zero: only translation and
scaling, no rotation or shear.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import torch

GLYPH_SIZE = 64
CANVAS_SIZE = 128
V_MAX = 255.0
MIN_BOX_SIZE = 2.0

# Incremented whenever a degenerate (w or h < MIN_BOX_SIZE) box is clamped.
_degenerate_box_count = 0


def degenerate_box_count() -> int:
    return _degenerate_box_count


def reset_degenerate_box_count() -> None:
    global _degenerate_box_count
    _degenerate_box_count = 0


@dataclass
class AffineParams:
    """2x3 canvas->glyph transform with zero off-diagonal terms.

    ``theta`` has shape (..., 2, 3); row 0 maps x, row 1 maps y:
    ``x_glyph = theta[0,0] * x_canvas + theta[0,2]``.
    """

    theta: torch.Tensor


def _to_tensor(x, dtype=None) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        t = x
    else:
        t = torch.as_tensor(x)
    if t.dtype not in (torch.float32, torch.float64):
        t = t.to(torch.float32)
    if dtype is not None:
        t = t.to(dtype)
    return t


def affine_params(box, glyph_dims=(GLYPH_SIZE, GLYPH_SIZE),
                  canvas_dims=(CANVAS_SIZE, CANVAS_SIZE)) -> AffineParams:
    """Solve for the canvas->glyph affine map of one or more boxes.

    ``box`` is (..., 4) as (x_c, y_c, w, h) in canvas pixels. Boxes smaller
    than MIN_BOX_SIZE in either dimension are clamped (and counted) rather
    than rejected: untrained generators routinely emit near-zero sizes.
    The solution of the corner-correspondence equations is

        x_glyph = (W_g / w) * x_canvas + (w - 2 x_c) * W_g / (2 w)

    and the analogous y row; off-diagonals are identically zero.
    """
    global _degenerate_box_count
    b = _to_tensor(box)
    wg, hg = float(glyph_dims[0]), float(glyph_dims[1])
    x, y, w, h = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    n_degenerate = int(((w < MIN_BOX_SIZE) | (h < MIN_BOX_SIZE)).sum())
    if n_degenerate:
        _degenerate_box_count += n_degenerate
    w = w.clamp(min=MIN_BOX_SIZE)
    h = h.clamp(min=MIN_BOX_SIZE)
    zero = torch.zeros_like(x)
    row_x = torch.stack([wg / w, zero, (w - 2.0 * x) * wg / (2.0 * w)], dim=-1)
    row_y = torch.stack([zero, hg / h, (h - 2.0 * y) * hg / (2.0 * h)], dim=-1)
    return AffineParams(theta=torch.stack([row_x, row_y], dim=-2))


def transform_glyph(glyph, theta, canvas_dims=(CANVAS_SIZE, CANVAS_SIZE)) -> torch.Tensor:
    """Resample a glyph onto the canvas through its affine map.

    ``glyph`` is (..., H_g, W_g); ``theta`` an AffineParams or raw (..., 2, 3)
    tensor with matching leading dims. Returns (..., H_c, W_c). Bilinear
    sampling with zero padding: samples that fall outside the glyph read 0.
    Differentiable w.r.t. both the glyph pixels and (through theta) the box.
    """
    th = theta.theta if isinstance(theta, AffineParams) else _to_tensor(theta)
    g = _to_tensor(glyph, dtype=th.dtype)
    hc, wc = int(canvas_dims[1]), int(canvas_dims[0])
    lead = torch.broadcast_shapes(g.shape[:-2], th.shape[:-2])
    hg, wg = g.shape[-2], g.shape[-1]
    g = g.expand(lead + (hg, wg)).reshape(-1, hg, wg)
    th = th.expand(lead + (2, 3)).reshape(-1, 2, 3)
    m = g.shape[0]

    xt = (torch.arange(wc, dtype=g.dtype) + 0.5)
    yt = (torch.arange(hc, dtype=g.dtype) + 0.5)
    # Source (glyph) coordinates of each target pixel center; x and y are
    # separable because the off-diagonal terms are zero.
    xs = th[:, 0, 0, None] * xt[None, :] + th[:, 0, 2, None]  # (m, Wc)
    ys = th[:, 1, 1, None] * yt[None, :] + th[:, 1, 2, None]  # (m, Hc)

    ux = xs - 0.5
    uy = ys - 0.5
    x0 = ux.floor()
    y0 = uy.floor()
    tx = ux - x0
    ty = uy - y0
    x0 = x0.long()
    y0 = y0.long()

    def rows(offset):
        yi = y0 + offset                      # (m, Hc)
        valid = (yi >= 0) & (yi < hg)
        idx = yi.clamp(0, hg - 1).unsqueeze(-1).expand(m, hc, wg)
        return g.gather(1, idx) * valid.unsqueeze(-1).to(g.dtype)

    def cols(row_vals, offset):
        xi = x0 + offset                      # (m, Wc)
        valid = (xi >= 0) & (xi < wg)
        idx = xi.clamp(0, wg - 1).unsqueeze(1).expand(m, hc, wc)
        return row_vals.gather(2, idx) * valid.unsqueeze(1).to(g.dtype)

    wy0 = (1.0 - ty).unsqueeze(-1)  # (m, Hc, 1)
    wy1 = ty.unsqueeze(-1)
    wx0 = (1.0 - tx).unsqueeze(1)   # (m, 1, Wc)
    wx1 = tx.unsqueeze(1)

    r0 = rows(0)
    r1 = rows(1)
    out = (wy0 * (wx0 * cols(r0, 0) + wx1 * cols(r0, 1))
           + wy1 * (wx0 * cols(r1, 0) + wx1 * cols(r1, 1)))
    return out.reshape(lead + (hc, wc))


def place_glyphs(glyphs, boxes, glyph_dims=(GLYPH_SIZE, GLYPH_SIZE),
                 canvas_dims=(CANVAS_SIZE, CANVAS_SIZE)) -> torch.Tensor:
    """Transform a stack of glyphs (..., H_g, W_g) by boxes (..., 4)."""
    theta = affine_params(boxes, glyph_dims=glyph_dims, canvas_dims=canvas_dims)
    return transform_glyph(glyphs, theta, canvas_dims=canvas_dims)


def _stack(glyphs_on_canvas) -> torch.Tensor:
    if isinstance(glyphs_on_canvas, torch.Tensor):
        return glyphs_on_canvas
    items = [_to_tensor(g) for g in glyphs_on_canvas]
    if not items:
        raise ValueError("need at least one glyph canvas")
    return torch.stack(items, dim=0)


def compose_canvas(glyphs_on_canvas, v_max: float = V_MAX) -> torch.Tensor:
    """Sum per-glyph canvases and truncate at v_max (elementwise min).

    Accepts a sequence of (H_c, W_c) canvases or a stacked tensor whose
    dim -3 indexes glyphs; batched inputs (B, N, H_c, W_c) give (B, H_c, W_c).
    """
    stack = _stack(glyphs_on_canvas)
    if stack.ndim < 3 or stack.shape[-3] == 0:
        raise ValueError("need at least one glyph canvas")
    return stack.sum(dim=-3).clamp(max=v_max)


def overlap_map(glyphs_on_canvas, v_max: float = V_MAX,
                binarize: bool = False, threshold: float = 0.5) -> torch.Tensor:
    """Per-pixel overlap contribution: ink landing on previous glyphs.

    Soft relaxation of the boolean form: each canvas becomes a foreground
    probability m_i = clamp(g_i / v_max, 0, 1); the running union is
    accumulated as u <- u + m - u*m (soft OR) and each step contributes
    m_i * u_{i-1} (soft AND) per pixel. On binary inputs this equals the
    exact AND/OR indicator. ``binarize=True`` thresholds the masks first.
    Input (..., N, H, W) gives (..., H, W).
    """
    stack = _stack(glyphs_on_canvas)
    if stack.ndim < 3 or stack.shape[-3] == 0:
        raise ValueError("need at least one glyph canvas")
    m = (stack / v_max).clamp(0.0, 1.0)
    if binarize:
        m = (m > threshold).to(stack.dtype)
    n = m.shape[-3]
    union = torch.zeros_like(m.select(-3, 0))
    contrib = torch.zeros_like(union)
    for i in range(n):
        mi = m.select(-3, i)
        contrib = contrib + mi * union
        union = union + mi - union * mi
    return contrib


def overlap_loss(glyphs_on_canvas, v_max: float = V_MAX,
                 binarize: bool = False, threshold: float = 0.5) -> torch.Tensor:
    """Total ink of each glyph that lands on the union of the previous ones.

    Sum of ``overlap_map`` over pixels: (N, H, W) input gives a scalar,
    (B, N, H, W) gives per-sample (B,).
    """
    return overlap_map(glyphs_on_canvas, v_max=v_max, binarize=binarize,
                       threshold=threshold).sum(dim=(-2, -1))


def hard_overlap(glyphs_on_canvas, v_max: float = V_MAX,
                 threshold: float = 0.5) -> torch.Tensor:
    """Exact overlapping-pixel count after thresholding at threshold*v_max."""
    return overlap_loss(glyphs_on_canvas, v_max=v_max, binarize=True,
                        threshold=threshold)
