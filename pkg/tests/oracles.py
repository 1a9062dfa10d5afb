"""Independent reference implementations used to check the library.

Everything here is plain numpy/python, derived directly from first
principles (per-pixel brute force), and deliberately shares no code with
the library paths it verifies.
"""

from __future__ import annotations

import math

import numpy as np


def oracle_place(glyph: np.ndarray, box, glyph_dims=(64, 64),
                 canvas_dims=(128, 128)) -> np.ndarray:
    """Per-pixel bilinear rasterization of one glyph into its box.

    Derived straight from the corner correspondence: canvas pixel center
    (i+0.5, j+0.5) maps to glyph coordinate ((i+0.5) - box_left) * Wg / w,
    then a bilinear read over glyph pixel centers with zero padding.
    """
    wg, hg = glyph_dims
    wc, hc = canvas_dims
    x, y, w, h = (float(v) for v in box)
    w = max(w, 2.0)
    h = max(h, 2.0)
    out = np.zeros((hc, wc), dtype=np.float64)
    for j in range(hc):
        ys = (j + 0.5 - (y - h / 2.0)) * hg / h
        v = ys - 0.5
        y0 = math.floor(v)
        ty = v - y0
        for i in range(wc):
            xs = (i + 0.5 - (x - w / 2.0)) * wg / w
            u = xs - 0.5
            x0 = math.floor(u)
            tx = u - x0
            val = 0.0
            for dy, wy in ((0, 1.0 - ty), (1, ty)):
                yi = y0 + dy
                if not (0 <= yi < hg) or wy == 0.0:
                    continue
                for dx, wx in ((0, 1.0 - tx), (1, tx)):
                    xi = x0 + dx
                    if 0 <= xi < wg:
                        val += wy * wx * float(glyph[yi, xi])
            out[j, i] = val
    return out


def oracle_overlap_count(canvases, v_max=255.0, threshold=0.5) -> int:
    """Exhaustive AND/OR overlap pixel count over binarized canvases."""
    union = None
    total = 0
    for c in canvases:
        mask = np.asarray(c, dtype=np.float64) > threshold * v_max
        if union is None:
            union = np.zeros_like(mask)
        total += int(np.logical_and(mask, union).sum())
        union = np.logical_or(union, mask)
    return total


def tight_bbox(canvas: np.ndarray, threshold: float) -> tuple[float, float, float, float]:
    """(left, top, right, bottom) of pixels above threshold, as box edges.

    Measured at half intensity on a solid test glyph: point-bilinear
    resampling spreads edge ink by up to half the upscale factor, but the
    half-intensity crossing sits on the requested box edge for any scale.
    Returns pixel-edge coordinates: left edge of the leftmost hit pixel and
    right edge (index+1) of the rightmost.
    """
    mask = np.asarray(canvas) > threshold
    ys, xs = np.nonzero(mask)
    if len(xs) == 0:
        raise ValueError("empty canvas")
    return float(xs.min()), float(ys.min()), float(xs.max() + 1), float(ys.max() + 1)


def fd_gradient_scene(make_scalar, params: np.ndarray, eps: float = 1e-3) -> np.ndarray:
    """Central finite differences of a scalar function of box parameters."""
    params = np.asarray(params, dtype=np.float64)
    grad = np.zeros_like(params)
    for k in range(params.size):
        hi = params.copy()
        lo = params.copy()
        hi.flat[k] += eps
        lo.flat[k] -= eps
        grad.flat[k] = (make_scalar(hi) - make_scalar(lo)) / (2.0 * eps)
    return grad


def stable_cell_mask(glyph_dims, canvas_dims, box: np.ndarray, k: int,
                     eps: float) -> np.ndarray:
    """Canvas pixels whose bilinear cell is unchanged by the +/-eps probe.

    Central differences are only valid where the sampled function is smooth
    over the probe interval; a pixel whose source coordinate crosses an
    integer grid line between box[k]-eps and box[k]+eps sits on a kink of
    the piecewise-bilinear sampler and is excluded.
    """
    wg, hg = glyph_dims
    wc, hc = canvas_dims

    def cells(p):
        x, y, w, h = p
        xs = (np.arange(wc) + 0.5 - (x - w / 2.0)) * wg / w
        ys = (np.arange(hc) + 0.5 - (y - h / 2.0)) * hg / h
        return np.floor(xs - 0.5), np.floor(ys - 0.5)

    hi = np.asarray(box, dtype=np.float64).copy()
    lo = hi.copy()
    hi[k] += eps
    lo[k] -= eps
    cx_hi, cy_hi = cells(hi)
    cx_lo, cy_lo = cells(lo)
    col_ok = cx_hi == cx_lo
    row_ok = cy_hi == cy_lo
    return row_ok[:, None] & col_ok[None, :]


def smooth_glyph(rng: np.random.Generator, size: int = 64,
                 peak: float = 250.0) -> np.ndarray:
    """Low-frequency random glyph; smoothness keeps bilinear slope jumps tiny."""
    coarse = rng.uniform(0.0, 1.0, size=(8, 8))
    ix = np.linspace(0, 7, size)
    a = np.empty((8, size))
    for r in range(8):
        a[r] = np.interp(ix, np.arange(8), coarse[r])
    out = np.empty((size, size))
    for c in range(size):
        out[:, c] = np.interp(ix, np.arange(8), a[:, c])
    return (out * peak).astype(np.float64)


def compose_gradient_pairs(scene_params, glyphs_np, weights, eps: float = 1e-3):
    """(analytic, fd) gradient pairs of a weighted masked composed canvas.

    For every glyph and box parameter: central finite differences of the
    weighted sum of composed pixels, restricted to pixels whose bilinear
    cell is stable over the probe (central FD is exact there because the
    sampler is piecewise bilinear), against the autograd gradient of the
    same masked scalar. Returns (pairs, mean kept fraction).
    """
    import torch
    from logoforge.composition import compose_canvas, place_glyphs

    n = len(glyphs_np)
    glyphs = torch.tensor(np.stack(glyphs_np), dtype=torch.float64)
    w_t = torch.tensor(weights, dtype=torch.float64)

    pairs = []
    kept = []
    for gi in range(n):
        for k in range(4):
            mask_np = stable_cell_mask((64, 64), (128, 128), scene_params[gi], k, eps)
            mask = torch.tensor(mask_np)
            kept.append(mask_np.mean())

            def masked_scalar(params_list):
                p = torch.tensor(np.stack(params_list), dtype=torch.float64)
                comp = compose_canvas(place_glyphs(glyphs, p))
                return float((comp * w_t)[mask].sum())

            hi = [np.asarray(p, dtype=np.float64).copy() for p in scene_params]
            lo = [np.asarray(p, dtype=np.float64).copy() for p in scene_params]
            hi[gi][k] += eps
            lo[gi][k] -= eps
            fd = (masked_scalar(hi) - masked_scalar(lo)) / (2 * eps)

            p = torch.tensor(np.stack(scene_params), dtype=torch.float64,
                             requires_grad=True)
            comp = compose_canvas(place_glyphs(glyphs, p))
            (comp * w_t)[mask].sum().backward()
            pairs.append((p.grad[gi, k].item(), fd))
    return pairs, float(np.mean(kept))


def overlap_gradient_pairs(scene_params, glyphs_np, eps: float = 1e-3):
    """(analytic, fd) gradient pairs of the masked soft overlap loss."""
    import torch
    from logoforge.composition import overlap_map, place_glyphs

    n = len(glyphs_np)
    glyphs = torch.tensor(np.stack(glyphs_np), dtype=torch.float64)

    pairs = []
    for gi in range(n):
        for k in range(4):
            mask_np = stable_cell_mask((64, 64), (128, 128), scene_params[gi], k, eps)
            mask = torch.tensor(mask_np)

            def masked_loss(params_list):
                p = torch.tensor(np.stack(params_list), dtype=torch.float64)
                return float(overlap_map(place_glyphs(glyphs, p))[mask].sum())

            hi = [np.asarray(p, dtype=np.float64).copy() for p in scene_params]
            lo = [np.asarray(p, dtype=np.float64).copy() for p in scene_params]
            hi[gi][k] += eps
            lo[gi][k] -= eps
            fd = (masked_loss(hi) - masked_loss(lo)) / (2 * eps)

            p = torch.tensor(np.stack(scene_params), dtype=torch.float64,
                             requires_grad=True)
            overlap_map(place_glyphs(glyphs, p))[mask].sum().backward()
            pairs.append((p.grad[gi, k].item(), fd))
    return pairs
