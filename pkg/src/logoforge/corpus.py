"""Logo corpus: domain types, dataset loading, and synthetic generation.

A logo record holds the text, one 64x64 grayscale glyph per element, the
ground-truth box sequence on a 128x128 canvas, and the rendered logo image.
Real data arrives through a JSON-lines index (see ``load_dataset_dir``);
the synthetic generator renders glyphs from system fonts and lays them out
in a few common logo styles so the whole pipeline can train without any
external dataset.
"""

from __future__ import annotations

import glob
import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np
import torch
from PIL import Image, ImageDraw, ImageFont

from . import composition
from .composition import CANVAS_SIZE, GLYPH_SIZE, V_MAX

log = logging.getLogger(__name__)

MAX_ELEMENTS = 20

LAYOUT_STYLES = ("horizontal", "vertical", "two_line", "scaled_emphasis")

# Compact bundled word list for synthetic logos (letters only, <= 8 chars).
WORDS = (
    "NOVA", "STAR", "LUNA", "ECHO", "ATLAS", "ORBIT", "PIXEL", "QUARTZ",
    "EMBER", "FABLE", "GROVE", "HALO", "IVORY", "JOLT", "KARMA", "LOTUS",
    "MIRAGE", "NECTAR", "ONYX", "PRISM", "QUILL", "RAVEN", "SOLACE", "TIDAL",
    "UMBRA", "VAPOR", "WILLOW", "ZEPHYR", "AMBER", "BLAZE", "CREST", "DUSK",
    "FLUX", "GLINT", "HARBOR", "INDIGO", "JADE", "KITE", "LEDGER", "MAPLE",
    "NIMBUS", "OPAL", "PLUME", "RIDGE", "SABLE", "THORN", "VELVET", "WREN",
    "ASTRA", "BISON", "CEDAR", "DELTA", "FJORD", "GAMMA", "HAZEL", "IRIS",
    "SAGA", "TEMPO", "VISTA", "ZEN",
)


class CorpusError(Exception):
    """A record or file violated the corpus contracts."""


@dataclass
class GlyphImage:
    """One grayscale glyph raster plus the identity of its character."""

    pixels: np.ndarray  # (H_g, W_g) float32 in [0, V_MAX]
    char_id: int
    char: str = ""

    def validate(self) -> None:
        if self.pixels.ndim != 2:
            raise CorpusError(f"glyph pixels must be 2-D, got {self.pixels.shape}")
        if self.pixels.min() < 0 or self.pixels.max() > V_MAX:
            raise CorpusError("glyph pixel values outside [0, v_max]")


@dataclass
class LayoutParams:
    """One glyph's box on the canvas: center, width, height in pixels."""

    x_c: float
    y_c: float
    w: float
    h: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x_c, self.y_c, self.w, self.h], dtype=np.float32)

    def validate(self, canvas=(CANVAS_SIZE, CANVAS_SIZE)) -> None:
        wc, hc = canvas
        if not (0 < self.x_c < wc and 0 < self.w < wc):
            raise CorpusError(f"x_c/w out of (0, {wc}): {self}")
        if not (0 < self.y_c < hc and 0 < self.h < hc):
            raise CorpusError(f"y_c/h out of (0, {hc}): {self}")

    def within_canvas(self, canvas=(CANVAS_SIZE, CANVAS_SIZE)) -> bool:
        wc, hc = canvas
        return (self.x_c - self.w / 2 >= 0 and self.x_c + self.w / 2 <= wc
                and self.y_c - self.h / 2 >= 0 and self.y_c + self.h / 2 <= hc)


@dataclass
class LogoRecord:
    """A full logo: text, glyphs, ground-truth layout, rendered image."""

    text: str
    glyphs: list[GlyphImage]
    layout: list[LayoutParams]
    logo_image: np.ndarray  # (H_c, W_c) float32 in [0, V_MAX]
    source: str = "synthetic"  # "dataset" | "synthetic"
    tokens: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        if not self.tokens:
            self.tokens = [(i, i + 1) for i in range(len(self.glyphs))]

    def validate(self, canvas=(CANVAS_SIZE, CANVAS_SIZE)) -> None:
        n = len(self.glyphs)
        if not (1 <= n <= MAX_ELEMENTS):
            raise CorpusError(f"record has N={n}, outside [1, {MAX_ELEMENTS}]")
        if len(self.layout) != n:
            raise CorpusError("glyphs and layout length mismatch")
        for g in self.glyphs:
            g.validate()
        for p in self.layout:
            p.validate(canvas)
            if not p.within_canvas(canvas):
                raise CorpusError(f"box extends outside canvas: {p}")
        for s, e in self.tokens:
            if not (0 <= s < e <= n):
                raise CorpusError(f"bad token span ({s}, {e})")

    def boxes_array(self) -> np.ndarray:
        return np.stack([p.as_array() for p in self.layout])

    def glyphs_array(self) -> np.ndarray:
        return np.stack([g.pixels for g in self.glyphs]).astype(np.float32)


@dataclass
class EmbeddingTable:
    """char -> dense vector lookup; row 0 is the UNK vector."""

    vocab: dict[str, int]  # char -> row index >= 1
    vectors: np.ndarray    # (V + 1, dim)
    trainable: bool = False

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def id_of(self, char: str) -> int:
        return self.vocab.get(char, 0)

    def lookup(self, char: str) -> np.ndarray:
        return self.vectors[self.id_of(char)]

    def ids(self, text) -> np.ndarray:
        return np.array([self.id_of(c) for c in text], dtype=np.int64)


# ---------------------------------------------------------------------------
# Fonts and glyph rendering

def discover_fonts() -> list[str]:
    """TTF files bundled with matplotlib plus system font directories."""
    dirs = []
    try:
        import matplotlib
        dirs.append(os.path.join(os.path.dirname(matplotlib.__file__),
                                 "mpl-data", "fonts", "ttf"))
    except ImportError:
        pass
    dirs += ["/usr/share/fonts", "/usr/local/share/fonts"]
    found: list[str] = []
    for d in dirs:
        if os.path.isdir(d):
            found += glob.glob(os.path.join(d, "**", "*.ttf"), recursive=True)
    # oblique/italic faces make poor logo glyphs
    found = [f for f in found if "Oblique" not in f and "Italic" not in f]
    return sorted(set(found))


def _letterbox(arr: np.ndarray, size: int) -> np.ndarray:
    """Scale to fit a size x size square, preserving aspect, zero padding."""
    h, w = arr.shape
    if h == 0 or w == 0:
        return np.zeros((size, size), dtype=np.float32)
    scale = size / max(h, w)
    nh, nw = max(1, round(h * scale)), max(1, round(w * scale))
    img = Image.fromarray(arr.astype(np.uint8)).resize((nw, nh), Image.BILINEAR)
    out = np.zeros((size, size), dtype=np.float32)
    top = (size - nh) // 2
    left = (size - nw) // 2
    out[top:top + nh, left:left + nw] = np.asarray(img, dtype=np.float32)
    return out


def _placeholder_glyph(size: int) -> np.ndarray:
    """Filled square with a margin, used when a font lacks the glyph."""
    out = np.zeros((size, size), dtype=np.float32)
    m = size // 8
    out[m:size - m, m:size - m] = V_MAX
    out[2 * m:size - 2 * m, 2 * m:size - 2 * m] = V_MAX * 0.25
    return out


def render_glyph(char: str, font_path: str | None = None,
                 size: int = GLYPH_SIZE) -> np.ndarray:
    """Render one character (or word) to a size x size grayscale raster."""
    if font_path is None:
        font = ImageFont.load_default(size=int(size * 0.8))
    else:
        font = ImageFont.truetype(font_path, size=int(size * 0.8))
    pad = size
    img = Image.new("L", (len(char) * pad + 2 * pad, 3 * pad), 0)
    draw = ImageDraw.Draw(img)
    draw.text((pad, pad), char, fill=255, font=font)
    arr = np.asarray(img, dtype=np.float32)
    ys, xs = np.nonzero(arr)
    if len(xs) == 0:
        return _placeholder_glyph(size)
    arr = arr[ys.min():ys.max() + 1, xs.min():xs.max() + 1]
    return _letterbox(arr, size)


# ---------------------------------------------------------------------------
# Synthetic corpus

@dataclass
class SynthConfig:
    """Knobs for the synthetic corpus generator."""

    n_records: int = 500
    fonts: list[str] | None = None          # None -> discover_fonts()
    styles: tuple[str, ...] = LAYOUT_STYLES
    words: tuple[str, ...] = WORDS
    min_words: int = 1
    max_words: int = 2
    canvas: tuple[int, int] = (CANVAS_SIZE, CANVAS_SIZE)
    glyph_size: int = GLYPH_SIZE

    def resolve_fonts(self) -> list[str]:
        fonts = self.fonts if self.fonts is not None else discover_fonts()
        if not fonts:
            raise CorpusError("no font source available for synthetic corpus")
        for f in fonts:
            if not os.path.isfile(f):
                raise CorpusError(f"font file not found: {f}")
        return fonts


def _fit_line(n: int, size: float, limit: float) -> tuple[float, float]:
    """Shrink glyph size so n boxes with a small gap fit within limit."""
    gap = max(2.0, 0.08 * size)
    if n * (size + gap) > limit:
        size = limit / n - gap
        if size < 4.0:
            gap = 1.0
            size = max(3.0, limit / n - gap)
    return size, gap


def _line_boxes(n: int, size: float, gap: float, center_along: float,
                center_across: float, horizontal: bool) -> list[LayoutParams]:
    pitch = size + gap
    total = n * pitch - gap
    start = center_along - total / 2 + size / 2
    boxes = []
    for i in range(n):
        a = start + i * pitch
        if horizontal:
            boxes.append(LayoutParams(a, center_across, size, size))
        else:
            boxes.append(LayoutParams(center_across, a, size, size))
    return boxes


def _style_layout(style: str, n: int, tokens: list[tuple[int, int]],
                  canvas: tuple[int, int], rng: np.random.Generator) -> list[LayoutParams]:
    wc, hc = canvas
    margin = 8.0
    if style == "horizontal":
        size, gap = _fit_line(n, rng.uniform(16, 26), wc - 2 * margin)
        y = hc / 2 + rng.uniform(-12, 12)
        return _line_boxes(n, size, gap, wc / 2, y, horizontal=True)
    if style == "vertical":
        size, gap = _fit_line(n, rng.uniform(16, 26), hc - 2 * margin)
        x = wc / 2 + rng.uniform(-12, 12)
        return _line_boxes(n, size, gap, hc / 2, x, horizontal=False)
    if style == "two_line":
        if len(tokens) >= 2:
            cut_tok = rng.integers(1, len(tokens))
            cut = tokens[cut_tok][0]
        else:
            cut = int(rng.integers(1, n)) if n > 1 else 1
        cut = min(max(cut, 1), n - 1) if n > 1 else 1
        groups = [list(range(0, cut)), list(range(cut, n))] if n > 1 else [[0]]
        size = rng.uniform(16, 24)
        sizes = []
        for gidx in groups:
            s, gap = _fit_line(len(gidx), size, wc - 2 * margin)
            sizes.append((s, gap))
        s_min = min(s for s, _ in sizes)
        line_gap = rng.uniform(3, 10)
        total_h = 2 * s_min + line_gap
        y0 = hc / 2 - total_h / 2 + s_min / 2
        boxes: list[LayoutParams] = []
        for li, gidx in enumerate(groups):
            _, gap = sizes[li]
            y = y0 + li * (s_min + line_gap)
            boxes += _line_boxes(len(gidx), s_min, gap, wc / 2, y, horizontal=True)
        return boxes
    if style == "scaled_emphasis":
        size, gap = _fit_line(n, rng.uniform(15, 22), wc - 2 * margin - 0.6 * 22)
        big = int(rng.integers(0, n))
        factor = 1.5
        sizes = [size * factor if i == big else size for i in range(n)]
        total = sum(sizes) + gap * (n - 1)
        x = wc / 2 - total / 2
        y = hc / 2 + rng.uniform(-8, 8)
        boxes = []
        for s in sizes:
            boxes.append(LayoutParams(x + s / 2, y, s, s))
            x += s + gap
        return boxes
    raise CorpusError(f"unknown layout style: {style}")


def _compose_record(glyphs: np.ndarray, boxes: np.ndarray,
                    canvas: tuple[int, int]) -> np.ndarray:
    placed = composition.place_glyphs(
        torch.as_tensor(glyphs, dtype=torch.float32),
        torch.as_tensor(boxes, dtype=torch.float32),
        glyph_dims=(glyphs.shape[-1], glyphs.shape[-2]),
        canvas_dims=canvas,
    )
    return composition.compose_canvas(placed).numpy()


def generate_synthetic_corpus(config: SynthConfig, seed: int) -> list[LogoRecord]:
    """Deterministic synthetic logo corpus; per-record seeded."""
    fonts = config.resolve_fonts()
    vocab = build_vocab(config.words)
    records = []
    glyph_cache: dict[tuple[str, str], np.ndarray] = {}
    for i in range(config.n_records):
        rng = np.random.default_rng([seed, i])
        n_words = int(rng.integers(config.min_words, config.max_words + 1))
        words = []
        while True:
            words = [str(rng.choice(config.words)) for _ in range(n_words)]
            if sum(len(w) for w in words) <= MAX_ELEMENTS:
                break
            n_words -= 1
        text = "".join(words)
        tokens = []
        pos = 0
        for w in words:
            tokens.append((pos, pos + len(w)))
            pos += len(w)
        font = str(rng.choice(fonts))
        style = str(rng.choice(config.styles))
        if style == "two_line" and len(tokens) < 2:
            style = "horizontal"  # never break a single token across lines
        layout = _style_layout(style, len(text), tokens, config.canvas, rng)
        glyphs = []
        for ch in text:
            key = (ch, font)
            if key not in glyph_cache:
                glyph_cache[key] = render_glyph(ch, font, config.glyph_size)
            glyphs.append(GlyphImage(pixels=glyph_cache[key].copy(),
                                     char_id=vocab.get(ch, 0), char=ch))
        boxes = np.stack([p.as_array() for p in layout])
        logo = _compose_record(np.stack([g.pixels for g in glyphs]), boxes,
                               config.canvas)
        rec = LogoRecord(text=text, glyphs=glyphs, layout=layout,
                         logo_image=logo, source="synthetic", tokens=tokens)
        rec.validate(config.canvas)
        records.append(rec)
    return records


def build_vocab(words) -> dict[str, int]:
    chars = sorted({c for w in words for c in w})
    return {c: i + 1 for i, c in enumerate(chars)}


def vocab_of_records(records) -> dict[str, int]:
    chars = sorted({c for r in records for c in r.text})
    return {c: i + 1 for i, c in enumerate(chars)}


# ---------------------------------------------------------------------------
# Splits

def split_dataset(records, test_fraction: float, seed: int):
    """Deterministic shuffled partition into (train, test).

    The test side gets round(test_fraction * n) records (banker's rounding),
    so 10 records at 0.10 give 1, and a single record at 0.5 gives (1, 0).
    """
    if not (0 < test_fraction < 1):
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    records = list(records)
    n = len(records)
    n_test = int(round(test_fraction * n))
    order = np.random.default_rng(seed).permutation(n)
    test_idx = set(order[:n_test].tolist())
    train = [records[i] for i in range(n) if i not in test_idx]
    test = [records[i] for i in range(n) if i in test_idx]
    return train, test


# ---------------------------------------------------------------------------
# Character embeddings

def load_char_embeddings(path: str | None = None, vocab: dict[str, int] | None = None,
                         dim: int = 128, seed: int = 0) -> EmbeddingTable:
    """Load a "V d" header text embedding file, or build a learnable table.

    With no file, returns a seeded standard-normal table over ``vocab``
    (trained jointly with the rest of the model); row 0 is always UNK.
    """
    if path is None:
        if vocab is None:
            raise ValueError("need a vocab to build a learnable embedding table")
        rng = np.random.default_rng(seed)
        vectors = rng.standard_normal((len(vocab) + 1, dim)).astype(np.float32)
        return EmbeddingTable(vocab=dict(vocab), vectors=vectors, trainable=True)

    vocab_out: dict[str, int] = {}
    rows: list[np.ndarray] = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise CorpusError(f"{path}:1: expected header 'V d'")
        try:
            v_count, d = int(header[0]), int(header[1])
        except ValueError as e:
            raise CorpusError(f"{path}:1: bad header: {e}") from e
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(" ")
            if len(parts) != d + 1:
                raise CorpusError(f"{path}:{lineno}: expected 1 token + {d} floats, "
                                  f"got {len(parts)} fields")
            try:
                vec = np.array([float(x) for x in parts[1:]], dtype=np.float32)
            except ValueError as e:
                raise CorpusError(f"{path}:{lineno}: bad float: {e}") from e
            vocab_out[parts[0]] = len(rows) + 1
            rows.append(vec)
    if len(rows) != v_count:
        raise CorpusError(f"{path}: header declared {v_count} rows, found {len(rows)}")
    vectors = np.vstack([np.zeros((1, d), dtype=np.float32), np.stack(rows)])
    return EmbeddingTable(vocab=vocab_out, vectors=vectors, trainable=False)


# ---------------------------------------------------------------------------
# Dataset directory interchange (JSON-lines index + image files)

INDEX_NAME = "index.jsonl"


def save_dataset_dir(records, root: str) -> None:
    """Write records as an index.jsonl plus PNG files (pixels quantized)."""
    os.makedirs(root, exist_ok=True)
    img_dir = os.path.join(root, "images")
    os.makedirs(img_dir, exist_ok=True)
    lines = []
    for ri, rec in enumerate(records):
        glyph_paths = []
        for gi, g in enumerate(rec.glyphs):
            rel = f"images/r{ri:05d}_g{gi:02d}.png"
            Image.fromarray(np.clip(np.round(g.pixels), 0, 255).astype(np.uint8)).save(
                os.path.join(root, rel))
            glyph_paths.append(rel)
        logo_rel = f"images/r{ri:05d}_logo.png"
        Image.fromarray(np.clip(np.round(rec.logo_image), 0, 255).astype(np.uint8)).save(
            os.path.join(root, logo_rel))
        lines.append(json.dumps({
            "text": rec.text,
            "glyphs": glyph_paths,
            "boxes": [[p.x_c, p.y_c, p.w, p.h] for p in rec.layout],
            "logo": logo_rel,
            "tokens": [[s, e] for s, e in rec.tokens],
        }, ensure_ascii=False))
    with open(os.path.join(root, INDEX_NAME), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dataset_dir(root: str, strict: bool = False, adapter=None,
                     vocab: dict[str, int] | None = None) -> list[LogoRecord]:
    """Load a dataset directory written in the JSON-lines index schema.

    Box coordinates in the index are in the original logo image space and
    are rescaled to the working canvas; glyph crops are letterboxed to
    64x64. Invalid records raise immediately under ``strict`` and are
    skipped with a warning otherwise. ``adapter``, when given, maps one raw
    index entry (dict) to the schema dict above, as the extension point for
    other annotation formats.
    """
    index_path = os.path.join(root, INDEX_NAME)
    if not os.path.isfile(index_path):
        raise FileNotFoundError(f"no {INDEX_NAME} in {root}")
    records: list[LogoRecord] = []
    with open(index_path, encoding="utf-8") as fh:
        entries = [json.loads(line) for line in fh if line.strip()]
    if not entries:
        log.warning("empty dataset index: %s", index_path)
        return []
    if adapter is not None:
        entries = [adapter(e) for e in entries]
    if vocab is None:
        labels = []
        for e in entries:
            try:
                labels += _element_labels(e)[0]
            except (CorpusError, KeyError):
                pass
        vocab = {c: i + 1 for i, c in enumerate(sorted(set(labels)))}
    for i, entry in enumerate(entries):
        try:
            records.append(_entry_to_record(entry, root, vocab))
        except (CorpusError, OSError, KeyError, ValueError) as e:
            if strict:
                raise CorpusError(f"record {i}: {e}") from e
            log.warning("skipping record %d: %s", i, e)
    return records


def _element_labels(entry: dict) -> tuple[list[str], list[tuple[int, int]]]:
    """Per-glyph labels and element-index token spans for one index entry.

    Character-level entries have one glyph per character of ``text`` and
    ``tokens`` groups characters into words. Word-level entries (one glyph
    per word, e.g. English data) carry either an explicit ``elements`` list
    or ``tokens`` character spans that cut ``text`` into the word labels.
    """
    text = entry["text"]
    n_g = len(entry["glyphs"])
    tokens = [tuple(t) for t in entry.get("tokens") or []]
    if "elements" in entry:
        labels = list(entry["elements"])
        if len(labels) != n_g:
            raise CorpusError("elements list does not match glyph count")
        return labels, [(i, i + 1) for i in range(n_g)]
    if n_g == len(text):
        return list(text), tokens or [(i, i + 1) for i in range(n_g)]
    if tokens and len(tokens) == n_g:
        return [text[s:e] for s, e in tokens], [(i, i + 1) for i in range(n_g)]
    raise CorpusError("glyph count matches neither characters nor token spans")


def _entry_to_record(entry: dict, root: str, vocab: dict[str, int]) -> LogoRecord:
    text = entry["text"]
    labels, tokens = _element_labels(entry)
    logo_img = Image.open(os.path.join(root, entry["logo"])).convert("L")
    ow, oh = logo_img.size
    sx = CANVAS_SIZE / ow
    sy = CANVAS_SIZE / oh
    logo = np.asarray(logo_img.resize((CANVAS_SIZE, CANVAS_SIZE), Image.BILINEAR),
                      dtype=np.float32)
    glyphs = []
    for label, rel in zip(labels, entry["glyphs"]):
        arr = np.asarray(Image.open(os.path.join(root, rel)).convert("L"),
                         dtype=np.float32)
        glyphs.append(GlyphImage(pixels=_letterbox(arr, GLYPH_SIZE),
                                 char_id=vocab.get(label, 0), char=label))
    layout = [LayoutParams(x * sx, y * sy, w * sx, h * sy)
              for x, y, w, h in entry["boxes"]]
    rec = LogoRecord(text=text, glyphs=glyphs, layout=layout, logo_image=logo,
                     source="dataset", tokens=tokens)
    rec.validate()
    return rec


# ---------------------------------------------------------------------------
# Lossless record persistence (float-exact round trip)

def save_records(records, path: str) -> None:
    """Lossless npz archive of a record list."""
    payload: dict[str, np.ndarray] = {
        "meta": np.array(json.dumps([{
            "text": r.text,
            "source": r.source,
            "tokens": [[s, e] for s, e in r.tokens],
            "char_ids": [g.char_id for g in r.glyphs],
        } for r in records]).encode("utf-8")),
    }
    for i, r in enumerate(records):
        payload[f"glyphs_{i}"] = r.glyphs_array()
        payload[f"boxes_{i}"] = r.boxes_array()
        payload[f"logo_{i}"] = r.logo_image.astype(np.float32)
    np.savez_compressed(path, **payload)


def load_records(path: str) -> list[LogoRecord]:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"].item()).decode("utf-8"))
        records = []
        for i, m in enumerate(meta):
            glyphs_arr = data[f"glyphs_{i}"]
            boxes = data[f"boxes_{i}"]
            glyphs = [GlyphImage(pixels=glyphs_arr[j], char_id=m["char_ids"][j],
                                 char=m["text"][j] if j < len(m["text"]) else "")
                      for j in range(glyphs_arr.shape[0])]
            layout = [LayoutParams(*boxes[j]) for j in range(boxes.shape[0])]
            records.append(LogoRecord(
                text=m["text"], glyphs=glyphs, layout=layout,
                logo_image=data[f"logo_{i}"], source=m["source"],
                tokens=[tuple(t) for t in m["tokens"]],
            ))
    return records
