"""Command-line workflows: train, sample, eval, compose, serve.

Every command is deterministic under a fixed seed and writes only below its
--out directory. Config precedence for training: explicit flags > --config
JSON file > built-in defaults; the resolved config is echoed next to the
outputs. Exit codes: 0 ok, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import base64
import colorsys
import io
import json
import os
import sys
from dataclasses import asdict

import numpy as np
import torch
from PIL import Image, ImageDraw

from . import composition, corpus, evaluation
from .composition import CANVAS_SIZE
from .corpus import MAX_ELEMENTS, SynthConfig, generate_synthetic_corpus
from .generator import layout_from_json, layout_to_json
from .training import TrainConfig, Trainer, train

TRAIN_DEFAULTS = {
    "synthetic": 500,
    "data": None,
    "epochs": 10,
    "batch_size": 32,
    "seed": 0,
    "lambda_ol": 10.0,
    "backbone": "small",
    "ablation": [],
    "fid_every": 1,
}

ABLATIONS = ("no_text", "no_img", "no_seq_dis", "no_img_dis")


def order_color(i: int, n: int) -> tuple[int, int, int]:
    """Reading-order ramp from red (first glyph) to purple (last)."""
    hue = 0.78 * (i / max(1, n - 1))
    r, g, b = colorsys.hsv_to_rgb(hue, 0.95, 0.95)
    return int(r * 255), int(g * 255), int(b * 255)


def render_overlay(logo: np.ndarray, boxes) -> Image.Image:
    img = Image.fromarray(np.clip(np.round(logo), 0, 255).astype(np.uint8)) \
        .convert("RGB")
    draw = ImageDraw.Draw(img)
    n = len(boxes)
    for i, (x, y, w, h) in enumerate(boxes):
        draw.rectangle([x - w / 2, y - h / 2, x + w / 2, y + h / 2],
                       outline=order_color(i, n), width=1)
    return img


def glyphs_for_text(text: str, font_path: str | None):
    if font_path is None:
        fonts = corpus.discover_fonts()
        font_path = fonts[0] if fonts else None
    return np.stack([corpus.render_glyph(c, font_path) for c in text])


def compose_to_array(glyphs: np.ndarray, boxes) -> tuple[np.ndarray, float]:
    placed = composition.place_glyphs(
        torch.as_tensor(glyphs, dtype=torch.float32),
        torch.as_tensor(np.asarray(boxes, dtype=np.float32)))
    logo = composition.compose_canvas(placed).numpy()
    overlap = float(composition.hard_overlap(placed))
    return logo, overlap


def save_png(arr: np.ndarray, path: str) -> None:
    Image.fromarray(np.clip(np.round(arr), 0, 255).astype(np.uint8)).save(path)


# ---------------------------------------------------------------------------
# train

def _resolve_train_config(args) -> dict:
    resolved = dict(TRAIN_DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(TRAIN_DEFAULTS)
        if unknown:
            raise SystemExit(f"unknown config keys: {sorted(unknown)}")
        resolved.update(file_cfg)
    for key in TRAIN_DEFAULTS:
        val = getattr(args, key, None)
        if val not in (None, []):
            resolved[key] = val
    bad = [a for a in resolved["ablation"] if a not in ABLATIONS]
    if bad:
        raise SystemExit(f"unknown ablation flags: {bad} (choose from {ABLATIONS})")
    return resolved


def cmd_train(args) -> int:
    resolved = _resolve_train_config(args)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "config.json"), "w") as fh:
        json.dump(resolved, fh, indent=2, sort_keys=True)

    if resolved["data"]:
        records = corpus.load_dataset_dir(resolved["data"])
    else:
        records = generate_synthetic_corpus(
            SynthConfig(n_records=resolved["synthetic"]), seed=resolved["seed"])
    if not records:
        print("no records to train on", file=sys.stderr)
        return 1

    cfg = TrainConfig(
        lambda_ol=resolved["lambda_ol"],
        batch_size=resolved["batch_size"],
        epochs=resolved["epochs"],
        seed=resolved["seed"],
        backbone=resolved["backbone"],
        fid_every=resolved["fid_every"],
        **{flag: flag in resolved["ablation"] for flag in ABLATIONS},
    )
    trainer, ckpts = train(records, cfg, out_dir=args.out)
    print(f"trained {trainer.global_step} steps; checkpoints: "
          f"{[os.path.basename(c) for c in ckpts]}")
    return 0


# ---------------------------------------------------------------------------
# sample

def cmd_sample(args) -> int:
    if len(args.text) > MAX_ELEMENTS:
        print(f"text has {len(args.text)} elements; the model supports at most "
              f"N = {MAX_ELEMENTS}", file=sys.stderr)
        return 2
    if not args.text:
        print("empty text", file=sys.stderr)
        return 2
    trainer = Trainer.load_checkpoint(args.ckpt)
    trainer.model.eval()
    os.makedirs(args.out, exist_ok=True)

    glyphs_np = glyphs_for_text(args.text, args.font)
    glyphs = torch.as_tensor(glyphs_np, dtype=torch.float32).unsqueeze(0)
    char_ids = trainer.model.char_ids(args.text).unsqueeze(0)
    gen = torch.Generator().manual_seed(args.seed)
    for i in range(args.k):
        z = torch.randn(1, trainer.cfg.d_z, generator=gen)
        with torch.no_grad():
            boxes = trainer.model.generate(glyphs, char_ids, z)[0]
        boxes = (boxes * 1e4).round() / 1e4  # stable JSON and PNG bytes
        layout_json = layout_to_json(boxes)
        with open(os.path.join(args.out, f"layout_{i:02d}.json"), "w") as fh:
            fh.write(layout_json)
        logo, _ = compose_to_array(glyphs_np, boxes.tolist())
        save_png(logo, os.path.join(args.out, f"logo_{i:02d}.png"))
        render_overlay(logo, boxes.tolist()).save(
            os.path.join(args.out, f"overlay_{i:02d}.png"))
    print(f"wrote {args.k} layout candidates under {args.out}")
    return 0


# ---------------------------------------------------------------------------
# eval

def cmd_eval(args) -> int:
    if args.data:
        records = corpus.load_dataset_dir(args.data)
    else:
        records = generate_synthetic_corpus(
            SynthConfig(n_records=args.synthetic), seed=args.seed)
    if len(records) < 4:
        print("need at least 4 records to evaluate", file=sys.stderr)
        return 1
    _, test_records = corpus.split_dataset(records, 0.10, seed=args.seed)
    reference = [r.logo_image for r in records]

    if args.baseline:
        method = f"rule_{args.baseline}"
        layouts = [evaluation.rule_layout(rec, args.baseline, seed=args.seed + i)
                   for i, rec in enumerate(test_records)]
        images = []
        for rec, layout in zip(test_records, layouts):
            logo, _ = compose_to_array(rec.glyphs_array(),
                                       np.stack([p.as_array() for p in layout]))
            images.append(logo)
    else:
        if not args.ckpt:
            print("--ckpt is required unless --baseline is given", file=sys.stderr)
            return 2
        method = "model"
        trainer = Trainer.load_checkpoint(args.ckpt)
        layouts = trainer.generate_layouts(test_records, seed=args.seed)
        images = trainer.compose_generated(test_records, seed=args.seed)

    fid, is_score = evaluation.evaluate_fid_is(images, reference)
    overlap = evaluation.mean_hard_overlap(test_records, layouts)
    row = {"method": method, "fid": round(fid, 4), "is_score": round(is_score, 4),
           "mean_overlap": round(overlap, 2)}
    print(f"{method}: FID={row['fid']} IS={row['is_score']} "
          f"mean_overlap={row['mean_overlap']}px")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        evaluation.write_report([row], os.path.join(args.out, "report.csv"),
                                os.path.join(args.out, "report.md"))
    return 0


# ---------------------------------------------------------------------------
# compose

def cmd_compose(args) -> int:
    with open(args.layout) as fh:
        canvas, boxes = layout_from_json(fh.read())
    if args.glyphs_dir:
        files = sorted(f for f in os.listdir(args.glyphs_dir)
                       if f.lower().endswith(".png"))
        if len(files) != len(boxes):
            print(f"{len(files)} glyph files but {len(boxes)} boxes",
                  file=sys.stderr)
            return 2
        glyphs = np.stack([
            corpus._letterbox(np.asarray(
                Image.open(os.path.join(args.glyphs_dir, f)).convert("L"),
                dtype=np.float32), corpus.GLYPH_SIZE)
            for f in files])
    else:
        if len(args.text) != len(boxes):
            print(f"text has {len(args.text)} glyphs but layout has "
                  f"{len(boxes)} boxes", file=sys.stderr)
            return 2
        glyphs = glyphs_for_text(args.text, args.font)
    logo, overlap = compose_to_array(glyphs, boxes)
    save_png(logo, args.out)
    print(f"wrote {args.out} (hard overlap: {overlap:.0f}px)")
    return 0


# ---------------------------------------------------------------------------
# serve

def cmd_serve(args) -> int:
    import uvicorn
    from .service import create_app
    app = create_app(args.ckpt)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="logoforge",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a layout model")
    p.add_argument("--synthetic", type=int, default=None,
                   help="size of the synthetic corpus (ignored with --data)")
    p.add_argument("--data", default=None, help="dataset directory (index.jsonl)")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--lambda-ol", dest="lambda_ol", type=float, default=None)
    p.add_argument("--backbone", choices=("small", "vgg19"), default=None)
    p.add_argument("--ablation", action="append", default=None, choices=ABLATIONS)
    p.add_argument("--fid-every", dest="fid_every", type=int, default=None)
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="sample layout candidates for a text")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--font", default=None)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eval", help="evaluate a checkpoint or a rule baseline")
    p.add_argument("--ckpt", default=None)
    p.add_argument("--data", default=None)
    p.add_argument("--synthetic", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--baseline", choices=("a", "b", "c"), default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compose", help="render a layout JSON to a PNG")
    p.add_argument("--layout", required=True)
    p.add_argument("--text", default="")
    p.add_argument("--font", default=None)
    p.add_argument("--glyphs-dir", dest="glyphs_dir", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("serve", help="run the HTTP layout service")
    p.add_argument("--ckpt", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8700)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    try:
        return args.func(args)
    except SystemExit as e:
        if isinstance(e.code, int):
            return e.code
        print(e.code, file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # keep CLI contracts: nonzero, message on stderr
        print(f"unexpected error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
