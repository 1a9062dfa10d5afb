#!/usr/bin/env python3
"""Desk-scale training study: overlap penalty and sequence-critic ablations.

Trains three models on one synthetic corpus (full, lambda_ol=0, and
no-sequence-discriminator), then reports held-out mean hard overlap,
proxy-FID against the corpus logos, and the reading-order monotonicity
rate. Mirrors the ordering claims the full-scale experiments make.
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from logoforge.corpus import SynthConfig, generate_synthetic_corpus, split_dataset, vocab_of_records
from logoforge.evaluation import evaluate_fid_is, mean_hard_overlap, monotone_rate
from logoforge.training import TrainConfig, Trainer


def run_variant(name: str, records, cfg: TrainConfig, out_dir=None) -> dict:
    train_recs, test_recs = split_dataset(records, cfg.test_fraction, seed=cfg.seed)
    t0 = time.time()
    trainer = Trainer(cfg, vocab_of_records(records), out_dir=out_dir)
    trainer.fit(train_recs)
    elapsed = time.time() - t0

    layouts = trainer.generate_layouts(test_recs, seed=123)
    images = trainer.compose_generated(test_recs, seed=123)
    reference = [r.logo_image for r in records]
    fid, is_score = evaluate_fid_is(images, reference)
    return {
        "name": name,
        "train_seconds": round(elapsed, 1),
        "mean_hard_overlap": round(mean_hard_overlap(test_recs, layouts), 2),
        "proxy_fid": round(fid, 3),
        "is_score": round(is_score, 3),
        "monotone_rate": round(monotone_rate(layouts), 3),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--records", type=int, default=500)
    ap.add_argument("--epochs", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    records = generate_synthetic_corpus(SynthConfig(n_records=args.records),
                                        seed=args.seed)

    def cfg(**kw):
        base = dict(epochs=args.epochs, seed=args.seed, batch_size=32,
                    d_v=64, d_e=32, d_c=64, d_z=32, gen_hidden=64,
                    seq_hidden=64, img_base=16, tile_channels=16,
                    checkpoint_every=0, lambda_ol=10.0)
        base.update(kw)
        return TrainConfig(**base)

    results = [
        run_variant("full", records, cfg()),
        run_variant("lambda0", records, cfg(lambda_ol=0.0)),
        run_variant("no_seq_dis", records, cfg(no_seq_dis=True)),
    ]
    print(json.dumps(results, indent=2))
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(results, fh, indent=2)


if __name__ == "__main__":
    main()
