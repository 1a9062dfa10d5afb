#!/usr/bin/env python3
"""Latency benchmark for the sampling endpoint (k=16 target: < 2 s)."""

import argparse
import statistics
import time

from fastapi.testclient import TestClient

from logoforge.service import create_app


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--ckpt", required=True)
    ap.add_argument("--text", default="HARBORLIGHT")
    ap.add_argument("--k", type=int, default=16)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    client = TestClient(create_app(args.ckpt))
    client.post("/api/sample", json={"text": args.text, "k": 1, "seed": 0})  # warm up

    times = []
    for i in range(args.repeats):
        t0 = time.perf_counter()
        resp = client.post("/api/sample",
                           json={"text": args.text, "k": args.k, "seed": i})
        resp.raise_for_status()
        times.append(time.perf_counter() - t0)
    print(f"k={args.k} text_len={len(args.text)} repeats={args.repeats}")
    print(f"median {statistics.median(times) * 1000:.0f} ms, "
          f"max {max(times) * 1000:.0f} ms")


if __name__ == "__main__":
    main()
