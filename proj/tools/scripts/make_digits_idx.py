#!/usr/bin/env python3
# Copyright 2026 The spikeforge Authors.
# SPDX-License-Identifier: Apache-2.0
"""Writes the UCI 8x8 handwritten digits as IDX3/IDX1 files.

The source is the copy of the UCI optdigits test set that ships with
scikit-learn (sklearn/datasets/data/digits.csv.gz). Pixel intensities 0..16
are rescaled to 0..255. Rows are shuffled with a fixed seed (the csv is
ordered by writer block), then the first 1297 become the train split and the
remaining 500 the test split.
"""
import argparse
import gzip
import os
import random
import struct

TRAIN_COUNT = 1297
SPLIT_SEED = 20260


def default_source():
    import sklearn  # only used to locate the bundled csv
    return os.path.join(os.path.dirname(sklearn.__file__), "datasets", "data", "digits.csv.gz")


def write_idx(prefix, rows):
    with open(prefix + "-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(rows), 8, 8))
        for pixels, _ in rows:
            f.write(bytes(min(255, (p * 255) // 16) for p in pixels))
    with open(prefix + "-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(rows)))
        f.write(bytes(label for _, label in rows))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--source", default=None)
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "..", "data", "digits"))
    args = ap.parse_args()
    rows = []
    with gzip.open(args.source or default_source(), "rt") as f:
        for line in f:
            values = [int(float(v)) for v in line.strip().split(",") if v]
            rows.append((values[:64], values[64]))
    random.Random(SPLIT_SEED).shuffle(rows)
    os.makedirs(args.out, exist_ok=True)
    write_idx(os.path.join(args.out, "digits-train"), rows[:TRAIN_COUNT])
    write_idx(os.path.join(args.out, "digits-test"), rows[TRAIN_COUNT:])
    print(f"wrote {TRAIN_COUNT} train / {len(rows) - TRAIN_COUNT} test samples to {args.out}")


if __name__ == "__main__":
    main()
