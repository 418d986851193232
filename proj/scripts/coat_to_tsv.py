#!/usr/bin/env python3
"""Convert the Coat rating matrices into interaction TSV files.

Coat ships as two space-separated rating matrices (users x items, ratings
0-5, 0 = unobserved): train.ascii (self-selected) and test.ascii (random
exposure). Ratings >= 3 become positive interactions. The training matrix is
split per user into train/validation so early stopping has a signal.

Usage:
  python3 scripts/coat_to_tsv.py --in data/coat --out data/coat [--seed 2025]
"""

import argparse
import random
from pathlib import Path


def read_matrix(path):
    rows = []
    with open(path) as f:
        for line in f:
            fields = line.split()
            if fields:
                rows.append([int(x) for x in fields])
    return rows


def positives(matrix):
    return [(u, i) for u, row in enumerate(matrix) for i, r in enumerate(row) if r >= 3]


def write_tsv(pairs, path):
    with open(path, "w") as f:
        for u, i in pairs:
            f.write(f"{u}\t{i}\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--in", dest="src", required=True, help="directory with *.ascii files")
    ap.add_argument("--out", dest="dst", required=True, help="output directory")
    ap.add_argument("--seed", type=int, default=2025)
    ap.add_argument("--val-fraction", type=float, default=0.1)
    args = ap.parse_args()

    src = Path(args.src)
    dst = Path(args.dst)
    dst.mkdir(parents=True, exist_ok=True)

    train_all = positives(read_matrix(src / "train.ascii"))
    test = positives(read_matrix(src / "test.ascii"))

    by_user = {}
    for u, i in train_all:
        by_user.setdefault(u, []).append((u, i))
    train, valid = [], []
    for u in sorted(by_user):
        items = by_user[u]
        random.Random((args.seed, u)).shuffle(items)
        n_val = round(args.val_fraction * len(items))
        valid.extend(items[:n_val])
        train.extend(items[n_val:])
    train.sort()
    valid.sort()

    write_tsv(train, dst / "train.tsv")
    write_tsv(valid, dst / "valid.tsv")
    write_tsv(test, dst / "test.tsv")
    print(f"train: {len(train)}  valid: {len(valid)}  test: {len(test)}")


if __name__ == "__main__":
    main()
