#!/usr/bin/env python3
"""Convert the digits bundled with the `mnist` npm package into gzipped IDX files.

The package ships 10,000 MNIST digits as JSON arrays of pixel intensities in
[0, 1] rounded to three decimals; multiplying by 255 and rounding recovers the
original bytes. Samples are shuffled with a fixed seed and split per class into
train and test files laid out like the original MNIST distribution.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/make_mnist_subset.py package/src/digits data/mnist-subset
"""

import argparse
import gzip
import json
import pathlib
import random
import struct

SIDE = 28


def write_idx(path, magic, dims, payload):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">I", magic))
        for d in dims:
            f.write(struct.pack(">I", d))
        f.write(bytes(payload))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("digits_dir", type=pathlib.Path)
    ap.add_argument("out_dir", type=pathlib.Path)
    ap.add_argument("--test-fraction", type=float, default=0.2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    train, test = [], []
    for digit in range(10):
        raw = json.loads((args.digits_dir / f"{digit}.json").read_text())["data"]
        count = len(raw) // (SIDE * SIDE)
        images = [
            bytes(round(v * 255) for v in raw[i * SIDE * SIDE:(i + 1) * SIDE * SIDE])
            for i in range(count)
        ]
        rng.shuffle(images)
        n_test = round(count * args.test_fraction)
        test += [(img, digit) for img in images[:n_test]]
        train += [(img, digit) for img in images[n_test:]]

    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name, rows in (("train", train), ("t10k", test)):
        rng.shuffle(rows)
        pixels = b"".join(img for img, _ in rows)
        labels = bytes(lbl for _, lbl in rows)
        write_idx(args.out_dir / f"{name}-images-idx3-ubyte.gz", 0x803,
                  (len(rows), SIDE, SIDE), pixels)
        write_idx(args.out_dir / f"{name}-labels-idx1-ubyte.gz", 0x801,
                  (len(rows),), labels)
        print(f"{name}: {len(rows)} samples")


if __name__ == "__main__":
    main()
