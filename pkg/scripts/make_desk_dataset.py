#!/usr/bin/env python3
"""Build the desk-scale MNIST subset shipped in data/mnist-desk/.

Source: the `mnist` npm package (https://www.npmjs.com/package/mnist), which
bundles 10,000 MNIST digits as JSON (one file per class, pixel intensities
stored as round(x/255, 3)).  This script converts a balanced 500-per-class
training split and a disjoint 100-per-class test split back to uint8 pixels
and writes the four standard gzipped IDX files.

Usage:
    npm install mnist
    python scripts/make_desk_dataset.py node_modules/mnist/src/digits data/mnist-desk
"""

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))
from eqspike.data import (TEST_IMAGES, TEST_LABELS, TRAIN_IMAGES, TRAIN_LABELS,
                          write_idx_images, write_idx_labels)

TRAIN_PER_CLASS = 500
TEST_PER_CLASS = 100
SHUFFLE_SEED = 20240617


def main(digits_dir: Path, out_dir: Path) -> None:
    rng = np.random.default_rng(SHUFFLE_SEED)
    train_x, train_y, test_x, test_y = [], [], [], []
    for digit in range(10):
        with open(digits_dir / f"{digit}.json") as f:
            flat = np.array(json.load(f)["data"], dtype=np.float64)
        images = flat.reshape(-1, 784)
        if len(images) < TRAIN_PER_CLASS + TEST_PER_CLASS:
            raise SystemExit(f"digit {digit}: only {len(images)} samples")
        pixels = np.round(images * 255.0).astype(np.uint8)
        order = rng.permutation(len(pixels))
        train_x.append(pixels[order[:TRAIN_PER_CLASS]])
        test_x.append(pixels[order[TRAIN_PER_CLASS:TRAIN_PER_CLASS + TEST_PER_CLASS]])
        train_y.append(np.full(TRAIN_PER_CLASS, digit, dtype=np.uint8))
        test_y.append(np.full(TEST_PER_CLASS, digit, dtype=np.uint8))

    def flatten_shuffled(xs, ys):
        x = np.concatenate(xs)
        y = np.concatenate(ys)
        order = rng.permutation(len(x))
        return x[order], y[order]

    train_x, train_y = flatten_shuffled(train_x, train_y)
    test_x, test_y = flatten_shuffled(test_x, test_y)

    out_dir.mkdir(parents=True, exist_ok=True)
    write_idx_images(out_dir / (TRAIN_IMAGES + ".gz"), train_x)
    write_idx_labels(out_dir / (TRAIN_LABELS + ".gz"), train_y)
    write_idx_images(out_dir / (TEST_IMAGES + ".gz"), test_x)
    write_idx_labels(out_dir / (TEST_LABELS + ".gz"), test_y)
    print(f"wrote {len(train_x)} train / {len(test_x)} test images to {out_dir}")


if __name__ == "__main__":
    if len(sys.argv) != 3:
        raise SystemExit(__doc__)
    main(Path(sys.argv[1]), Path(sys.argv[2]))
