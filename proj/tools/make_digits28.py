#!/usr/bin/env python3
"""Build a 28x28 MNIST-layout IDX dataset from the UCI handwritten digits
bundled with scikit-learn.

The 8x8 digits (17 gray levels) are bilinearly upscaled to 20x20 and centred
in a 28x28 frame, matching the MNIST framing convention. Output files use the
standard IDX names so any MNIST loader can read them.

Usage: make_digits28.py OUT_DIR [--test-count 500] [--seed 7]
"""
import argparse
import os
import struct

import numpy as np
from PIL import Image
from sklearn.datasets import load_digits


def write_idx_images(path, images):
    n, h, w = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, h, w))
        f.write(images.astype(np.uint8).tobytes())


def write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(np.asarray(labels, dtype=np.uint8).tobytes())


def upscale(img8):
    src = Image.fromarray(np.round(img8 * (255.0 / 16.0)).astype(np.uint8))
    big = np.asarray(src.resize((20, 20), Image.BILINEAR), dtype=np.uint8)
    out = np.zeros((28, 28), dtype=np.uint8)
    out[4:24, 4:24] = big
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir")
    ap.add_argument("--test-count", type=int, default=500)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    digits = load_digits()
    order = np.random.RandomState(args.seed).permutation(len(digits.target))
    images = np.stack([upscale(digits.images[i]) for i in order])
    labels = digits.target[order]

    n_test = args.test_count
    os.makedirs(args.out_dir, exist_ok=True)
    write_idx_images(os.path.join(args.out_dir, "train-images-idx3-ubyte"), images[n_test:])
    write_idx_labels(os.path.join(args.out_dir, "train-labels-idx1-ubyte"), labels[n_test:])
    write_idx_images(os.path.join(args.out_dir, "t10k-images-idx3-ubyte"), images[:n_test])
    write_idx_labels(os.path.join(args.out_dir, "t10k-labels-idx1-ubyte"), labels[:n_test])


if __name__ == "__main__":
    main()
