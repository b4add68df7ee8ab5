"""Builds the MS-SSIM reference fixtures.

Writes ten 176x176 RGB pairs and scores them with tf.image.ssim_multiscale on
BT.601 luminance (float64, max_val=255, default filter settings). The C++
implementation must agree with these values to 1e-4.
"""
import json
import os

import numpy as np
import tensorflow as tf
from PIL import Image
from scipy.ndimage import gaussian_filter, shift

HERE = os.path.join(os.path.dirname(os.path.abspath(__file__)), "ms_ssim")
SIZE = 176


def smooth_field(rng, sigma):
    img = np.stack([gaussian_filter(rng.normal(size=(SIZE, SIZE)), sigma) for _ in range(3)], axis=-1)
    img -= img.min()
    img /= img.max()
    return img * 255.0


def luminance(rgb):
    rgb = rgb.astype(np.float64)
    return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]


def make_pair(rng, i):
    a = smooth_field(rng, sigma=2.0 + i) + rng.normal(scale=4.0 + 2 * i, size=(SIZE, SIZE, 3))
    kind = i % 4
    if kind == 0:
        b = a + rng.normal(scale=3.0 + 3 * i, size=a.shape)
    elif kind == 1:
        b = np.stack([gaussian_filter(a[..., c], 0.8 + 0.3 * i) for c in range(3)], axis=-1)
    elif kind == 2:
        b = shift(a, (1 + i % 3, -(i % 2) - 1, 0), mode="nearest")
    else:
        b = 0.7 * a + 40.0 + rng.normal(scale=6.0, size=a.shape)
    return np.clip(np.rint(a), 0, 255).astype(np.uint8), np.clip(np.rint(b), 0, 255).astype(np.uint8)


def main():
    rng = np.random.default_rng(20240611)
    records = []
    for i in range(10):
        a, b = make_pair(rng, i)
        name_a, name_b = f"pair{i:02d}_a.png", f"pair{i:02d}_b.png"
        Image.fromarray(a, "RGB").save(os.path.join(HERE, name_a))
        Image.fromarray(b, "RGB").save(os.path.join(HERE, name_b))
        ta = tf.constant(luminance(a)[None, :, :, None])
        tb = tf.constant(luminance(b)[None, :, :, None])
        value = float(tf.image.ssim_multiscale(ta, tb, max_val=255.0).numpy()[0])
        records.append({"a": name_a, "b": name_b, "ms_ssim": value})
        print(name_a, name_b, value)
    with open(os.path.join(HERE, "expected.json"), "w") as f:
        json.dump(records, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
