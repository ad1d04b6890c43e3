#!/usr/bin/env python3
"""Generate demo input images (checkerboard, grid lines, text-like blocks)."""

import argparse
from pathlib import Path

import numpy as np

from geolens import ImageBuffer, save_image


def checkerboard(size, pitch, offset):
    yy, xx = np.mgrid[0:size, 0:size]
    cells = (((xx + offset) // pitch) + ((yy + offset) // pitch)) % 2
    px = np.zeros((size, size, 4), np.uint8)
    px[..., :3] = np.where(cells[..., None], 235, 30)
    px[..., 3] = 255
    return ImageBuffer(px)


def gridlines(size, pitch):
    yy, xx = np.mgrid[0:size, 0:size]
    on = ((xx % pitch) == 0) | ((yy % pitch) == 0)
    px = np.full((size, size, 4), 255, np.uint8)
    px[on, 0] = 40
    px[on, 1] = 40
    px[on, 2] = 120
    return ImageBuffer(px)


def blocks(size, rng_seed=0):
    rng = np.random.default_rng(rng_seed)
    px = np.full((size, size, 4), 245, np.uint8)
    y = 12
    while y < size - 16:
        x = 16
        h = int(rng.integers(6, 10))
        while x < size - 24:
            w = int(rng.integers(12, 56))
            shade = int(rng.integers(40, 130))
            px[y : y + h, x : min(x + w, size - 16), :3] = shade
            x += w + 8
        y += h + 10
    return ImageBuffer(px)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=512)
    ap.add_argument("--pitch", type=int, default=16)
    ap.add_argument("--out-dir", default="demo")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    offset = args.pitch // 2
    save_image(checkerboard(args.size, args.pitch, offset), out / "checker.png")
    save_image(gridlines(args.size, args.pitch), out / "grid.png")
    save_image(blocks(args.size), out / "blocks.png")
    print(f"wrote {out}/checker.png, {out}/grid.png, {out}/blocks.png")


if __name__ == "__main__":
    main()
