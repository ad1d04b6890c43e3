#!/usr/bin/env python3
"""Timing report: prefactorization and per-iteration solve cost by mesh size."""

import argparse

import numpy as np

from geolens import Circle, LensSpec, build_grid_mesh, flatten, lift_mesh, mark_roi


def bench(rows, image_size):
    lens = LensSpec(
        shape=Circle(center=(image_size / 2, image_size / 2), radius=0.2 * image_size),
        h0=0.2 * image_size,
    )
    mesh = build_grid_mesh(image_size, image_size, rows, rows)
    lifted = lift_mesh(mark_roi(mesh, lens), lens)
    _, rep = flatten(lifted, max_iter=8, epsilon=0.0)
    return (
        mesh.n_vertices,
        rep.assembly_seconds + rep.factor_seconds,
        float(np.mean(rep.iteration_seconds)),
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 141, 200])
    args = ap.parse_args()

    print(f"{'vertices':>10s} {'prefactor ms':>14s} {'per-iter ms':>13s}")
    for rows in args.sizes:
        n, factor, per_iter = bench(rows, 512.0 if rows <= 141 else 1024.0)
        print(f"{n:>10d} {factor * 1e3:>14.1f} {per_iter * 1e3:>13.1f}")


if __name__ == "__main__":
    main()
