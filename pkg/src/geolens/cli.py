"""Command-line driver: image in, lens config in, magnified image out.

Exit codes: 0 ok, 2 config error, 3 I/O error, 4 solver failure.
"""

from __future__ import annotations

import argparse
import sys
import time

from .errors import (
    AssemblyError,
    EmptyRoiError,
    GeolensError,
    ImageIOError,
    InvalidArgumentError,
    StageError,
)
from .lens import Circle, LensSpec, MetricParams
from .pipeline import _BASELINE_NAMES, _BOUNDARY_NAMES, PipelineConfig, load_config, run_pipeline

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_SOLVER = 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="geolens",
        description="Magnify regions of an image with a geometric, "
        "distortion-minimizing lens.",
    )
    p.add_argument("--input", help="input image (png or ppm)")
    p.add_argument("--output", help="output image path")
    p.add_argument("--config", help="declarative config file (ini sections + lens blocks)")
    p.add_argument("--mesh", nargs=2, type=int, metavar=("R", "C"), help="mesh rows and cols (default 100 100)")
    p.add_argument("--alpha", type=float, help="metric blending parameter in [0, 1] (default 0)")
    p.add_argument("--epsilon", type=float, help="relative energy-change stop threshold (default 0.001)")
    p.add_argument("--profile", choices=["gaussian", "sphere"], help="lens height profile")
    p.add_argument("--boundary", choices=["fixed", "free"], help="boundary handling (default fixed)")
    p.add_argument("--emit-heatmap", action="store_true", help="also write <output>.heatmap.png")
    p.add_argument("--emit-energy-csv", action="store_true", help="also write <output>.energy.csv")
    p.add_argument("--emit-mesh-dump", action="store_true", help="also write <output>.mesh.txt")
    p.add_argument("--baseline", choices=["fisheye", "bifocal", "zoomin"], help="run a radial baseline instead of the geometric lens")
    p.add_argument(
        "--circle",
        nargs=4,
        type=float,
        metavar=("CX", "CY", "R", "H0"),
        help="define a circular lens without a config file",
    )
    return p


def _apply_flags(cfg: PipelineConfig, args) -> PipelineConfig:
    if args.input:
        cfg.input_path = args.input
    if args.output:
        cfg.output_path = args.output
    if args.mesh:
        cfg.rows, cfg.cols = args.mesh
    if args.alpha is not None:
        cfg.alpha = args.alpha
    if args.epsilon is not None:
        cfg.epsilon = args.epsilon
    if args.boundary:
        cfg.boundary_mode = _BOUNDARY_NAMES[args.boundary]
    if args.emit_heatmap:
        cfg.emit_heatmap = True
    if args.emit_energy_csv:
        cfg.emit_energy_csv = True
    if args.emit_mesh_dump:
        cfg.emit_mesh_dump = True
    if args.baseline:
        cfg.baseline = _BASELINE_NAMES[args.baseline]
    if args.circle:
        cx, cy, r, h0 = args.circle
        cfg.lenses.append(
            LensSpec(
                shape=Circle(center=(cx, cy), radius=r),
                profile=args.profile or "gaussian",
                h0=h0,
                metric=MetricParams(alpha=cfg.alpha or 0.0),
            )
        )
    elif args.profile:
        cfg.lenses = [
            LensSpec(
                shape=lens.shape,
                profile=args.profile,
                h0=lens.h0,
                metric=lens.metric,
                height_mode=lens.height_mode,
            )
            for lens in cfg.lenses
        ]
    return cfg


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, StageError):
        return _exit_code(exc.cause) if isinstance(exc.cause, GeolensError) else EXIT_SOLVER
    if isinstance(exc, ImageIOError):
        return EXIT_IO
    if isinstance(exc, (InvalidArgumentError, EmptyRoiError)):
        return EXIT_CONFIG
    if isinstance(exc, AssemblyError):
        return EXIT_SOLVER
    return EXIT_SOLVER


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config) if args.config else PipelineConfig()
        cfg = _apply_flags(cfg, args)
        result, written = run_pipeline(cfg)
    except GeolensError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    wall = time.perf_counter() - t0

    for name, secs in result.stage_seconds.items():
        print(f"stage {name:<12s} {secs:8.3f} s")
    print(f"stages total {sum(result.stage_seconds.values()):8.3f} s (wall {wall:.3f} s)")
    rep = result.report
    if rep.energy_trace:
        print(
            f"solve: {rep.iterations} iteration(s), converged={rep.converged}, "
            f"final energy {rep.final_energy:.6g}, "
            f"flips {len(rep.flipped_triangles)}"
        )
        per_iter = sum(rep.iteration_seconds) / max(len(rep.iteration_seconds), 1)
        print(
            f"timing: factorization {result.factor_seconds:.3f} s, "
            f"{per_iter:.3f} s/iteration"
        )
    dist = result.distortion
    print(f"distortion: total {dist.total:.6g}, max {dist.max:.6g}, mean {dist.mean:.6g}")
    for p in written:
        print(f"wrote {p}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
