"""One-shot pipeline: image + lens config in, magnified image + reports out.

`run_lens_job` is the in-memory engine shared by the CLI and the HTTP
service (both therefore produce bit-identical artifacts for identical
parameters); `run_pipeline` adds file I/O around it.
"""

from __future__ import annotations

import configparser
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import RadialLens, warp_vertices
from .distortion import DistortionReport, measure_baseline_distortion, measure_distortion
from .errors import GeolensError, ImageIOError, InvalidArgumentError, StageError
from .flatten import (
    SolveReport,
    assemble_and_factor,
    edge_weights,
    energy_trace_csv,
    flatten,
    gauge_fixed_sets,
    standardize_triangles,
    system_cache_key,
)
from .lens import Circle, LensSpec, MetricParams, Polygon, load_polygon, mark_roi
from .lift import adaptive_refine, lift_mesh
from .mesh import OUTER_BOUNDARY, TriMesh, build_grid_mesh, dump_mesh
from .raster import ImageBuffer, load_image, rasterize, save_image
from .texture import HarmonicSolveParams, solve_uv


@dataclass
class PipelineConfig:
    input_path: str | None = None
    output_path: str | None = None
    rows: int = 100
    cols: int = 100
    lenses: list = field(default_factory=list)
    alpha: float | None = None  # None falls back to the first lens's metric
    epsilon: float = 1e-3
    max_iterations: int = 50
    boundary_mode: str = "fixed_rectangle"
    stretch_threshold: float = 4.0
    refine: bool = True
    uv_params: HarmonicSolveParams = field(default_factory=HarmonicSolveParams)
    emit_heatmap: bool = False
    emit_energy_csv: bool = False
    emit_mesh_dump: bool = False
    baseline: str | None = None
    baseline_magnification: float = 2.0

    def validate(self) -> None:
        if not self.lenses:
            raise InvalidArgumentError("configuration defines no lens")
        if self.rows < 2 or self.cols < 2:
            raise InvalidArgumentError("mesh resolution must be at least 2x2")
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise InvalidArgumentError(f"alpha must be in [0, 1], got {self.alpha}")
        if not self.epsilon > 0:
            raise InvalidArgumentError("epsilon must be > 0")
        if self.boundary_mode not in ("fixed_rectangle", "free"):
            raise InvalidArgumentError(f"unknown boundary mode {self.boundary_mode!r}")
        if self.baseline is not None:
            if self.baseline not in ("fisheye", "bifocal", "zoom_in"):
                raise InvalidArgumentError(f"unknown baseline {self.baseline!r}")
            if not isinstance(self.lenses[0].shape, Circle):
                raise InvalidArgumentError("baselines need a circle lens footprint")

    def solve_alpha(self) -> float:
        if self.alpha is not None:
            return self.alpha
        return self.lenses[0].metric.alpha


@dataclass
class JobResult:
    image: ImageBuffer
    mesh_out: TriMesh
    report: SolveReport
    distortion: DistortionReport
    heatmap: ImageBuffer | None
    stage_seconds: dict
    factor_from_cache: bool = False

    @property
    def factor_seconds(self) -> float:
        return self.stage_seconds.get("factorize", 0.0)


class _StageTimer:
    def __init__(self):
        self.seconds = {}

    def run(self, name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        try:
            out = fn(*args, **kwargs)
        except GeolensError:
            raise
        except Exception as exc:  # noqa: BLE001 - stage boundary
            raise StageError(name, exc) from exc
        self.seconds[name] = self.seconds.get(name, 0.0) + (time.perf_counter() - t0)
        return out


def _fixed_sets(mesh3d: TriMesh, boundary_mode: str):
    if boundary_mode == "fixed_rectangle":
        fixed = np.flatnonzero(mesh3d.boundary_flags == OUTER_BOUNDARY)
        return fixed, fixed
    return gauge_fixed_sets(mesh3d)


def run_lens_job(
    image: ImageBuffer, config: PipelineConfig, factor_cache: dict | None = None
) -> JobResult:
    """Run the geometric lens (or a baseline warp) on an in-memory image.

    `factor_cache` maps system cache keys to PrefactoredSystem instances;
    on a hit the factorize stage reports zero seconds.
    """
    config.validate()
    timer = _StageTimer()
    dims = (image.width, image.height)

    mesh = timer.run("mesh", build_grid_mesh, image.width, image.height, config.rows, config.cols)

    if config.baseline is not None:
        shape = config.lenses[0].shape
        lens = RadialLens(
            kind=config.baseline,
            center=shape.center,
            radius=shape.radius,
            magnification=config.baseline_magnification,
        )
        warped = timer.run("warp", warp_vertices, mesh, lens)
        dist = timer.run(
            "distortion",
            measure_baseline_distortion,
            mesh,
            warped,
            heatmap_dims=dims if config.emit_heatmap else None,
        )
        out_mesh = mesh.copy()
        out_mesh.positions = np.column_stack([warped, np.zeros(len(warped))])
        out = timer.run("rasterize", rasterize, out_mesh, image, dims, True)
        return JobResult(
            image=out,
            mesh_out=out_mesh,
            report=SolveReport(converged=True),
            distortion=dist,
            heatmap=dist.heatmap,
            stage_seconds=timer.seconds,
        )

    marked = timer.run("mark_roi", mark_roi, mesh, config.lenses)
    lifted = timer.run("lift", lift_mesh, marked, config.lenses)
    if config.refine:
        lifted = timer.run(
            "refine", adaptive_refine, lifted, config.lenses, config.stretch_threshold
        )
    textured = timer.run("texture", solve_uv, lifted, config.uv_params)

    def factorize():
        standards = standardize_triangles(textured.positions[textured.triangles])
        weights = edge_weights(textured, standards)
        fixed = _fixed_sets(textured, config.boundary_mode)
        key = system_cache_key(textured.triangles, weights, fixed)
        if factor_cache is not None and key in factor_cache:
            return factor_cache[key], standards, weights, True
        system = assemble_and_factor(textured, weights, fixed)
        if factor_cache is not None:
            factor_cache[key] = system
        return system, standards, weights, False

    system, standards, weights, cached = timer.run("factorize", factorize)
    if cached:
        timer.seconds["factorize"] = 0.0

    params = MetricParams(alpha=config.solve_alpha())
    flat_mesh, report = timer.run(
        "flatten",
        flatten,
        textured,
        params,
        config.epsilon,
        config.max_iterations,
        config.boundary_mode,
        system,
        standards,
        weights,
    )
    dist = timer.run(
        "distortion",
        measure_distortion,
        flat_mesh,
        report.standards,
        report.metrics,
        report.weights,
        dims if config.emit_heatmap else None,
    )
    # free-boundary output may poke past the frame corners; clip-render it
    out = timer.run(
        "rasterize", rasterize, flat_mesh, image, dims, config.boundary_mode == "free"
    )
    return JobResult(
        image=out,
        mesh_out=flat_mesh,
        report=report,
        distortion=dist,
        heatmap=dist.heatmap,
        stage_seconds=timer.seconds,
        factor_from_cache=cached,
    )


def run_pipeline(config: PipelineConfig) -> tuple:
    """File-to-file pipeline; returns (JobResult, written paths).

    Any stage failure removes artifacts written so far and re-raises.
    """
    config.validate()
    if not config.input_path or not config.output_path:
        raise InvalidArgumentError("input and output paths are required")

    timer = _StageTimer()
    image = timer.run("load", load_image, config.input_path)

    result = run_lens_job(image, config)
    result.stage_seconds.update(timer.seconds)

    out_path = Path(config.output_path)
    written = []
    t0 = time.perf_counter()
    try:
        save_image(result.image, out_path)
        written.append(out_path)
        if config.emit_heatmap and result.heatmap is not None:
            p = out_path.with_suffix(".heatmap.png")
            save_image(result.heatmap, p)
            written.append(p)
        if config.emit_energy_csv:
            p = out_path.with_suffix(".energy.csv")
            p.write_text(energy_trace_csv(result.report))
            written.append(p)
        if config.emit_mesh_dump:
            p = out_path.with_suffix(".mesh.txt")
            dump_mesh(result.mesh_out, p)
            written.append(p)
    except Exception:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    result.stage_seconds["save"] = time.perf_counter() - t0
    return result, written


# ---------------------------------------------------------------------------
# declarative config file (ini-style key = value sections + lens blocks)


def _parse_lens(section) -> LensSpec:
    shape_kind = section.get("shape", "circle").strip().lower()
    if shape_kind == "circle":
        center = [float(x) for x in section.get("center", "").split()]
        if len(center) != 2:
            raise InvalidArgumentError("circle lens needs 'center = X Y'")
        shape = Circle(center=(center[0], center[1]), radius=float(section.get("radius", "0")))
    elif shape_kind == "polygon":
        if "points_file" in section:
            shape = load_polygon(section["points_file"])
        else:
            vals = [float(x) for x in section.get("points", "").split()]
            if len(vals) < 6 or len(vals) % 2:
                raise InvalidArgumentError("polygon lens needs 'points = x1 y1 x2 y2 ...'")
            shape = Polygon(np.asarray(vals).reshape(-1, 2))
    else:
        raise InvalidArgumentError(f"unknown lens shape {shape_kind!r}")
    metric = MetricParams(alpha=float(section.get("alpha", "0")))
    return LensSpec(
        shape=shape,
        profile=section.get("profile", "gaussian").strip().lower(),
        h0=float(section.get("h0", "0")),
        metric=metric,
        height_mode=section.get("height_mode", "normalized").strip().lower(),
    )


_BOUNDARY_NAMES = {"fixed": "fixed_rectangle", "fixed_rectangle": "fixed_rectangle", "free": "free"}
_BASELINE_NAMES = {"fisheye": "fisheye", "bifocal": "bifocal", "zoomin": "zoom_in", "zoom_in": "zoom_in"}


def load_config(path) -> PipelineConfig:
    """Parse the declarative pipeline config file."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ImageIOError(path, f"cannot read config ({exc})") from exc
    except configparser.Error as exc:
        raise InvalidArgumentError(f"bad config file {path}: {exc}") from exc

    try:
        cfg = PipelineConfig()
        if parser.has_section("image"):
            cfg.input_path = parser["image"].get("input", cfg.input_path)
            cfg.output_path = parser["image"].get("output", cfg.output_path)
        if parser.has_section("mesh"):
            cfg.rows = parser["mesh"].getint("rows", cfg.rows)
            cfg.cols = parser["mesh"].getint("cols", cfg.cols)
        if parser.has_section("solver"):
            s = parser["solver"]
            if "alpha" in s:
                cfg.alpha = s.getfloat("alpha")
            cfg.epsilon = s.getfloat("epsilon", cfg.epsilon)
            cfg.max_iterations = s.getint("max_iterations", cfg.max_iterations)
            boundary = s.get("boundary", "fixed").strip().lower()
            if boundary not in _BOUNDARY_NAMES:
                raise InvalidArgumentError(f"unknown boundary {boundary!r}")
            cfg.boundary_mode = _BOUNDARY_NAMES[boundary]
            cfg.stretch_threshold = s.getfloat("stretch_threshold", cfg.stretch_threshold)
            cfg.refine = s.getboolean("refine", cfg.refine)
        if parser.has_section("emit"):
            e = parser["emit"]
            cfg.emit_heatmap = e.getboolean("heatmap", cfg.emit_heatmap)
            cfg.emit_energy_csv = e.getboolean("energy_csv", cfg.emit_energy_csv)
            cfg.emit_mesh_dump = e.getboolean("mesh_dump", cfg.emit_mesh_dump)
        if parser.has_section("baseline"):
            b = parser["baseline"]
            kind = b.get("kind", "").strip().lower()
            if kind:
                if kind not in _BASELINE_NAMES:
                    raise InvalidArgumentError(f"unknown baseline {kind!r}")
                cfg.baseline = _BASELINE_NAMES[kind]
            cfg.baseline_magnification = b.getfloat("magnification", cfg.baseline_magnification)
        for name in parser.sections():
            if name == "lens" or name.startswith("lens."):
                cfg.lenses.append(_parse_lens(parser[name]))
    except (ValueError, configparser.Error) as exc:
        if isinstance(exc, GeolensError):
            raise
        raise InvalidArgumentError(f"bad config file {path}: {exc}") from exc
    return cfg
