"""Per-triangle shape-distortion measurement and heatmap rendering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .flatten import (
    blended_metrics,
    edge_weights,
    residual_energies,
    standardize_triangles,
    triangle_jacobians,
)
from .mesh import TriMesh
from .raster import ImageBuffer, rasterize_flat

# blue -> cyan -> yellow -> red
_RAMP = np.array(
    [
        (0, 0, 255),
        (0, 255, 255),
        (255, 255, 0),
        (255, 0, 0),
    ],
    dtype=float,
)


def heat_colors(values: np.ndarray, scale_max: float | None = None) -> np.ndarray:
    """RGBA colors for nonnegative values, blue at 0 up to red at the max
    (or at `scale_max` when a fixed cross-image scale is wanted)."""
    v = np.asarray(values, dtype=float)
    top = float(v.max()) if scale_max is None else float(scale_max)
    # a numerically-zero field renders solid blue instead of noise
    t = np.clip(v / top, 0.0, 1.0) if top > 1e-20 else np.zeros_like(v)
    pos = t * (len(_RAMP) - 1)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, len(_RAMP) - 1)
    frac = (pos - lo)[:, None]
    rgb = _RAMP[lo] * (1 - frac) + _RAMP[hi] * frac
    out = np.empty((len(v), 4), dtype=np.uint8)
    out[:, :3] = np.clip(np.rint(rgb), 0, 255)
    out[:, 3] = 255
    return out


@dataclass
class DistortionReport:
    per_triangle: np.ndarray
    max: float
    mean: float
    total: float
    heatmap: ImageBuffer | None = None


def distortion_csv(report: DistortionReport) -> str:
    lines = ["triangle_index,E_i"]
    lines += [f"{i},{e!r}" for i, e in enumerate(report.per_triangle.tolist())]
    return "\n".join(lines) + "\n"


def measure_distortion(
    result: TriMesh,
    standards: np.ndarray,
    metrics: np.ndarray,
    weights: np.ndarray,
    heatmap_dims=None,
    scale_max: float | None = None,
) -> DistortionReport:
    """Residual energy of every result triangle against its metric-mapped
    standard shape; the sum equals the solver's final fit energy when fed
    the final-iteration metrics and weights.
    """
    m = result.n_triangles
    if not (len(standards) == len(metrics) == len(weights) == m):
        raise InvalidArgumentError("standards/metrics/weights must match the mesh")
    per = residual_energies(
        result.positions[:, :2], result.triangles, weights, metrics, standards
    )
    heatmap = None
    if heatmap_dims is not None:
        heatmap = rasterize_flat(result, heat_colors(per, scale_max), heatmap_dims)
    return DistortionReport(
        per_triangle=per,
        max=float(per.max()) if m else 0.0,
        mean=float(per.mean()) if m else 0.0,
        total=float(per.sum()),
        heatmap=heatmap,
    )


def measure_baseline_distortion(
    input_mesh: TriMesh,
    warped_positions: np.ndarray,
    alpha: float = 0.0,
    heatmap_dims=None,
    scale_max: float | None = None,
) -> DistortionReport:
    """Distortion of an arbitrary per-vertex warp, on the same scale as
    `measure_distortion`.

    The input triangles serve as the reference shapes and each triangle's
    metric is the blend of its own warp map at `alpha` (0 keeps only the
    rotation, the rigid reference).
    """
    warped = np.asarray(warped_positions, dtype=float)
    if warped.shape != (input_mesh.n_vertices, 2):
        raise InvalidArgumentError("warped positions must be (n_vertices, 2)")
    tri = input_mesh.triangles
    standards = standardize_triangles(input_mesh.positions[tri])
    weights = edge_weights(input_mesh, standards)
    jac = triangle_jacobians(warped[tri], standards)
    metrics, _, _ = blended_metrics(jac, alpha)
    per = residual_energies(warped, tri, weights, metrics, standards)
    heatmap = None
    if heatmap_dims is not None:
        warped_mesh = input_mesh.copy()
        warped_mesh.positions = np.column_stack([warped, np.zeros(len(warped))])
        heatmap = rasterize_flat(warped_mesh, heat_colors(per, scale_max), heatmap_dims)
    return DistortionReport(
        per_triangle=per,
        max=float(per.max()),
        mean=float(per.mean()),
        total=float(per.sum()),
        heatmap=heatmap,
    )
