"""Lifting the marked mesh into 3D: height profiles and adaptive refinement."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .lens import LensSpec
from .mesh import TriMesh, areas_3d, signed_areas_2d, subdivide_triangles

_INV_E = math.exp(-1.0)


@dataclass(frozen=True)
class HeightProfile:
    """Radial height model z(d) over one lens, 0 outside d_max.

    kind "gaussian" with normalization "normalized" (default) peaks at h0
    in the center and reaches 0 continuously at d_max. The "raw" mode
    applies exp(-(1 - d/d_max)^2) unshifted, which peaks at the rim and
    leaves a floor of h0/e at the center; it exists for comparison only.
    kind "sphere" is a hemisphere scaled so the apex height is h0.
    """

    kind: str = "gaussian"
    h0: float = 0.0
    normalization: str = "normalized"

    def __post_init__(self):
        if self.kind not in ("gaussian", "sphere"):
            raise InvalidArgumentError(f"unknown profile kind {self.kind!r}")
        if self.normalization not in ("normalized", "raw"):
            raise InvalidArgumentError(f"unknown normalization {self.normalization!r}")
        if self.h0 < 0:
            raise InvalidArgumentError(f"h0 must be >= 0, got {self.h0}")


def profile_for(lens: LensSpec) -> HeightProfile:
    return HeightProfile(kind=lens.profile, h0=lens.h0, normalization=lens.height_mode)


def evaluate_height(profile: HeightProfile, d, d_max: float):
    """Height(s) for distance(s) `d` from the lens anchor; scalar in, scalar
    out, array in, array out."""
    if not d_max > 0:
        raise InvalidArgumentError(f"d_max must be > 0, got {d_max}")
    d_arr = np.asarray(d, dtype=float)
    if (d_arr < 0).any():
        raise InvalidArgumentError("distances must be >= 0")
    t = d_arr / d_max
    if profile.kind == "sphere":
        z = (profile.h0 / d_max) * np.sqrt(np.maximum(0.0, d_max**2 - d_arr**2))
    elif profile.normalization == "normalized":
        z = profile.h0 * (np.exp(-(t**2)) - _INV_E) / (1.0 - _INV_E)
        # exact zero at and beyond the rim, whatever exp's last ulp does
        z = np.where(t < 1.0, z, 0.0)
    else:  # raw
        z = profile.h0 * np.exp(-((1.0 - t) ** 2))
        z = np.where(t <= 1.0, z, 0.0)
    z = np.maximum(z, 0.0)
    return float(z) if np.isscalar(d) else z


def lift_mesh(mesh: TriMesh, lenses) -> TriMesh:
    """3D mesh with z assigned from each lens's profile over its ROI.

    x and y are untouched everywhere; vertices outside every ROI keep
    z = 0, so the context region is bit-identical to the input.
    """
    if isinstance(lenses, LensSpec):
        lenses = [lenses]
    lenses = list(lenses)
    if len(mesh.lens_dmax) != len(lenses):
        raise InvalidArgumentError(
            "mesh was not marked for this lens list (run mark_roi first)"
        )
    out = mesh.copy()
    z = np.zeros(mesh.n_vertices)
    for k, lens in enumerate(lenses):
        sel = mesh.lens_id == k
        if not sel.any():
            continue
        z[sel] = evaluate_height(profile_for(lens), mesh.roi_distance[sel], mesh.lens_dmax[k])
    out.positions[:, 2] = z
    return out


def stretch_ratios(mesh3d: TriMesh) -> np.ndarray:
    """Per-triangle 3D area over input-plane area."""
    a2 = np.abs(signed_areas_2d(mesh3d.positions, mesh3d.triangles))
    a3 = areas_3d(mesh3d.positions, mesh3d.triangles)
    return a3 / np.maximum(a2, 1e-300)


def min_angles_3d(mesh3d: TriMesh) -> np.ndarray:
    """Smallest interior angle of each triangle, in radians, measured in 3D."""
    p = mesh3d.positions[mesh3d.triangles]
    angles = np.empty((len(p), 3))
    for i in range(3):
        u = p[:, (i + 1) % 3] - p[:, i]
        v = p[:, (i + 2) % 3] - p[:, i]
        nu = np.linalg.norm(u, axis=1)
        nv = np.linalg.norm(v, axis=1)
        cosang = np.einsum("ij,ij->i", u, v) / np.maximum(nu * nv, 1e-300)
        angles[:, i] = np.arccos(np.clip(cosang, -1.0, 1.0))
    return angles.min(axis=1)


def adaptive_refine(
    mesh3d: TriMesh,
    lenses,
    stretch_threshold: float = 4.0,
    min_angle_deg: float = 10.0,
) -> TriMesh:
    """One conforming refinement pass over badly stretched or sheared
    triangles of a lifted mesh.

    Triangles whose 3D/2D area ratio exceeds the threshold or whose
    smallest 3D angle drops below `min_angle_deg` are split 1-to-4. New
    vertices interpolate position/uv/distance, but their heights are
    re-evaluated from the owning lens profile rather than interpolated
    when both edge endpoints belong to the same lens.
    """
    if not stretch_threshold > 1.0:
        raise InvalidArgumentError("stretch_threshold must be > 1")
    if isinstance(lenses, LensSpec):
        lenses = [lenses]
    lenses = list(lenses)

    ratios = stretch_ratios(mesh3d)
    small = min_angles_3d(mesh3d) < math.radians(min_angle_deg)
    selected = np.flatnonzero((ratios > stretch_threshold) | small)
    if len(selected) == 0:
        return mesh3d.copy()

    n_old = mesh3d.n_vertices
    out = subdivide_triangles(mesh3d, selected)
    for k, lens in enumerate(lenses):
        sel = (out.lens_id == k) & (np.arange(out.n_vertices) >= n_old)
        if not sel.any():
            continue
        out.positions[sel, 2] = evaluate_height(
            profile_for(lens), out.roi_distance[sel], out.lens_dmax[k]
        )
    return out
