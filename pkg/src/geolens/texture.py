"""Harmonic texture transfer onto the lifted mesh via mean-value coordinates.

The uv of every free vertex is driven to the weighted average of its
neighbors' uv, with mean-value weights measured on the 3D one-ring. Two
Dirichlet modes exist: "outside_rois" (default) pins everything outside
every lens so the transfer is strictly local, "outer_only" pins just the
image rectangle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import spsolve

from .errors import ConvergenceWarning, FlaggedWeightWarning, InvalidArgumentError
from .mesh import NO_LENS, OUTER_BOUNDARY, TriMesh, is_ring_closed, one_ring

_NEAR_PI = math.pi - 1e-9


@dataclass(frozen=True)
class HarmonicSolveParams:
    max_iterations: int = 2000
    tolerance: float = 1e-7  # max per-vertex uv displacement per sweep

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidArgumentError("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise InvalidArgumentError("tolerance must be > 0")


def mean_value_weights(mesh3d: TriMesh, v: int):
    """Un-normalized mean-value weights of vertex `v` against its ordered
    one-ring, measured in 3D.

    Returns (neighbors, weights). For each neighbor j the weight is
    (tan(a_prev/2) + tan(a_next/2)) / |p_j - p_v| with a_* the angles
    between consecutive neighbor directions. Angles at (or numerically
    past) pi make the tangent blow up; those edges fall back to the plain
    inverse-distance weight 1/|p_j - p_v| and a FlaggedWeightWarning is
    emitted.
    """
    if not is_ring_closed(mesh3d, v):
        raise InvalidArgumentError(f"vertex {v} has no full cyclic one-ring")
    ring = one_ring(mesh3d, v)
    p = mesh3d.positions
    dirs = p[ring] - p[v]
    norms = np.linalg.norm(dirs, axis=1)
    if (norms < 1e-30).any():
        raise InvalidArgumentError(f"degenerate edge at vertex {v}")

    m = len(ring)
    unit = dirs / norms[:, None]
    nxt = np.roll(unit, -1, axis=0)
    cosang = np.clip(np.einsum("ij,ij->i", unit, nxt), -1.0, 1.0)
    angles = np.arccos(cosang)  # angle between neighbor k and k+1

    bad = angles >= _NEAR_PI
    half_tan = np.tan(np.minimum(angles, _NEAR_PI) / 2.0)
    prev = np.roll(np.arange(m), 1)
    weights = (half_tan[prev] + half_tan) / norms
    flagged = bad[prev] | bad
    if flagged.any():
        warnings.warn(
            f"one-ring of vertex {v} not star-shaped; "
            f"{int(flagged.sum())} weight(s) fell back to inverse distance",
            FlaggedWeightWarning,
        )
        weights = np.where(flagged, 1.0 / norms, weights)
    return ring, weights


def _free_mask(mesh: TriMesh, dirichlet: str) -> np.ndarray:
    if dirichlet == "outside_rois":
        return mesh.lens_id != NO_LENS
    if dirichlet == "outer_only":
        return mesh.boundary_flags != OUTER_BOUNDARY
    raise InvalidArgumentError(f"unknown dirichlet mode {dirichlet!r}")


def _stencils(mesh3d: TriMesh, free_idx):
    out = []
    for v in free_idx:
        ring, w = mean_value_weights(mesh3d, int(v))
        out.append((int(v), ring, w / w.sum()))
    return out


def solve_uv(
    mesh3d: TriMesh,
    params: HarmonicSolveParams = HarmonicSolveParams(),
    dirichlet: str = "outside_rois",
) -> TriMesh:
    """Gauss-Seidel relaxation of the uv field on the lifted mesh.

    Sweeps run in vertex-index order until the largest per-vertex uv move
    of a sweep drops below the tolerance or the iteration budget runs out
    (the result is still returned then, with a ConvergenceWarning carrying
    the residual). Dirichlet vertices are never touched.
    """
    out = mesh3d.copy()
    free_idx = np.flatnonzero(_free_mask(mesh3d, dirichlet))
    if len(free_idx) == 0:
        return out

    # flat python structures: the sweep is the hot loop
    stencils = [
        (v, list(zip((int(j) for j in ring), w.tolist())))
        for v, ring, w in _stencils(mesh3d, free_idx)
    ]
    u = out.uv[:, 0].tolist()
    w2 = out.uv[:, 1].tolist()
    residual = math.inf
    for _ in range(params.max_iterations):
        residual = 0.0
        for v, pairs in stencils:
            su = 0.0
            sv = 0.0
            for j, wj in pairs:
                su += wj * u[j]
                sv += wj * w2[j]
            move = abs(su - u[v]) + abs(sv - w2[v])
            if move > residual:
                residual = move
            u[v] = su
            w2[v] = sv
        if residual < params.tolerance:
            break
    else:
        warnings.warn(
            f"uv solve stopped at {params.max_iterations} sweeps, "
            f"residual {residual:.3e}",
            ConvergenceWarning,
        )
    out.uv[:, 0] = u
    out.uv[:, 1] = w2
    return out


def solve_uv_direct(mesh3d: TriMesh, dirichlet: str = "outside_rois") -> TriMesh:
    """Direct sparse solve of the same mean-value system; the verification
    oracle for `solve_uv`."""
    out = mesh3d.copy()
    free_idx = np.flatnonzero(_free_mask(mesh3d, dirichlet))
    if len(free_idx) == 0:
        return out

    pos_of = {int(v): i for i, v in enumerate(free_idx)}
    nf = len(free_idx)
    rows, cols, vals = [], [], []
    b = np.zeros((nf, 2))
    for row, (v, ring, w) in enumerate(_stencils(mesh3d, free_idx)):
        rows.append(row)
        cols.append(row)
        vals.append(1.0)
        for j, wj in zip(ring, w):
            j = int(j)
            if j in pos_of:
                rows.append(row)
                cols.append(pos_of[j])
                vals.append(-wj)
            else:
                b[row] += wj * out.uv[j]
    a = csr_matrix((vals, (rows, cols)), shape=(nf, nf))
    x = spsolve(a, b)
    out.uv[free_idx] = x.reshape(nf, 2)
    return out
