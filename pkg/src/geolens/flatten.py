"""Flattening the lifted mesh back to 2D with a local/global iteration.

Each triangle of the 3D mesh is laid out isometrically as a 2D "standard
triangle" (its undistorted reference shape). The solver then alternates
two exact phases until the fit energy stalls:

  local  - per triangle, fit a 2x2 metric blending the closest rotation
           with the full affine map of the triangle's current shape;
  global - solve a prefactorized weighted Laplacian for the vertex
           positions minimizing the weighted edge-residual energy
           sum_e w_e |(p_i - p_j) - M_t (s_i - s_j)|^2
           over directed halfedges e = (i, j) of every triangle t with
           standard-layout corners s.

The system matrix depends only on connectivity, standard shapes, and
weights, so its Cholesky-style factorization is computed once and reused
across iterations (and across solves that share it).
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import splu

from .errors import AssemblyError, DegenerateTriangleError, InvalidArgumentError
from .lens import MetricParams
from .mesh import OUTER_BOUNDARY, TriMesh, one_ring

# directed halfedges of a triangle by local vertex index, and the local
# index of the vertex opposite each halfedge
_EDGE_I = np.array([0, 1, 2])
_EDGE_J = np.array([1, 2, 0])
_EDGE_OPP = np.array([2, 0, 1])

_WEIGHT_FLOOR = 1e-6
_DEGENERATE_AREA = 1e-12
_ENERGY_FLOOR = 1e-12


def standardize_triangle(points3: np.ndarray) -> np.ndarray:
    """Isometric 2D layout of one 3D triangle.

    Returns a (3, 2) array with p1 at the origin, p2 on the positive
    x-axis, and p3 in the upper half-plane; all three edge lengths match
    the 3D triangle.
    """
    pts = np.asarray(points3, dtype=float).reshape(3, -1)
    out = standardize_triangles(pts[None, :, :])
    return out[0]


def standardize_triangles(tri_points: np.ndarray) -> np.ndarray:
    """Vectorized standard layout for an (m, 3, k) stack of triangles."""
    p = np.asarray(tri_points, dtype=float)
    l12 = np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
    l13 = np.linalg.norm(p[:, 2] - p[:, 0], axis=1)
    l23 = np.linalg.norm(p[:, 2] - p[:, 1], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        x3 = (l12**2 + l13**2 - l23**2) / (2.0 * l12)
    y3 = np.sqrt(np.maximum(l13**2 - x3**2, 0.0))
    areas = 0.5 * l12 * y3
    if (areas <= _DEGENERATE_AREA).any() or not np.isfinite(x3).all():
        bad = int(np.argmin(areas))
        raise DegenerateTriangleError(f"triangle {bad} has (near-)zero area")
    out = np.zeros((len(p), 3, 2))
    out[:, 1, 0] = l12
    out[:, 2, 0] = x3
    out[:, 2, 1] = y3
    return out


def standard_areas(standards: np.ndarray) -> np.ndarray:
    return 0.5 * standards[:, 1, 0] * standards[:, 2, 1]


def triangle_jacobian(t_cur: np.ndarray, t_std: np.ndarray) -> np.ndarray:
    """2x2 map J with J (s_j - s_1) = (p_j - p_1) for j = 2, 3."""
    j = triangle_jacobians(
        np.asarray(t_cur, dtype=float)[None, :, :],
        np.asarray(t_std, dtype=float)[None, :, :],
    )
    return j[0]


def triangle_jacobians(cur: np.ndarray, std: np.ndarray) -> np.ndarray:
    """Batched exact affine maps from standard to current triangles."""
    ec = np.stack([cur[:, 1] - cur[:, 0], cur[:, 2] - cur[:, 0]], axis=2)
    es = np.stack([std[:, 1] - std[:, 0], std[:, 2] - std[:, 0]], axis=2)
    det = es[:, 0, 0] * es[:, 1, 1] - es[:, 0, 1] * es[:, 1, 0]
    if (np.abs(det) <= 2.0 * _DEGENERATE_AREA).any():
        bad = int(np.argmin(np.abs(det)))
        raise DegenerateTriangleError(f"standard triangle {bad} is degenerate")
    inv = np.empty_like(es)
    inv[:, 0, 0] = es[:, 1, 1]
    inv[:, 0, 1] = -es[:, 0, 1]
    inv[:, 1, 0] = -es[:, 1, 0]
    inv[:, 1, 1] = es[:, 0, 0]
    inv /= det[:, None, None]
    return ec @ inv


def signed_svd_2x2(mats: np.ndarray):
    """Batched SVD with rotation factors: J = U diag(s) Vt, det U = det Vt
    = +1, s[0] >= |s[1]|, and sign(s[1]) = sign(det J)."""
    u, s, vt = np.linalg.svd(mats)
    s = s.copy()
    det_u = u[:, 0, 0] * u[:, 1, 1] - u[:, 0, 1] * u[:, 1, 0]
    flip = det_u < 0
    u[flip, :, 1] *= -1.0
    s[flip, 1] *= -1.0
    det_vt = vt[:, 0, 0] * vt[:, 1, 1] - vt[:, 0, 1] * vt[:, 1, 0]
    flip = det_vt < 0
    vt[flip, 1, :] *= -1.0
    s[flip, 1] *= -1.0
    return u, s, vt


@dataclass(frozen=True)
class MetricMatrix:
    """Per-triangle target transform produced by the local phase."""

    matrix: np.ndarray  # 2x2
    rotation: np.ndarray  # 2x2, the closest rotation to the Jacobian
    singular_values: tuple  # (s1, s2) signed
    blended_values: tuple
    flipped: bool


def blended_metrics(jacobians: np.ndarray, alpha) -> tuple:
    """Batched blend: singular values move toward 1 by factor (1 - alpha).

    Returns (metrics (m,2,2), signed singular values (m,2), flipped mask).
    alpha may be a scalar or a per-triangle array.
    """
    u, s, vt = signed_svd_2x2(jacobians)
    a = np.broadcast_to(np.asarray(alpha, dtype=float), (len(jacobians),))
    blended = a[:, None] * (s - 1.0) + 1.0
    mats = (u * blended[:, None, :]) @ vt
    flipped = s[:, 0] * s[:, 1] <= 0.0
    return mats, s, flipped


def blended_metric(jacobian: np.ndarray, alpha: float) -> MetricMatrix:
    """Single-triangle view of `blended_metrics` with the decomposition
    parts exposed."""
    j = np.asarray(jacobian, dtype=float).reshape(1, 2, 2)
    u, s, vt = signed_svd_2x2(j)
    blended = alpha * (s - 1.0) + 1.0
    mat = (u * blended[:, None, :]) @ vt
    rot = u @ vt
    return MetricMatrix(
        matrix=mat[0],
        rotation=rot[0],
        singular_values=(float(s[0, 0]), float(s[0, 1])),
        blended_values=(float(blended[0, 0]), float(blended[0, 1])),
        flipped=bool(s[0, 0] * s[0, 1] <= 0.0),
    )


def edge_weights(mesh3d: TriMesh, standards: np.ndarray) -> np.ndarray:
    """(m, 3) halfedge weights (1 + h) * A * cot(opposite angle).

    h is the mean vertex height of the triangle, A its standard-layout
    area, and the cotangent comes from the standard triangle, so flat
    regions get the classic cotangent weights. Non-positive cotangents
    (obtuse opposite angles) are clamped to a small positive floor to keep
    the system matrix positive-definite.
    """
    areas = standard_areas(standards)
    h = mesh3d.heights[mesh3d.triangles].mean(axis=1)
    cots = np.empty((len(standards), 3))
    for e in range(3):
        k = _EDGE_OPP[e]
        u = standards[:, _EDGE_I[e]] - standards[:, k]
        v = standards[:, _EDGE_J[e]] - standards[:, k]
        cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
        dot = np.einsum("ij,ij->i", u, v)
        cots[:, e] = dot / np.maximum(np.abs(cross), 1e-300)
    w = (1.0 + h)[:, None] * areas[:, None] * cots
    return np.maximum(w, _WEIGHT_FLOOR)


@dataclass
class PrefactoredSystem:
    """Weighted edge Laplacian over free vertices with cached factors.

    The matrix depends only on connectivity, standard triangles, and
    weights; per-coordinate Dirichlet sets allow the free-boundary gauge
    (x and y may pin different vertices). When both coordinates share the
    fixed set they share one factorization.
    """

    n: int
    triangles: np.ndarray
    weights: np.ndarray
    laplacian: object  # full csr, n x n
    fixed: tuple  # (fixed_x, fixed_y) index arrays
    free: tuple  # (free_x, free_y)
    factors: tuple  # splu objects, possibly identical
    couplings: tuple  # L[free, fixed] csr per coordinate
    assembly_seconds: float
    factor_seconds: float

    def cache_key(self) -> str:
        return system_cache_key(self.triangles, self.weights, self.fixed)


def system_cache_key(triangles: np.ndarray, weights: np.ndarray, fixed_sets) -> str:
    """Identity of a factorization: connectivity + weights + pinned sets.

    Anything that changes the lift (and with it the weights) or the
    Dirichlet sets produces a new key; the blending parameter does not
    enter, so alpha-only changes can reuse a cached system.
    """
    hsh = hashlib.sha256()
    hsh.update(np.ascontiguousarray(triangles).tobytes())
    hsh.update(np.ascontiguousarray(np.round(weights, 12)).tobytes())
    hsh.update(np.ascontiguousarray(fixed_sets[0]).tobytes())
    hsh.update(np.ascontiguousarray(fixed_sets[1]).tobytes())
    return hsh.hexdigest()


def assemble_and_factor(mesh: TriMesh, weights: np.ndarray, fixed) -> PrefactoredSystem:
    """Build the weighted edge Laplacian and cache its factorization.

    `fixed` is a vertex index array pinning both coordinates, or a pair of
    arrays (fixed_x, fixed_y). At least one vertex per coordinate must be
    pinned; the system is translation-invariant otherwise.
    """
    t0 = time.perf_counter()
    if isinstance(fixed, tuple) and len(fixed) == 2 and not np.isscalar(fixed[0]):
        fixed_x = np.asarray(fixed[0], dtype=np.int64)
        fixed_y = np.asarray(fixed[1], dtype=np.int64)
    else:
        fixed_x = fixed_y = np.asarray(fixed, dtype=np.int64)
    if len(fixed_x) == 0 or len(fixed_y) == 0:
        raise InvalidArgumentError("fixed set must pin at least one vertex per coordinate")

    n = mesh.n_vertices
    tri = mesh.triangles
    starts = tri[:, _EDGE_I].ravel()
    ends = tri[:, _EDGE_J].ravel()
    w = weights.ravel()
    rows = np.concatenate([starts, ends, starts, ends])
    cols = np.concatenate([starts, ends, ends, starts])
    vals = np.concatenate([w, w, -w, -w])
    lap = coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    t1 = time.perf_counter()

    factors = {}
    free_sets, facs, couplings = [], [], []
    for fx in (fixed_x, fixed_y):
        key = fx.tobytes()
        mask = np.ones(n, dtype=bool)
        mask[fx] = False
        free = np.flatnonzero(mask)
        if key not in factors:
            sub = lap[free][:, free].tocsc()
            try:
                factors[key] = splu(sub)
            except RuntimeError as exc:
                raise AssemblyError(f"system factorization failed: {exc}") from exc
        free_sets.append(free)
        facs.append(factors[key])
        couplings.append(lap[free][:, fx].tocsr())
    t2 = time.perf_counter()

    return PrefactoredSystem(
        n=n,
        triangles=tri,
        weights=weights,
        laplacian=lap,
        fixed=(fixed_x, fixed_y),
        free=tuple(free_sets),
        factors=tuple(facs),
        couplings=tuple(couplings),
        assembly_seconds=t1 - t0,
        factor_seconds=t2 - t1,
    )


def _metric_edge_targets(metrics: np.ndarray, standards: np.ndarray) -> np.ndarray:
    """(m, 3, 2) target vectors M_t (s_i - s_j) per directed halfedge."""
    d = standards[:, _EDGE_I] - standards[:, _EDGE_J]
    return np.einsum("tab,teb->tea", metrics, d)


def fit_metrics(
    positions2d: np.ndarray,
    triangles: np.ndarray,
    weights: np.ndarray,
    standards: np.ndarray,
    alpha,
) -> np.ndarray:
    """Local-phase metrics: blend between the best-fit rotation and the
    full affine map of each triangle.

    The rotation factor is the polar part of the weight-accumulated edge
    covariance sum_e w_e e^k (e^std)^T, not of the affine map: with
    clamped weights the two differ, and only the covariance polar factor
    minimizes the solver's actual energy over rotations. Using anything
    else can make the energy trace increase.
    """
    cur = positions2d[triangles[:, _EDGE_I]] - positions2d[triangles[:, _EDGE_J]]
    std = standards[:, _EDGE_I] - standards[:, _EDGE_J]
    cov = np.einsum("te,tea,teb->tab", weights, cur, std)
    u, _, vt = signed_svd_2x2(cov)
    rot = u @ vt
    jac = triangle_jacobians(positions2d[triangles], standards)
    a = np.broadcast_to(np.asarray(alpha, dtype=float), (len(triangles),))[:, None, None]
    return (1.0 - a) * rot + a * jac


def solve_positions(
    system: PrefactoredSystem,
    metrics: np.ndarray,
    standards: np.ndarray,
    fixed_positions: np.ndarray,
) -> np.ndarray:
    """Exact minimizer of the edge-residual energy given the metrics.

    `fixed_positions` is a full (n, 2) array; only pinned entries are
    read. Returns the complete (n, 2) position array.
    """
    if len(metrics) != len(system.triangles) or len(standards) != len(system.triangles):
        raise InvalidArgumentError("one metric and one standard triangle per mesh triangle")
    targets = _metric_edge_targets(metrics, standards)
    term = system.weights[:, :, None] * targets
    flat = term.reshape(-1, 2)
    starts = system.triangles[:, _EDGE_I].ravel()
    ends = system.triangles[:, _EDGE_J].ravel()

    rhs = np.zeros((system.n, 2))
    for c in range(2):
        rhs[:, c] = np.bincount(starts, weights=flat[:, c], minlength=system.n)
        rhs[:, c] -= np.bincount(ends, weights=flat[:, c], minlength=system.n)

    out = np.array(fixed_positions, dtype=float, copy=True)
    for c in range(2):
        free = system.free[c]
        fx = system.fixed[c]
        b = rhs[free, c] - system.couplings[c] @ fixed_positions[fx, c]
        out[free, c] = system.factors[c].solve(b)
        out[fx, c] = fixed_positions[fx, c]
    return out


def residual_energies(
    positions2d: np.ndarray,
    triangles: np.ndarray,
    weights: np.ndarray,
    metrics: np.ndarray,
    standards: np.ndarray,
) -> np.ndarray:
    """Per-triangle weighted edge-residual energy; its sum is the global
    fit energy the solver minimizes."""
    targets = _metric_edge_targets(metrics, standards)
    cur = positions2d[triangles[:, _EDGE_I]] - positions2d[triangles[:, _EDGE_J]]
    res = cur - targets
    return (weights * np.einsum("tec,tec->te", res, res)).sum(axis=1)


def _signed_areas(positions2d: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = positions2d[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def gauge_fixed_sets(mesh3d: TriMesh):
    """Minimal pins for the free boundary: one corner vertex.

    The per-coordinate systems are translation-invariant only; the metric
    targets on the right-hand side already fix the orientation, so pinning
    anything beyond one vertex genuinely constrains the solution (and
    breaks gauge invariance under input rotations).
    """
    xy = mesh3d.positions[:, :2]
    corner = int(np.lexsort((xy[:, 0], xy[:, 1]))[0])
    if len(one_ring(mesh3d, corner)) == 0:
        raise InvalidArgumentError("gauge corner is isolated")
    return np.array([corner]), np.array([corner])


def _fit_to_rect(positions2d: np.ndarray, input_xy: np.ndarray) -> np.ndarray:
    # bounding-circle fit against the input layout: scale and anchor are
    # rotation-invariant, so a rotated input yields a rigidly rotated
    # output (axis-aligned bbox fitting would not)
    center = positions2d.mean(axis=0)
    radius = float(np.linalg.norm(positions2d - center, axis=1).max())
    in_center = input_xy.mean(axis=0)
    in_radius = float(np.linalg.norm(input_xy - in_center, axis=1).max())
    scale = in_radius / max(radius, 1e-12)
    return (positions2d - center) * scale + in_center


@dataclass
class SolveReport:
    """Everything observable about one flattening run."""

    iterations: int = 0
    energy_trace: list = field(default_factory=list)
    max_move_trace: list = field(default_factory=list)
    flips_trace: list = field(default_factory=list)
    converged: bool = False
    flipped_triangles: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    assembly_seconds: float = 0.0
    factor_seconds: float = 0.0
    iteration_seconds: list = field(default_factory=list)
    # final-iteration state, consumed by the distortion report
    weights: np.ndarray | None = None
    standards: np.ndarray | None = None
    metrics: np.ndarray | None = None

    @property
    def final_energy(self) -> float:
        return self.energy_trace[-1] if self.energy_trace else 0.0


def energy_trace_csv(report: SolveReport) -> str:
    lines = ["iteration,energy,max_vertex_move,flips"]
    for i, (e, mv, fl) in enumerate(
        zip(report.energy_trace, report.max_move_trace, report.flips_trace), start=1
    ):
        lines.append(f"{i},{e!r},{mv!r},{fl}")
    return "\n".join(lines) + "\n"


def flatten(
    mesh3d: TriMesh,
    params: MetricParams = MetricParams(),
    epsilon: float = 1e-3,
    max_iter: int = 50,
    boundary_mode: str = "fixed_rectangle",
    system: PrefactoredSystem | None = None,
    standards: np.ndarray | None = None,
    weights: np.ndarray | None = None,
) -> tuple:
    """Flatten a lifted mesh back to the plane; returns (mesh2d, report).

    Iterates metric fitting and the global position solve until the
    relative energy change drops below `epsilon`. "fixed_rectangle" pins
    the outer rectangle at its input position; "free" pins only a gauge
    and afterwards uniformly rescales and recenters the result into the
    input rectangle. A prefactorized system (from a previous run with the
    same footprint and weights) may be passed in to skip assembly, along
    with the standards/weights it was built from.
    """
    if boundary_mode not in ("fixed_rectangle", "free"):
        raise InvalidArgumentError(f"unknown boundary_mode {boundary_mode!r}")
    if max_iter < 1:
        raise InvalidArgumentError("max_iter must be >= 1")

    if standards is None:
        standards = standardize_triangles(mesh3d.positions[mesh3d.triangles])
    if weights is None:
        weights = edge_weights(mesh3d, standards)

    if system is None:
        if boundary_mode == "fixed_rectangle":
            fixed = np.flatnonzero(mesh3d.boundary_flags == OUTER_BOUNDARY)
            if len(fixed) == 0:
                raise InvalidArgumentError("mesh has no outer boundary to pin")
            fixed_sets = (fixed, fixed)
        else:
            fixed_sets = gauge_fixed_sets(mesh3d)
        system = assemble_and_factor(mesh3d, weights, fixed_sets)

    report = SolveReport(
        assembly_seconds=system.assembly_seconds,
        factor_seconds=system.factor_seconds,
        weights=weights,
        standards=standards,
    )

    input_xy = mesh3d.positions[:, :2].copy()
    positions = input_xy.copy()  # z-projection of the lifted mesh
    metrics = None
    tri = mesh3d.triangles
    prev_energy = None
    for k in range(1, max_iter + 1):
        t0 = time.perf_counter()
        metrics = fit_metrics(positions, tri, weights, standards, params.alpha)
        new_positions = solve_positions(system, metrics, standards, positions)
        energy = float(
            residual_energies(new_positions, tri, weights, metrics, standards).sum()
        )
        move = float(np.max(np.linalg.norm(new_positions - positions, axis=1)))
        positions = new_positions
        flips = int((_signed_areas(positions, tri) <= 0.0).sum())
        report.energy_trace.append(energy)
        report.max_move_trace.append(move)
        report.flips_trace.append(flips)
        report.iteration_seconds.append(time.perf_counter() - t0)
        report.iterations = k
        if energy < _ENERGY_FLOOR:
            report.converged = True
            break
        if prev_energy is not None:
            if abs(energy - prev_energy) / max(prev_energy, _ENERGY_FLOOR) < epsilon:
                report.converged = True
                break
        prev_energy = energy

    report.metrics = metrics
    report.flipped_triangles = np.flatnonzero(_signed_areas(positions, tri) <= 0.0)

    if boundary_mode == "free":
        positions = _fit_to_rect(positions, input_xy)

    out = mesh3d.copy()
    out.positions = np.column_stack([positions, np.zeros(len(positions))])
    return out, report
