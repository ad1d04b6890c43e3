"""Lens specifications and per-vertex ROI distance fields.

A lens is either a circle (distance = Euclidean distance to the center) or
a simple polygon. For polygons the distance field is anchored on a discrete
medial path: the interior mesh vertices whose distance to the polygon
boundary is a local maximum over their one-ring, with graph-geodesic
distances (Dijkstra over mesh edges) measuring how far every ROI vertex is
from that path. Only the distance and its maximum enter the height model,
so this discrete proxy stands in for an exact medial axis transform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from . import mesh as mesh_mod
from .errors import EmptyRoiError, InvalidArgumentError
from .mesh import NO_LENS, OUTER_BOUNDARY, ROI_BOUNDARY, TriMesh, one_ring


@dataclass(frozen=True)
class MetricParams:
    """Blending parameter for the flattening metric: 0 = rigid (rotation
    only), 1 = the full per-triangle map. Useful visual effects live in
    [0, 0.5]."""

    alpha: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidArgumentError(f"alpha must be in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class Circle:
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidArgumentError(f"circle radius must be > 0, got {self.radius}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))


@dataclass(frozen=True)
class Polygon:
    """Closed simple polygon given as an ordered loop of (x, y) points."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
            raise InvalidArgumentError("polygon needs at least 3 (x, y) points")
        if _self_intersects(pts):
            raise InvalidArgumentError("polygon boundary self-intersects")
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class LensSpec:
    """One magnifier: placement, height profile, and metric preference.

    h0 is the magnification scale in screen units; h0 = 0 is legal and
    means "no magnification". `height_mode` selects the center-peaked
    normalized profile (default) or the raw unshifted one, see lift.
    """

    shape: object  # Circle | Polygon
    profile: str = "gaussian"  # gaussian | sphere
    h0: float = 0.0
    metric: MetricParams = field(default_factory=MetricParams)
    height_mode: str = "normalized"

    def __post_init__(self):
        if not isinstance(self.shape, (Circle, Polygon)):
            raise InvalidArgumentError("lens shape must be a Circle or Polygon")
        if self.profile not in ("gaussian", "sphere"):
            raise InvalidArgumentError(f"unknown profile {self.profile!r}")
        if self.h0 < 0:
            raise InvalidArgumentError(f"h0 must be >= 0, got {self.h0}")
        if self.height_mode not in ("normalized", "raw"):
            raise InvalidArgumentError(f"unknown height_mode {self.height_mode!r}")


def load_polygon(path) -> Polygon:
    """Polygon from a plain-text file with one "x y" pair per line; the
    loop is closed implicitly."""
    pts = []
    for ln in Path(path).read_text().splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        x, y = ln.split()[:2]
        pts.append((float(x), float(y)))
    return Polygon(np.asarray(pts))


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) < 1e-12 else (1 if v > 0 else -1)

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def _self_intersects(pts: np.ndarray) -> bool:
    k = len(pts)
    segs = [(pts[i], pts[(i + 1) % k]) for i in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            if j == i or (j + 1) % k == i or (i + 1) % k == j:
                continue  # shared endpoint
            if _segments_cross(*segs[i], *segs[j]):
                return True
    return False


def points_in_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd rule containment test, vectorized over query points."""
    x, y = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    k = len(poly)
    for i in range(k):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % k]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < np.where(crosses, xint, np.inf))
    return inside


def _distance_to_segments(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Minimum Euclidean distance from each point to the closed polyline."""
    best = np.full(len(points), np.inf)
    k = len(poly)
    for i in range(k):
        a = poly[i]
        b = poly[(i + 1) % k]
        ab = b - a
        denom = float(ab @ ab)
        if denom < 1e-30:
            d = np.linalg.norm(points - a, axis=1)
        else:
            t = np.clip(((points - a) @ ab) / denom, 0.0, 1.0)
            proj = a + t[:, None] * ab
            d = np.linalg.norm(points - proj, axis=1)
        best = np.minimum(best, d)
    return best


def _edge_graph(mesh: TriMesh):
    e = mesh.edges()
    xy = mesh.positions[:, :2]
    lengths = np.linalg.norm(xy[e[:, 0]] - xy[e[:, 1]], axis=1)
    n = mesh.n_vertices
    g = coo_matrix(
        (np.concatenate([lengths, lengths]),
         (np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]]))),
        shape=(n, n),
    )
    return g.tocsr()


def roi_distance_field(mesh: TriMesh, lens: LensSpec):
    """Per-vertex (d, d_max, inside) for one lens.

    Circle: d is the distance to the center, d_max the radius, and the
    boundary circle counts as inside. Polygon: inside by the even-odd rule;
    d is the graph-geodesic distance to the nearest medial vertex and d_max
    its maximum over the inside set.
    """
    xy = mesh.positions[:, :2]
    if isinstance(lens.shape, Circle):
        c = np.asarray(lens.shape.center)
        d = np.linalg.norm(xy - c, axis=1)
        inside = d <= lens.shape.radius
        return d, float(lens.shape.radius), inside

    poly = lens.shape.points
    inside = points_in_polygon(xy, poly)
    if not inside.any():
        raise EmptyRoiError("polygon lens encloses no mesh vertex")

    boundary_dist = np.full(mesh.n_vertices, -np.inf)
    idx = np.flatnonzero(inside)
    boundary_dist[idx] = _distance_to_segments(xy[idx], poly)

    medial = []
    for v in idx:
        ring = one_ring(mesh, int(v))
        if len(ring) == 0 or boundary_dist[v] >= boundary_dist[ring].max():
            medial.append(int(v))
    medial = np.asarray(medial, dtype=np.int64)

    graph = _edge_graph(mesh)
    d_all = dijkstra(graph, directed=False, indices=medial, min_only=True)
    d = np.where(np.isfinite(d_all), d_all, 0.0)
    d_max = float(d[idx].max())
    if d_max <= 0.0:
        # single-vertex or fully-medial ROI; keep the field well defined
        d_max = float(np.min(boundary_dist[idx][boundary_dist[idx] > 0], initial=1.0))
    return d, d_max, inside


def mark_roi(mesh: TriMesh, lenses) -> TriMesh:
    """New mesh with roi_distance, lens ownership, and ROI boundary flags.

    Accepts one LensSpec or a sequence. Vertices on the outer rectangle are
    never claimed by a lens (the rectangle stays a hard constraint), and
    lenses whose inside sets overlap are rejected. The innermost ring of
    outside vertices adjacent to an inside vertex is flagged ROI_BOUNDARY.
    """
    if isinstance(lenses, LensSpec):
        lenses = [lenses]
    lenses = list(lenses)
    if not lenses:
        raise InvalidArgumentError("at least one lens required")

    out = mesh.copy()
    out.roi_distance = np.zeros(mesh.n_vertices)
    out.lens_id = np.full(mesh.n_vertices, NO_LENS, dtype=np.int32)
    out.boundary_flags = np.where(
        mesh.boundary_flags == OUTER_BOUNDARY, OUTER_BOUNDARY, mesh_mod.INTERIOR
    ).astype(np.uint8)

    dmax_list = []
    for k, lens in enumerate(lenses):
        d, d_max, inside = roi_distance_field(mesh, lens)
        inside = inside & (out.boundary_flags != OUTER_BOUNDARY)
        if not inside.any():
            raise EmptyRoiError(f"lens {k} covers no usable mesh vertex")
        if (out.lens_id[inside] != NO_LENS).any():
            raise InvalidArgumentError(f"lens {k} overlaps another lens")
        out.lens_id[inside] = k
        out.roi_distance[inside] = d[inside]
        dmax_list.append(d_max)

    inside_any = out.lens_id != NO_LENS
    ring = np.zeros(mesh.n_vertices, dtype=bool)
    for a, b, c in mesh.triangles:
        tri = (int(a), int(b), int(c))
        flags_in = [inside_any[v] for v in tri]
        if any(flags_in) and not all(flags_in):
            for v, fin in zip(tri, flags_in):
                if not fin:
                    ring[v] = True
    sel = ring & ~inside_any & (out.boundary_flags == mesh_mod.INTERIOR)
    out.boundary_flags[sel] = ROI_BOUNDARY

    out.lens_dmax = tuple(dmax_list)
    return out
