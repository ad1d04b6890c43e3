"""Triangle meshes over images: grid construction, adjacency, 1-to-4 subdivision.

Meshes are treated as immutable after construction; every operation that
changes geometry or connectivity returns a new mesh. Positions are stored
as (n, 3) arrays with z = 0 on flat meshes, in screen units with y down.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError

# boundary_flags values
INTERIOR = 0
OUTER_BOUNDARY = 1
ROI_BOUNDARY = 2

# no lens owns the vertex
NO_LENS = -1

_DEGENERATE_AREA = 1e-12


@dataclass
class TriMesh:
    """Vertex/triangle structure shared by every stage of the engine.

    Per-vertex data: xyz position, uv texture coordinate in [0, 1]^2,
    distance field of the owning lens, boundary marker, and owning lens
    index (NO_LENS outside every lens). `dims` records the generating
    grid's (rows, cols) when the mesh came from `build_grid_mesh`.
    `lens_dmax` caches the per-lens maximum ROI distance filled in by
    `mark_roi`.
    """

    positions: np.ndarray  # (n, 3) float64
    triangles: np.ndarray  # (m, 3) int32, positive shoelace area in xy
    uv: np.ndarray  # (n, 2) float64
    roi_distance: np.ndarray  # (n,) float64, >= 0
    boundary_flags: np.ndarray  # (n,) uint8
    lens_id: np.ndarray  # (n,) int32
    dims: tuple | None = None
    lens_dmax: tuple = ()

    _vertex_tris: list | None = field(default=None, repr=False, compare=False)

    @property
    def n_vertices(self) -> int:
        return self.positions.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def heights(self) -> np.ndarray:
        """Cached z values (0 on flat meshes)."""
        return self.positions[:, 2]

    def copy(self) -> "TriMesh":
        return TriMesh(
            positions=self.positions.copy(),
            triangles=self.triangles.copy(),
            uv=self.uv.copy(),
            roi_distance=self.roi_distance.copy(),
            boundary_flags=self.boundary_flags.copy(),
            lens_id=self.lens_id.copy(),
            dims=self.dims,
            lens_dmax=self.lens_dmax,
        )

    def vertex_triangles(self) -> list:
        """Incident-triangle lists per vertex (built once, cached)."""
        if self._vertex_tris is None:
            vt = [[] for _ in range(self.n_vertices)]
            for t, (a, b, c) in enumerate(self.triangles):
                vt[a].append(t)
                vt[b].append(t)
                vt[c].append(t)
            self._vertex_tris = vt
        return self._vertex_tris

    def edges(self) -> np.ndarray:
        """Unique undirected edges as a (k, 2) array with i < j."""
        tri = self.triangles
        e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)


def signed_areas_2d(positions: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Shoelace area of each triangle in the xy plane (sign = orientation)."""
    p = positions[triangles][:, :, :2]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def areas_3d(positions: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = positions[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * np.linalg.norm(np.cross(d1, d2), axis=1)


def build_grid_mesh(width: float, height: float, rows: int, cols: int) -> TriMesh:
    """Regular lattice mesh spanning the [0, width] x [0, height] rectangle.

    Every lattice cell is split along the same diagonal (visually lower-left
    to upper-right, y down), giving interior vertices six neighbors. uv
    equals the position normalized by the image extent, and the outer
    rectangle ring is flagged OUTER_BOUNDARY.
    """
    if rows < 2 or cols < 2:
        raise InvalidArgumentError(f"grid needs rows, cols >= 2, got {rows}x{cols}")
    if width < 1 or height < 1:
        raise InvalidArgumentError(f"image extent must be >= 1, got {width}x{height}")

    ys, xs = np.meshgrid(
        np.linspace(0.0, float(height), rows),
        np.linspace(0.0, float(width), cols),
        indexing="ij",
    )
    n = rows * cols
    positions = np.zeros((n, 3))
    positions[:, 0] = xs.ravel()
    positions[:, 1] = ys.ravel()
    uv = positions[:, :2] / np.array([float(width), float(height)])

    # cell (i, j) corners: a=(i,j) b=(i,j+1) c=(i+1,j) d=(i+1,j+1);
    # diagonal c-b, children (a,b,c) and (b,d,c), both positive shoelace
    ii, jj = np.meshgrid(np.arange(rows - 1), np.arange(cols - 1), indexing="ij")
    a = (ii * cols + jj).ravel()
    b = a + 1
    c = a + cols
    d = c + 1
    triangles = np.empty((2 * len(a), 3), dtype=np.int32)
    triangles[0::2] = np.column_stack([a, b, c])
    triangles[1::2] = np.column_stack([b, d, c])

    flags = np.zeros(n, dtype=np.uint8)
    grid = flags.reshape(rows, cols)
    grid[0, :] = OUTER_BOUNDARY
    grid[-1, :] = OUTER_BOUNDARY
    grid[:, 0] = OUTER_BOUNDARY
    grid[:, -1] = OUTER_BOUNDARY

    return TriMesh(
        positions=positions,
        triangles=triangles,
        uv=uv,
        roi_distance=np.zeros(n),
        boundary_flags=flags,
        lens_id=np.full(n, NO_LENS, dtype=np.int32),
        dims=(rows, cols),
    )


def one_ring(mesh: TriMesh, v: int) -> np.ndarray:
    """Neighbor vertex indices ordered consistently around `v`.

    The order follows the triangles' orientation; interior vertices give a
    cyclic ring (starting at the smallest neighbor index), boundary vertices
    an open fan from one boundary edge to the other. Isolated vertices give
    an empty result.
    """
    if not 0 <= v < mesh.n_vertices:
        raise InvalidArgumentError(f"vertex index {v} out of range")
    tris = mesh.vertex_triangles()[v]
    if not tris:
        return np.empty(0, dtype=np.int64)

    succ = {}
    for t in tris:
        a, b, c = mesh.triangles[t]
        if a == v:
            succ[b] = c
        elif b == v:
            succ[c] = a
        else:
            succ[a] = b

    targets = set(succ.values())
    starts = [k for k in succ if k not in targets]
    if starts:  # open fan
        start = starts[0]
        closed = False
    else:
        start = min(succ)
        closed = True

    ring = [start]
    cur = start
    while cur in succ:
        cur = succ[cur]
        if closed and cur == start:
            break
        ring.append(cur)
    return np.asarray(ring, dtype=np.int64)


def is_ring_closed(mesh: TriMesh, v: int) -> bool:
    """True when the one-ring of `v` is a full cycle (interior vertex)."""
    tris = mesh.vertex_triangles()[v]
    if not tris:
        return False
    ring = one_ring(mesh, v)
    return len(ring) == len(tris)


def boundary_edge_set(mesh: TriMesh) -> set:
    """Undirected edges incident to exactly one triangle."""
    count = {}
    for a, b, c in mesh.triangles:
        for i, j in ((a, b), (b, c), (c, a)):
            key = (i, j) if i < j else (j, i)
            count[key] = count.get(key, 0) + 1
    return {e for e, k in count.items() if k == 1}


def _midpoint_flag(mesh: TriMesh, i: int, j: int, boundary_edges: set) -> int:
    fi, fj = mesh.boundary_flags[i], mesh.boundary_flags[j]
    key = (i, j) if i < j else (j, i)
    if fi == OUTER_BOUNDARY and fj == OUTER_BOUNDARY and key in boundary_edges:
        return OUTER_BOUNDARY
    if fi == ROI_BOUNDARY and fj == ROI_BOUNDARY:
        return ROI_BOUNDARY
    return INTERIOR


def subdivide_triangles(mesh: TriMesh, selected) -> TriMesh:
    """1-to-4 subdivision of the selected triangles, kept conforming.

    Selected triangles split at their three edge midpoints. Triangles that
    end up with two or three split edges are promoted to a full split;
    triangles with exactly one split edge are bisected toward the opposite
    vertex, so the result has no T-junctions. Midpoint attributes
    (position, uv, height via z, roi_distance) are linear interpolations of
    the edge endpoints; the lens id carries over only when both endpoints
    agree.
    """
    selected = set(int(t) for t in selected)
    for t in selected:
        if not 0 <= t < mesh.n_triangles:
            raise InvalidArgumentError(f"triangle index {t} out of range")
    if not selected:
        return mesh.copy()

    tri = mesh.triangles

    def edge_key(i, j):
        return (i, j) if i < j else (j, i)

    def tri_edges(t):
        a, b, c = tri[t]
        return [edge_key(a, b), edge_key(b, c), edge_key(c, a)]

    # conforming closure: >= 2 split edges promotes to a full split
    while True:
        split_edges = {e for t in selected for e in tri_edges(t)}
        grown = False
        for t in range(mesh.n_triangles):
            if t in selected:
                continue
            if sum(e in split_edges for e in tri_edges(t)) >= 2:
                selected.add(t)
                grown = True
        if not grown:
            break

    split_edges = {e for t in selected for e in tri_edges(t)}
    boundary_edges = boundary_edge_set(mesh)

    n = mesh.n_vertices
    new_positions = [mesh.positions]
    new_uv = [mesh.uv]
    new_dist = [mesh.roi_distance]
    new_flags = [mesh.boundary_flags]
    new_lens = [mesh.lens_id]

    midpoint = {}
    mid_pos, mid_uv, mid_dist, mid_flags, mid_lens = [], [], [], [], []
    for i, j in sorted(split_edges):
        midpoint[(i, j)] = n + len(mid_pos)
        mid_pos.append(0.5 * (mesh.positions[i] + mesh.positions[j]))
        mid_uv.append(0.5 * (mesh.uv[i] + mesh.uv[j]))
        mid_dist.append(0.5 * (mesh.roi_distance[i] + mesh.roi_distance[j]))
        mid_flags.append(_midpoint_flag(mesh, i, j, boundary_edges))
        li, lj = mesh.lens_id[i], mesh.lens_id[j]
        mid_lens.append(li if li == lj else NO_LENS)
    if mid_pos:
        new_positions.append(np.asarray(mid_pos))
        new_uv.append(np.asarray(mid_uv))
        new_dist.append(np.asarray(mid_dist))
        new_flags.append(np.asarray(mid_flags, dtype=np.uint8))
        new_lens.append(np.asarray(mid_lens, dtype=np.int32))

    out_tris = []
    for t in range(mesh.n_triangles):
        a, b, c = (int(v) for v in tri[t])
        if t in selected:
            mab = midpoint[edge_key(a, b)]
            mbc = midpoint[edge_key(b, c)]
            mca = midpoint[edge_key(c, a)]
            out_tris += [
                (a, mab, mca),
                (mab, b, mbc),
                (mca, mbc, c),
                (mab, mbc, mca),
            ]
            continue
        split = [e in split_edges for e in tri_edges(t)]
        k = sum(split)
        if k == 0:
            out_tris.append((a, b, c))
        else:  # exactly one split edge after closure
            if split[0]:
                m = midpoint[edge_key(a, b)]
                out_tris += [(a, m, c), (m, b, c)]
            elif split[1]:
                m = midpoint[edge_key(b, c)]
                out_tris += [(b, m, a), (m, c, a)]
            else:
                m = midpoint[edge_key(c, a)]
                out_tris += [(c, m, b), (m, a, b)]

    return TriMesh(
        positions=np.concatenate(new_positions),
        triangles=np.asarray(out_tris, dtype=np.int32),
        uv=np.concatenate(new_uv),
        roi_distance=np.concatenate(new_dist),
        boundary_flags=np.concatenate(new_flags),
        lens_id=np.concatenate(new_lens),
        dims=mesh.dims,
        lens_dmax=mesh.lens_dmax,
    )


def dump_mesh(mesh: TriMesh, path) -> None:
    """Plain-text dump: "rows cols" header, vertex lines (x y z u v d),
    triangle lines (i j k)."""
    rows, cols = mesh.dims if mesh.dims else (0, 0)
    lines = [f"{rows} {cols}"]
    for p, (u, v), d in zip(mesh.positions, mesh.uv, mesh.roi_distance):
        fields = (p[0], p[1], p[2], u, v, d)
        lines.append(" ".join(repr(float(x)) for x in fields))
    for i, j, k in mesh.triangles:
        lines.append(f"{i} {j} {k}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_mesh(path) -> TriMesh:
    """Inverse of `dump_mesh`.

    Vertex and triangle lines are told apart by field count. Boundary flags
    are not part of the format; the outer ring is recovered from the
    bounding rectangle and ROI markers are dropped.
    """
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    rows, cols = (int(x) for x in lines[0].split())
    positions, uv, dist, tris = [], [], [], []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) == 6:
            x, y, z, u, v, d = (float(p) for p in parts)
            positions.append((x, y, z))
            uv.append((u, v))
            dist.append(d)
        elif len(parts) == 3:
            tris.append(tuple(int(p) for p in parts))
        else:
            raise InvalidArgumentError(f"unparseable mesh line: {ln!r}")
    positions = np.asarray(positions)
    n = len(positions)
    xy = positions[:, :2]
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    on_rect = (
        np.isclose(xy[:, 0], lo[0])
        | np.isclose(xy[:, 0], hi[0])
        | np.isclose(xy[:, 1], lo[1])
        | np.isclose(xy[:, 1], hi[1])
    )
    flags = np.where(on_rect, OUTER_BOUNDARY, INTERIOR).astype(np.uint8)
    return TriMesh(
        positions=positions,
        triangles=np.asarray(tris, dtype=np.int32),
        uv=np.asarray(uv),
        roi_distance=np.asarray(dist),
        boundary_flags=flags,
        lens_id=np.full(n, NO_LENS, dtype=np.int32),
        dims=(rows, cols) if rows and cols else None,
    )
