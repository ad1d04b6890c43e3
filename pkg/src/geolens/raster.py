"""Image buffers, PNG/PPM I/O, and CPU rasterization of textured meshes.

Rasterization samples pixel centers with a top-left fill rule so adjacent
triangles neither overlap nor leave holes, interpolates uv barycentrically
and samples the texture bilinearly. Overlapping triangles (flips) resolve
first-triangle-wins with a warning.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ImageIOError, InvalidArgumentError, OverlapWarning
from .mesh import TriMesh


@dataclass
class ImageBuffer:
    """Row-major RGBA, 8 bits per channel, y down."""

    pixels: np.ndarray  # (h, w, 4) uint8

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 4 or px.dtype != np.uint8:
            raise InvalidArgumentError("pixels must be (h, w, 4) uint8")
        self.pixels = px

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def solid(cls, width: int, height: int, rgba=(0, 0, 0, 255)) -> "ImageBuffer":
        px = np.empty((height, width, 4), dtype=np.uint8)
        px[:] = np.asarray(rgba, dtype=np.uint8)
        return cls(px)


def load_image(path) -> ImageBuffer:
    path = Path(path)
    try:
        if path.suffix.lower() == ".ppm":
            return _load_ppm(path)
        with Image.open(path) as im:
            return ImageBuffer(np.asarray(im.convert("RGBA")).copy())
    except (OSError, ValueError, SyntaxError) as exc:
        raise ImageIOError(path, f"cannot read image ({exc})") from exc


def save_image(buffer: ImageBuffer, path) -> None:
    path = Path(path)
    try:
        if path.suffix.lower() == ".ppm":
            _save_ppm(buffer, path)
        else:
            Image.fromarray(buffer.pixels, "RGBA").save(path)
    except OSError as exc:
        raise ImageIOError(path, f"cannot write image ({exc})") from exc


def _load_ppm(path: Path) -> ImageBuffer:
    data = path.read_bytes()
    if not data.startswith(b"P6"):
        raise ImageIOError(path, "not a binary PPM (P6) file")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageIOError(path, "truncated PPM header")
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    w, h, maxval = fields
    if maxval != 255:
        raise ImageIOError(path, f"unsupported PPM maxval {maxval}")
    raw = data[pos : pos + 3 * w * h]
    if len(raw) != 3 * w * h:
        raise ImageIOError(path, "truncated PPM pixel data")
    rgb = np.frombuffer(raw, dtype=np.uint8).reshape(h, w, 3)
    px = np.empty((h, w, 4), dtype=np.uint8)
    px[:, :, :3] = rgb
    px[:, :, 3] = 255
    return ImageBuffer(px)


def _save_ppm(buffer: ImageBuffer, path: Path) -> None:
    header = f"P6\n{buffer.width} {buffer.height}\n255\n".encode()
    path.write_bytes(header + buffer.pixels[:, :, :3].tobytes())


def _bilinear(texture: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    th, tw = texture.shape[:2]
    fx = np.clip(u * tw - 0.5, 0.0, tw - 1.0)
    fy = np.clip(v * th - 0.5, 0.0, th - 1.0)
    x0 = np.floor(fx).astype(np.int64)
    y0 = np.floor(fy).astype(np.int64)
    x1 = np.minimum(x0 + 1, tw - 1)
    y1 = np.minimum(y0 + 1, th - 1)
    tx = (fx - x0)[:, None]
    ty = (fy - y0)[:, None]
    tex = texture.astype(np.float64)
    c = (
        tex[y0, x0] * (1 - tx) * (1 - ty)
        + tex[y0, x1] * tx * (1 - ty)
        + tex[y1, x0] * (1 - tx) * ty
        + tex[y1, x1] * tx * ty
    )
    return np.clip(np.rint(c), 0, 255).astype(np.uint8)


def _topleft_inclusive(dx: float, dy: float) -> bool:
    # y grows downward: left edges run upward, top edges run right
    return dy < 0.0 or (dy == 0.0 and dx > 0.0)


def _cover_triangle(xy: np.ndarray, idx: np.ndarray, width: int, height: int):
    """Pixel centers covered by one 2D triangle (top-left rule).

    `idx` holds the triangle's vertex indices in positive-shoelace order.
    Each edge function is evaluated in a canonical direction keyed on the
    vertex indices, so the two triangles sharing an edge compute
    bit-identical values and every boundary pixel lands in exactly one of
    them. Returns (ys, xs, bary) or None when the bbox misses the raster.
    """
    p = xy[idx]
    x_lo = int(np.ceil(p[:, 0].min() - 0.5))
    x_hi = int(np.floor(p[:, 0].max() - 0.5))
    y_lo = int(np.ceil(p[:, 1].min() - 0.5))
    y_hi = int(np.floor(p[:, 1].max() - 0.5))
    x_lo, x_hi = max(x_lo, 0), min(x_hi, width - 1)
    y_lo, y_hi = max(y_lo, 0), min(y_hi, height - 1)
    if x_lo > x_hi or y_lo > y_hi:
        return None

    xs = np.arange(x_lo, x_hi + 1) + 0.5
    ys = np.arange(y_lo, y_hi + 1) + 0.5
    gx, gy = np.meshgrid(xs, ys)

    area2 = (p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[1, 1] - p[0, 1]) * (
        p[2, 0] - p[0, 0]
    )
    cover = None
    e = np.empty((3,) + gx.shape)
    for k, (a, b) in enumerate(((1, 2), (2, 0), (0, 1))):
        ia, ib = int(idx[a]), int(idx[b])
        lo, hi = (a, b) if ia < ib else (b, a)
        ek = (p[hi, 0] - p[lo, 0]) * (gy - p[lo, 1]) - (p[hi, 1] - p[lo, 1]) * (
            gx - p[lo, 0]
        )
        if lo != a:
            ek = -ek
        inc = ek > 0
        if _topleft_inclusive(p[b, 0] - p[a, 0], p[b, 1] - p[a, 1]):
            inc |= ek == 0
        e[k] = ek
        cover = inc if cover is None else (cover & inc)
    if not cover.any():
        return None
    iy, ix = np.nonzero(cover)
    bary = e[:, iy, ix].T / area2
    return iy + y_lo, ix + x_lo, bary


def _triangle_loop(positions2d, triangles, width, height):
    """Yields (t, ys, xs, bary, order) for every covering triangle."""
    for t in range(len(triangles)):
        idx = triangles[t]
        p = positions2d[idx]
        area2 = (p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[1, 1] - p[0, 1]) * (
            p[2, 0] - p[0, 0]
        )
        if area2 == 0.0:
            continue
        order = idx if area2 > 0 else idx[[0, 2, 1]]
        hit = _cover_triangle(positions2d, order, width, height)
        if hit is None:
            continue
        ys, xs, bary = hit
        yield t, ys, xs, bary, order


def rasterize(
    mesh2d: TriMesh, texture: ImageBuffer, out_dims, allow_outside: bool = False
) -> ImageBuffer:
    """Render the textured mesh into an RGBA raster of `out_dims` (w, h).

    Pixels covered by no triangle stay transparent. Overlaps (flipped or
    folded geometry) keep the first triangle's pixels and emit an
    OverlapWarning. `allow_outside` skips the position bound check for
    warps that intentionally leave the frame (the zoom-in baseline).
    """
    width, height = int(out_dims[0]), int(out_dims[1])
    if mesh2d.n_triangles == 0:
        raise InvalidArgumentError("cannot rasterize an empty mesh")
    xy = mesh2d.positions[:, :2]
    margin = 0.5 + 1e-6
    if not allow_outside and (
        (xy.min(axis=0) < -margin).any()
        or (xy.max(axis=0) > np.array([width, height]) + margin).any()
    ):
        raise InvalidArgumentError("mesh positions fall outside the output raster")

    uv = np.clip(mesh2d.uv, 0.0, 1.0)
    out = np.zeros((height, width, 4), dtype=np.uint8)
    claimed = np.zeros((height, width), dtype=bool)
    overlaps = 0
    for _, ys, xs, bary, idx in _triangle_loop(xy, mesh2d.triangles, width, height):
        fresh = ~claimed[ys, xs]
        overlaps += int((~fresh).sum())
        if not fresh.any():
            continue
        ys, xs, bary = ys[fresh], xs[fresh], bary[fresh]
        us = bary @ uv[idx, 0]
        vs = bary @ uv[idx, 1]
        out[ys, xs] = _bilinear(texture.pixels, us, vs)
        claimed[ys, xs] = True
    if overlaps:
        warnings.warn(
            f"{overlaps} pixel(s) were covered more than once (flipped or "
            "overlapping triangles); first triangle wins",
            OverlapWarning,
        )
    return ImageBuffer(out)


def rasterize_flat(
    mesh2d: TriMesh, colors: np.ndarray, out_dims, background=(0, 0, 0, 0)
) -> ImageBuffer:
    """Flat per-triangle colors instead of texture; used for heatmaps."""
    width, height = int(out_dims[0]), int(out_dims[1])
    if mesh2d.n_triangles == 0:
        raise InvalidArgumentError("cannot rasterize an empty mesh")
    colors = np.asarray(colors, dtype=np.uint8)
    if colors.shape != (mesh2d.n_triangles, 4):
        raise InvalidArgumentError("one RGBA color per triangle required")
    out = np.empty((height, width, 4), dtype=np.uint8)
    out[:] = np.asarray(background, dtype=np.uint8)
    claimed = np.zeros((height, width), dtype=bool)
    for t, ys, xs, _, _ in _triangle_loop(
        mesh2d.positions[:, :2], mesh2d.triangles, width, height
    ):
        fresh = ~claimed[ys, xs]
        out[ys[fresh], xs[fresh]] = colors[t]
        claimed[ys, xs] = True
    return ImageBuffer(out)
