"""Closed-form radial magnification baselines: fisheye, bifocal, zoom-in.

These are the classic optics-style lenses the geometric lens is compared
against. All are per-vertex radial maps around a center: fisheye is the
standard hyperbolic profile (center slope = m, continuous identity at the
rim), bifocal magnifies an inner disk linearly and compresses an annulus
so the map stays continuous and monotone, zoom-in scales the whole disk
and leaves the discontinuity (occlusion) at the rim.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .mesh import TriMesh

_KINDS = ("fisheye", "bifocal", "zoom_in")


@dataclass(frozen=True)
class RadialLens:
    kind: str
    center: tuple
    radius: float
    magnification: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidArgumentError(f"unknown baseline kind {self.kind!r}")
        if not self.radius > 0:
            raise InvalidArgumentError("radius must be > 0")
        if not self.magnification > 1:
            raise InvalidArgumentError("magnification must be > 1")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))


def radial_map(lens: RadialLens, rho: np.ndarray) -> np.ndarray:
    """New radius for each input radius."""
    r = float(lens.radius)
    m = float(lens.magnification)
    rho = np.asarray(rho, dtype=float)
    out = rho.copy()
    inside = rho <= r
    if lens.kind == "fisheye":
        t = rho[inside] / r
        out[inside] = r * (m * t) / (1.0 + (m - 1.0) * t)
    elif lens.kind == "zoom_in":
        out[inside] = m * rho[inside]
    else:  # bifocal: inner zone [0, r/(m+1)] at slope m, annulus at slope 1/m
        zone = r / (m + 1.0)
        inner = rho <= zone
        out[inner] = m * rho[inner]
        ann = inside & ~inner
        out[ann] = m * zone + (rho[ann] - zone) / m
    return out


def warp_vertices(mesh: TriMesh, lens: RadialLens) -> np.ndarray:
    """Per-vertex 2D positions after the radial warp; identity outside the
    lens radius (zoom-in keeps its rim discontinuity)."""
    xy = mesh.positions[:, :2]
    c = np.asarray(lens.center)
    delta = xy - c
    rho = np.linalg.norm(delta, axis=1)
    new_rho = radial_map(lens, rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(rho > 0, new_rho / np.where(rho > 0, rho, 1.0), 1.0)
    return c + delta * scale[:, None]
