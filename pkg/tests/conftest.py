import numpy as np
import pytest

import geolens as gl


def checkerboard(width, height, pitch, offset=0):
    """Checker texture; `offset` shifts the pattern so a lens can sit
    mid-cell instead of on a cell corner."""
    px = np.zeros((height, width, 4), np.uint8)
    yy, xx = np.mgrid[0:height, 0:width]
    cells = (((xx + offset) // pitch) + ((yy + offset) // pitch)) % 2
    px[..., 0] = px[..., 1] = px[..., 2] = np.where(cells, 255, 0).astype(np.uint8)
    px[..., 3] = 255
    return gl.ImageBuffer(px)


def gradient_image(width, height):
    px = np.zeros((height, width, 4), np.uint8)
    xx = np.linspace(0, 255, width, dtype=np.uint8)
    yy = np.linspace(0, 255, height, dtype=np.uint8)
    px[..., 0] = xx[None, :]
    px[..., 1] = yy[:, None]
    px[..., 2] = 128
    px[..., 3] = 255
    return gl.ImageBuffer(px)


def center_lens(size=128.0, radius_frac=0.3, h0_frac=1.0, **kwargs):
    r = radius_frac * size
    return gl.LensSpec(
        shape=gl.Circle(center=(size / 2, size / 2), radius=r), h0=h0_frac * r, **kwargs
    )


def lifted_mesh(size=128.0, n=33, lens=None):
    lens = lens or center_lens(size)
    mesh = gl.build_grid_mesh(size, size, n, n)
    marked = gl.mark_roi(mesh, lens)
    return gl.lift_mesh(marked, lens), lens


@pytest.fixture
def small_grid():
    return gl.build_grid_mesh(100, 100, 5, 5)


@pytest.fixture
def lifted_21():
    mesh3d, lens = lifted_mesh(size=128.0, n=21)
    return mesh3d


@pytest.fixture
def checker_128():
    return checkerboard(128, 128, 16)
