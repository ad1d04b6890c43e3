import warnings

import numpy as np
import pytest

import geolens as gl
from geolens.raster import rasterize_flat
from tests.conftest import checkerboard, gradient_image


def identity_mesh(width, height, n=9):
    return gl.build_grid_mesh(width, height, n, n)


def test_identity_resample_is_exact(checker_128):
    mesh = identity_mesh(128, 128, 9)
    out = gl.rasterize(mesh, checker_128, (128, 128))
    assert (out.pixels[:, :, 3] == 255).all()
    rms = np.sqrt(
        np.mean(
            (out.pixels[:, :, :3].astype(float) - checker_128.pixels[:, :, :3]) ** 2
        )
    )
    assert rms < 1.0  # strictly below one 8-bit step
    assert np.array_equal(out.pixels[:, :, :3], checker_128.pixels[:, :, :3])


def test_identity_resample_gradient():
    img = gradient_image(100, 80)
    mesh = gl.build_grid_mesh(100, 80, 7, 11)
    out = gl.rasterize(mesh, img, (100, 80))
    assert np.array_equal(out.pixels[:, :, :3], img.pixels[:, :, :3])


def test_solid_texture_any_deformation():
    img = gl.ImageBuffer.solid(64, 64, (10, 200, 30, 255))
    mesh = gl.build_grid_mesh(64, 64, 7, 7)
    warped = mesh.copy()
    rng = np.random.default_rng(0)
    interior = warped.boundary_flags == gl.INTERIOR
    warped.positions[interior, :2] += rng.uniform(-2, 2, size=(interior.sum(), 2))
    out = gl.rasterize(warped, img, (64, 64))
    covered = out.pixels[:, :, 3] == 255
    assert (out.pixels[covered][:, :3] == (10, 200, 30)).all()


def test_translation_equivariance():
    img = checkerboard(64, 64, 8)
    mesh = gl.build_grid_mesh(48, 48, 7, 7)
    base = gl.rasterize(mesh, img, (64, 64))
    shifted = mesh.copy()
    shifted.positions[:, 0] += 9
    shifted.positions[:, 1] += 5
    out = gl.rasterize(shifted, img, (64, 64))
    assert np.array_equal(out.pixels[5:53, 9:57], base.pixels[0:48, 0:48])


def test_full_opacity_without_flips(checker_128):
    mesh = gl.build_grid_mesh(128, 128, 33, 33)
    with warnings.catch_warnings():
        warnings.simplefilter("error", gl.OverlapWarning)
        out = gl.rasterize(mesh, checker_128, (128, 128))
    assert (out.pixels[:, :, 3] == 255).all()


def test_overlap_first_wins_with_warning():
    img = gl.ImageBuffer.solid(32, 32, (255, 0, 0, 255))
    mesh = gl.build_grid_mesh(32, 32, 2, 2)
    folded = mesh.copy()
    # fold one corner far across the other triangle
    folded.positions[0, :2] = (30.0, 30.0)
    with pytest.warns(gl.OverlapWarning):
        gl.rasterize(folded, img, (32, 32))


def test_positions_outside_raster_rejected():
    img = gl.ImageBuffer.solid(32, 32, (0, 0, 0, 255))
    mesh = gl.build_grid_mesh(32, 32, 3, 3)
    bad = mesh.copy()
    bad.positions[0, 0] = -5.0
    with pytest.raises(gl.InvalidArgumentError):
        gl.rasterize(bad, img, (32, 32))
    gl.rasterize(bad, img, (32, 32), allow_outside=True)


def test_empty_mesh_rejected():
    img = gl.ImageBuffer.solid(8, 8, (0, 0, 0, 255))
    empty = gl.build_grid_mesh(8, 8, 2, 2)
    empty.triangles = np.zeros((0, 3), dtype=np.int32)
    with pytest.raises(gl.InvalidArgumentError):
        gl.rasterize(empty, img, (8, 8))


def test_rasterize_flat_colors():
    mesh = gl.build_grid_mesh(16, 16, 2, 2)
    colors = np.array([[255, 0, 0, 255], [0, 0, 255, 255]], dtype=np.uint8)
    out = rasterize_flat(mesh, colors, (16, 16))
    # cell diagonal runs corner-to-corner: x + y = 16 splits the colors
    assert (out.pixels[2, 2] == (255, 0, 0, 255)).all()
    assert (out.pixels[15, 15] == (0, 0, 255, 255)).all()


def test_png_round_trip(tmp_path):
    img = gradient_image(23, 17)
    img.pixels[3, 4, 3] = 128  # keep an alpha value too
    p = tmp_path / "x.png"
    gl.save_image(img, p)
    back = gl.load_image(p)
    assert np.array_equal(back.pixels, img.pixels)


def test_ppm_round_trip(tmp_path):
    img = gradient_image(23, 17)
    p = tmp_path / "x.ppm"
    gl.save_image(img, p)
    back = gl.load_image(p)
    assert np.array_equal(back.pixels[:, :, :3], img.pixels[:, :, :3])
    assert (back.pixels[:, :, 3] == 255).all()


def test_one_by_one_image(tmp_path):
    img = gl.ImageBuffer.solid(1, 1, (9, 8, 7, 255))
    p = tmp_path / "tiny.png"
    gl.save_image(img, p)
    assert gl.load_image(p).pixels.shape == (1, 1, 4)


def test_truncated_file_raises(tmp_path):
    img = gradient_image(32, 32)
    p = tmp_path / "x.png"
    gl.save_image(img, p)
    data = p.read_bytes()
    p.write_bytes(data[: len(data) // 2])
    with pytest.raises(gl.ImageIOError):
        gl.load_image(p)
    q = tmp_path / "y.ppm"
    q.write_bytes(b"P6\n100 100\n255\nshort")
    with pytest.raises(gl.ImageIOError):
        gl.load_image(q)


def test_missing_file_raises(tmp_path):
    with pytest.raises(gl.ImageIOError):
        gl.load_image(tmp_path / "nope.png")


def test_buffer_validation():
    with pytest.raises(gl.InvalidArgumentError):
        gl.ImageBuffer(np.zeros((4, 4, 3), dtype=np.uint8))
    with pytest.raises(gl.InvalidArgumentError):
        gl.ImageBuffer(np.zeros((4, 4, 4), dtype=np.float32))
