import numpy as np
import pytest

import geolens as gl
from geolens.distortion import distortion_csv, heat_colors
from geolens.flatten import edge_weights, standardize_triangles
from tests.conftest import center_lens, lifted_mesh


def flat_flatten(n=13, size=64.0):
    lens = center_lens(size, h0_frac=0.0)
    mesh3d, _ = lifted_mesh(size=size, n=n, lens=lens)
    return gl.flatten(mesh3d)


def test_identity_flatten_zero_distortion_blue_heatmap():
    out, report = flat_flatten()
    d = gl.measure_distortion(
        out, report.standards, report.metrics, report.weights, heatmap_dims=(64, 64)
    )
    assert np.allclose(d.per_triangle, 0.0, atol=1e-12)
    assert d.max <= 1e-12
    covered = d.heatmap.pixels[:, :, 3] == 255
    assert covered.any()
    blue = d.heatmap.pixels[covered]
    assert (blue[:, 2] == 255).all() and (blue[:, 0] == 0).all()


def test_total_matches_solver_final_energy():
    mesh3d, _ = lifted_mesh(size=128.0, n=21)
    out, report = gl.flatten(gl.solve_uv(mesh3d))
    d = gl.measure_distortion(out, report.standards, report.metrics, report.weights)
    assert d.total == pytest.approx(report.final_energy, rel=1e-9)
    assert d.max == d.per_triangle.max()
    assert (d.per_triangle >= 0).all()


def test_distortion_invariances():
    mesh3d, _ = lifted_mesh(size=128.0, n=17)
    out, report = gl.flatten(gl.solve_uv(mesh3d))
    base = gl.measure_distortion(out, report.standards, report.metrics, report.weights)

    shifted = out.copy()
    shifted.positions = out.positions + np.array([13.0, -4.5, 0.0])
    d2 = gl.measure_distortion(shifted, report.standards, report.metrics, report.weights)
    assert np.allclose(d2.per_triangle, base.per_triangle, rtol=1e-12, atol=1e-12)


def test_mismatched_lengths_rejected():
    out, report = flat_flatten()
    with pytest.raises(gl.InvalidArgumentError):
        gl.measure_distortion(out, report.standards[:-1], report.metrics, report.weights)


def test_baseline_identity_warp_zero():
    mesh = gl.build_grid_mesh(64, 64, 9, 9)
    d = gl.measure_baseline_distortion(mesh, mesh.positions[:, :2])
    assert np.allclose(d.per_triangle, 0.0, atol=1e-12)


def test_baseline_global_rotation_zero_at_rigid_reference():
    mesh = gl.build_grid_mesh(64, 64, 9, 9)
    ang = 0.83
    rot = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    warped = (mesh.positions[:, :2] - 32.0) @ rot.T + 32.0
    d = gl.measure_baseline_distortion(mesh, warped, alpha=0.0)
    assert np.allclose(d.per_triangle, 0.0, atol=1e-9)


def test_baseline_uniform_scale_closed_form():
    mesh = gl.build_grid_mesh(64, 64, 9, 9)
    warped = 2.0 * mesh.positions[:, :2]
    d = gl.measure_baseline_distortion(mesh, warped, alpha=0.0)
    # residual per edge is exactly |2e - Re|^2 = |e|^2 for the rigid reference
    std = standardize_triangles(mesh.positions[mesh.triangles])
    w = edge_weights(mesh, std)
    e = std[:, [0, 1, 2]] - std[:, [1, 2, 0]]
    expect = (w * np.einsum("tec,tec->te", e, e)).sum(axis=1)
    assert np.allclose(d.per_triangle, expect, rtol=1e-9)
    # congruent triangles pay the same
    assert np.allclose(d.per_triangle, d.per_triangle[0], rtol=1e-9)


def test_baseline_shape_check():
    mesh = gl.build_grid_mesh(64, 64, 5, 5)
    with pytest.raises(gl.InvalidArgumentError):
        gl.measure_baseline_distortion(mesh, np.zeros((3, 2)))


def test_heat_colors_ramp_and_fixed_scale():
    c = heat_colors(np.array([0.0, 1.0, 2.0]))
    assert c[0].tolist() == [0, 0, 255, 255]
    assert c[2].tolist() == [255, 0, 0, 255]
    fixed = heat_colors(np.array([0.0, 1.0]), scale_max=4.0)
    assert fixed[1, 0] < 255  # far from red on the wider scale


def test_distortion_csv_format():
    out, report = flat_flatten()
    d = gl.measure_distortion(out, report.standards, report.metrics, report.weights)
    text = distortion_csv(d)
    lines = text.strip().splitlines()
    assert lines[0] == "triangle_index,E_i"
    assert len(lines) == out.n_triangles + 1
    assert lines[1].startswith("0,")


def test_geometric_lens_beats_fisheye_on_peak_distortion():
    # the displayed image map of the geometric lens, against a fisheye of
    # the same footprint delivering the same center magnification: the
    # worst per-triangle distortion is lower for the geometric lens
    size = 256.0
    lens = gl.LensSpec(shape=gl.Circle(center=(128, 128), radius=50), h0=50.0)
    mesh = gl.build_grid_mesh(size, size, 50, 50)
    lifted = gl.lift_mesh(gl.mark_roi(mesh, lens), lens)
    out, _ = gl.flatten(gl.solve_uv(lifted))

    src = out.copy()
    src.positions = np.column_stack(
        [out.uv * size, np.zeros(out.n_vertices)]
    )
    geo = gl.measure_baseline_distortion(src, out.positions[:, :2])

    # delivered center magnification from the map itself
    from geolens.mesh import signed_areas_2d

    a_src = signed_areas_2d(src.positions, src.triangles)
    a_out = signed_areas_2d(out.positions, out.triangles)
    centers = out.positions[out.triangles][:, :, :2].mean(axis=1)
    near = np.argsort(np.linalg.norm(centers - [128, 128], axis=1))[:8]
    m_center = float(np.sqrt((a_out[near] / a_src[near])).mean())
    assert m_center > 1.2

    fe = gl.RadialLens(kind="fisheye", center=(128, 128), radius=50, magnification=m_center)
    fish = gl.measure_baseline_distortion(mesh, gl.warp_vertices(mesh, fe))
    assert geo.max < fish.max
