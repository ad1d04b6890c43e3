import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import geolens as gl
from geolens.mesh import TriMesh


def fan_mesh(center, ring_points, close=True):
    """Center vertex 0 surrounded by a ring, one triangle per ring edge."""
    ring_points = np.asarray(ring_points, float)
    m = len(ring_points)
    pts = np.vstack([np.asarray(center, float)[None, :], ring_points])
    if pts.shape[1] == 2:
        pts = np.column_stack([pts, np.zeros(len(pts))])
    tris = []
    last = m if close else m - 1
    for k in range(last):
        tris.append([0, 1 + k, 1 + (k + 1) % m])
    n = len(pts)
    return TriMesh(
        positions=pts,
        triangles=np.asarray(tris, dtype=np.int32),
        uv=pts[:, :2].copy(),
        roi_distance=np.zeros(n),
        boundary_flags=np.zeros(n, dtype=np.uint8),
        lens_id=np.full(n, gl.NO_LENS, dtype=np.int32),
    )


def regular_ring(m, radius=1.0, z=0.0):
    ang = np.linspace(0, 2 * np.pi, m, endpoint=False)
    return np.column_stack([radius * np.cos(ang), radius * np.sin(ang), np.full(m, z)])


def test_hexagon_weights_equal():
    mesh = fan_mesh([0, 0, 0], regular_ring(6))
    ring, w = gl.mean_value_weights(mesh, 0)
    assert len(ring) == 6
    assert np.allclose(w, w[0])
    assert (w > 0).all()


def test_weights_linear_precision_random_flat_ring():
    rng = np.random.default_rng(7)
    for _ in range(10):
        m = int(rng.integers(4, 9))
        ang = np.sort(rng.uniform(0, 2 * np.pi, m))
        if np.diff(ang, append=ang[0] + 2 * np.pi).max() >= np.pi:
            continue  # keep the center strictly inside
        radii = rng.uniform(0.5, 2.0, m)
        ring_pts = np.column_stack([radii * np.cos(ang), radii * np.sin(ang), np.zeros(m)])
        mesh = fan_mesh([0, 0, 0], ring_pts)
        ring, w = gl.mean_value_weights(mesh, 0)
        wn = w / w.sum()
        # interpolating f(x, y) = x (and y) reproduces the center exactly
        fx = (wn * mesh.positions[ring, 0]).sum()
        fy = (wn * mesh.positions[ring, 1]).sum()
        assert fx == pytest.approx(0.0, abs=1e-12)
        assert fy == pytest.approx(0.0, abs=1e-12)


def test_weights_halve_under_scaling():
    ring_pts = regular_ring(6) + np.array([0.1, -0.07, 0.3])
    mesh = fan_mesh([0, 0, 0.25], ring_pts)
    _, w1 = gl.mean_value_weights(mesh, 0)
    scaled = mesh.copy()
    scaled.positions = scaled.positions * 2.0
    _, w2 = gl.mean_value_weights(scaled, 0)
    assert np.allclose(w2, 0.5 * w1, rtol=1e-12)
    assert np.allclose(w2 / w2.sum(), w1 / w1.sum(), rtol=1e-12)


def test_weights_require_closed_ring():
    mesh = fan_mesh([0, 0, 0], regular_ring(6), close=False)
    with pytest.raises(gl.InvalidArgumentError):
        gl.mean_value_weights(mesh, 0)


def test_weights_flagged_fallback_on_collinear_ring():
    # consecutive neighbor directions exactly opposite: angle of pi at the center
    ring_pts = np.array([[1, 0, 0], [-1, 0, 0], [0, -1, 0]], dtype=float)
    mesh = fan_mesh([0, 0, 0], ring_pts)
    with pytest.warns(gl.errors.FlaggedWeightWarning):
        _, w = gl.mean_value_weights(mesh, 0)
    assert np.isfinite(w).all()
    assert (w > 0).all()


def test_solve_uv_flat_identity(lifted_21):
    flat = lifted_21.copy()
    flat.positions[:, 2] = 0.0
    out = gl.solve_uv(flat, gl.HarmonicSolveParams(max_iterations=1))
    # flat input uv is already harmonic: one sweep moves nothing
    assert np.allclose(out.uv, flat.uv, atol=1e-12)


def test_solve_uv_single_free_vertex_hexagon_centroid():
    ring_pts = regular_ring(6, radius=2.0) + np.array([3.0, 3.0, 0.0])
    mesh = fan_mesh([3.2, 2.9, 0.5], ring_pts)
    mesh.lens_id[0] = 0  # only the center is free
    mesh.uv = np.random.default_rng(0).uniform(size=mesh.uv.shape)
    fixed_uv = mesh.uv[1:].copy()
    out = gl.solve_uv(mesh)
    ring, w = gl.mean_value_weights(mesh, 0)
    expect = (w[:, None] * mesh.uv[ring]).sum(axis=0) / w.sum()
    assert np.allclose(out.uv[0], expect, atol=1e-12)
    assert np.array_equal(out.uv[1:], fixed_uv)


def test_solve_uv_matches_direct_solve(lifted_21):
    gs = gl.solve_uv(lifted_21, gl.HarmonicSolveParams(tolerance=1e-9, max_iterations=5000))
    direct = gl.solve_uv_direct(lifted_21)
    assert np.abs(gs.uv - direct.uv).max() < 1e-6


def test_solve_uv_maximum_principle(lifted_21):
    out = gl.solve_uv(lifted_21)
    free = lifted_21.lens_id != gl.NO_LENS
    fixed_uv = lifted_21.uv[~free]
    for c in range(2):
        assert out.uv[free, c].max() <= fixed_uv[:, c].max() + 1e-12
        assert out.uv[free, c].min() >= fixed_uv[:, c].min() - 1e-12


def test_solve_uv_outside_rois_untouched(lifted_21):
    out = gl.solve_uv(lifted_21)
    outside = lifted_21.lens_id == gl.NO_LENS
    assert np.array_equal(out.uv[outside], lifted_21.uv[outside])


def test_solve_uv_idempotent(lifted_21):
    params = gl.HarmonicSolveParams(tolerance=1e-8, max_iterations=4000)
    once = gl.solve_uv(lifted_21, params)
    twice = gl.solve_uv(once, params)
    assert np.abs(twice.uv - once.uv).max() <= params.tolerance


def test_solve_uv_nonconvergence_warns(lifted_21):
    with pytest.warns(gl.ConvergenceWarning):
        gl.solve_uv(lifted_21, gl.HarmonicSolveParams(tolerance=1e-12, max_iterations=2))


def test_solve_uv_outer_only_mode(lifted_21):
    out = gl.solve_uv(lifted_21, dirichlet="outer_only")
    outer = lifted_21.boundary_flags == gl.OUTER_BOUNDARY
    assert np.array_equal(out.uv[outer], lifted_21.uv[outer])
    moved = np.abs(out.uv - lifted_21.uv).max(axis=1) > 0
    assert moved[lifted_21.lens_id != gl.NO_LENS].any()


def test_solve_params_validation():
    with pytest.raises(gl.InvalidArgumentError):
        gl.HarmonicSolveParams(max_iterations=0)
    with pytest.raises(gl.InvalidArgumentError):
        gl.HarmonicSolveParams(tolerance=0.0)


@given(z=st.floats(0.0, 3.0))
@settings(max_examples=15, deadline=None)
def test_free_vertex_in_neighbor_hull(z):
    ring_pts = regular_ring(5, radius=1.5, z=0.0) + np.array([2.0, 2.0, 0.0])
    mesh = fan_mesh([2.1, 1.9, z], ring_pts)
    mesh.lens_id[0] = 0
    mesh.uv = np.abs(np.random.default_rng(1).uniform(size=mesh.uv.shape))
    out = gl.solve_uv(mesh)
    lo = mesh.uv[1:].min(axis=0) - 1e-12
    hi = mesh.uv[1:].max(axis=0) + 1e-12
    assert ((out.uv[0] >= lo) & (out.uv[0] <= hi)).all()
