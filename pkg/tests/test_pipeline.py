from pathlib import Path

import numpy as np
import pytest

import geolens as gl
from geolens import cli
from geolens.pipeline import PipelineConfig, load_config, run_lens_job, run_pipeline
from tests.conftest import checkerboard

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def write_input(tmp_path, width=160, height=160):
    img = checkerboard(width, height, 16, offset=8)
    path = tmp_path / "input.png"
    gl.save_image(img, path)
    return path, img


def small_lens_config(tmp_path, h0=40.0, **kwargs):
    inp, _ = write_input(tmp_path)
    return PipelineConfig(
        input_path=str(inp),
        output_path=str(tmp_path / "out.png"),
        rows=33,
        cols=33,
        lenses=[gl.LensSpec(shape=gl.Circle(center=(80, 80), radius=40), h0=h0)],
        **kwargs,
    )


def test_identity_pipeline(tmp_path):
    cfg = small_lens_config(tmp_path, h0=0.0)
    result, written = run_pipeline(cfg)
    img = gl.load_image(cfg.input_path)
    rms = np.sqrt(
        np.mean((result.image.pixels[:, :, :3].astype(float) - img.pixels[:, :, :3]) ** 2)
    ) / 255.0
    assert rms < 1.0 / 255.0
    assert result.report.iterations == 1
    assert Path(cfg.output_path).exists()


def test_pipeline_artifacts(tmp_path):
    cfg = small_lens_config(
        tmp_path, emit_heatmap=True, emit_energy_csv=True, emit_mesh_dump=True
    )
    result, written = run_pipeline(cfg)
    names = {p.name for p in written}
    assert names == {"out.png", "out.heatmap.png", "out.energy.csv", "out.mesh.txt"}
    csv = (tmp_path / "out.energy.csv").read_text().splitlines()
    assert csv[0] == "iteration,energy,max_vertex_move,flips"
    assert len(csv) == result.report.iterations + 1
    mesh = gl.load_mesh(tmp_path / "out.mesh.txt")
    assert mesh.n_vertices == result.mesh_out.n_vertices


def test_pipeline_deterministic(tmp_path):
    cfg = small_lens_config(tmp_path, h0=30.0)
    run_pipeline(cfg)
    first = Path(cfg.output_path).read_bytes()
    run_pipeline(cfg)
    assert Path(cfg.output_path).read_bytes() == first


def test_pipeline_stage_timings_cover_wall(tmp_path):
    import time

    cfg = small_lens_config(tmp_path)
    t0 = time.perf_counter()
    result, _ = run_pipeline(cfg)
    wall = time.perf_counter() - t0
    total = sum(result.stage_seconds.values())
    assert total <= wall
    assert total >= 0.8 * wall


def test_pipeline_validates_before_touching_disk(tmp_path):
    cfg = PipelineConfig(
        input_path=str(tmp_path / "missing.png"),
        output_path=str(tmp_path / "out.png"),
        lenses=[],
    )
    with pytest.raises(gl.InvalidArgumentError):
        run_pipeline(cfg)
    assert not (tmp_path / "out.png").exists()


def test_pipeline_removes_partial_artifacts_on_failure(tmp_path, monkeypatch):
    import geolens.pipeline as pl

    cfg = small_lens_config(tmp_path, emit_heatmap=True, emit_mesh_dump=True)

    def broken_dump(mesh, path):
        raise OSError("disk full")

    monkeypatch.setattr(pl, "dump_mesh", broken_dump)
    with pytest.raises(OSError):
        run_pipeline(cfg)
    assert not Path(cfg.output_path).exists()
    assert not (tmp_path / "out.heatmap.png").exists()


def test_pipeline_missing_input_is_io_error(tmp_path):
    cfg = PipelineConfig(
        input_path=str(tmp_path / "missing.png"),
        output_path=str(tmp_path / "out.png"),
        lenses=[gl.LensSpec(shape=gl.Circle(center=(10, 10), radius=5))],
    )
    with pytest.raises(gl.ImageIOError):
        run_pipeline(cfg)


def test_pipeline_baseline_mode(tmp_path):
    cfg = small_lens_config(tmp_path)
    cfg.baseline = "fisheye"
    result, _ = run_pipeline(cfg)
    assert result.distortion.total > 0
    assert (result.image.pixels[:, :, 3] == 255).any()


def test_factor_cache_reuse(tmp_path):
    _, img = write_input(tmp_path)
    lens = gl.LensSpec(shape=gl.Circle(center=(80, 80), radius=40), h0=40.0)
    cache = {}
    cfg1 = PipelineConfig(rows=33, cols=33, lenses=[lens], alpha=0.0)
    r1 = run_lens_job(img, cfg1, factor_cache=cache)
    assert not r1.factor_from_cache
    assert r1.factor_seconds > 0
    cfg2 = PipelineConfig(rows=33, cols=33, lenses=[lens], alpha=0.5)
    r2 = run_lens_job(img, cfg2, factor_cache=cache)
    assert r2.factor_from_cache
    assert r2.factor_seconds == 0.0
    # changing h0 changes the weights: the cache must not be reused
    lens3 = gl.LensSpec(shape=gl.Circle(center=(80, 80), radius=40), h0=41.0)
    cfg3 = PipelineConfig(rows=33, cols=33, lenses=[lens3], alpha=0.5)
    r3 = run_lens_job(img, cfg3, factor_cache=cache)
    assert not r3.factor_from_cache


def test_load_config_round_trip(tmp_path):
    poly = tmp_path / "poly.txt"
    poly.write_text("10 10\n60 10\n35 50\n")
    cfg_text = f"""
[image]
input = in.png
output = out.png

[mesh]
rows = 41
cols = 43

[solver]
alpha = 0.25
epsilon = 0.0005
boundary = free

[emit]
heatmap = yes

[lens]
shape = circle
center = 80 90
radius = 30
h0 = 25
profile = sphere

[lens.2]
shape = polygon
points_file = {poly}
h0 = 10
"""
    path = tmp_path / "cfg.ini"
    path.write_text(cfg_text)
    cfg = load_config(path)
    assert (cfg.rows, cfg.cols) == (41, 43)
    assert cfg.alpha == 0.25
    assert cfg.boundary_mode == "free"
    assert cfg.emit_heatmap
    assert len(cfg.lenses) == 2
    assert isinstance(cfg.lenses[0].shape, gl.Circle)
    assert cfg.lenses[0].profile == "sphere"
    assert isinstance(cfg.lenses[1].shape, gl.Polygon)


def test_load_config_rejects_garbage(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[solver]\nalpha = not_a_number\n")
    with pytest.raises(gl.InvalidArgumentError):
        load_config(path)


def test_bundled_configs_parse():
    configs = sorted(CONFIG_DIR.glob("*.ini"))
    assert len(configs) >= 4
    for path in configs:
        cfg = load_config(path)
        assert cfg.lenses, path


def test_cli_identity_run(tmp_path, capsys):
    inp, _ = write_input(tmp_path)
    out = tmp_path / "out.png"
    code = cli.main(
        [
            "--input", str(inp),
            "--output", str(out),
            "--mesh", "17", "17",
            "--circle", "80", "80", "40", "0",
        ]
    )
    assert code == 0
    assert out.exists()
    text = capsys.readouterr().out
    assert "stage" in text and "solve:" in text


def test_cli_invalid_lens_is_config_error(tmp_path, capsys):
    inp, _ = write_input(tmp_path)
    out = tmp_path / "out.png"
    code = cli.main(
        ["--input", str(inp), "--output", str(out), "--circle", "80", "80", "-5", "10"]
    )
    assert code == cli.EXIT_CONFIG
    assert not out.exists()


def test_cli_missing_input_is_io_error(tmp_path):
    code = cli.main(
        [
            "--input", str(tmp_path / "none.png"),
            "--output", str(tmp_path / "out.png"),
            "--circle", "80", "80", "40", "10",
        ]
    )
    assert code == cli.EXIT_IO


def test_cli_no_lens_is_config_error(tmp_path):
    inp, _ = write_input(tmp_path)
    code = cli.main(["--input", str(inp), "--output", str(tmp_path / "o.png")])
    assert code == cli.EXIT_CONFIG


def test_cli_baseline_flag(tmp_path):
    inp, _ = write_input(tmp_path)
    out = tmp_path / "out.png"
    code = cli.main(
        [
            "--input", str(inp),
            "--output", str(out),
            "--mesh", "17", "17",
            "--circle", "80", "80", "40", "30",
            "--baseline", "zoomin",
        ]
    )
    assert code == 0
    assert out.exists()


def test_cli_profile_and_emit_flags(tmp_path):
    inp, _ = write_input(tmp_path)
    out = tmp_path / "out.png"
    code = cli.main(
        [
            "--input", str(inp),
            "--output", str(out),
            "--mesh", "17", "17",
            "--circle", "80", "80", "40", "20",
            "--profile", "sphere",
            "--alpha", "0.2",
            "--epsilon", "0.01",
            "--boundary", "free",
            "--emit-heatmap",
            "--emit-energy-csv",
        ]
    )
    assert code == 0
    assert (tmp_path / "out.heatmap.png").exists()
    assert (tmp_path / "out.energy.csv").exists()
