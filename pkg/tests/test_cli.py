import json
from pathlib import Path

import numpy as np
import pytest

from noisewarp import read_grid
from noisewarp.cli import main


def _tree_bytes(root: Path) -> dict:
    return {
        p.relative_to(root).as_posix(): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def _run(args):
    return main([str(a) for a in args])


def test_gen_and_manifest(tmp_path):
    out = tmp_path / "g"
    assert _run(["gen", "--width", 8, "--height", 6, "--seed", 3,
                 "--count", 2, "--out", out]) == 0
    g = read_grid(out / "noise_0000.grid")
    assert (g.width, g.height) == (8, 6)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["subcommand"] == "gen"
    assert manifest["params"]["seed"] == 3
    assert "noise_0001.grid" in manifest["outputs"]


def test_upsample_cmd(tmp_path):
    gdir, udir = tmp_path / "g", tmp_path / "u"
    _run(["gen", "--width", 4, "--height", 4, "--seed", 1, "--out", gdir])
    assert _run(["upsample", "--grid", gdir / "noise_0000.grid", "--n", 4,
                 "--seed", 2, "--out", udir]) == 0
    up = read_grid(udir / "upsampled.grid")
    assert up.level == 2


def test_warp_zero_flow_identity(tmp_path):
    gdir, wdir = tmp_path / "g", tmp_path / "w"
    _run(["gen", "--width", 8, "--height", 8, "--seed", 1, "--out", gdir])
    assert _run(["warp", "--grid", gdir / "noise_0000.grid",
                 "--synthetic", "translate:dx=0,dy=0", "--frames", 2,
                 "--k", 2, "--s", 2, "--seed", 9, "--out", wdir]) == 0
    g0 = read_grid(gdir / "noise_0000.grid")
    for i in range(3):
        gi = read_grid(wdir / f"frame_{i:04d}.grid")
        assert np.allclose(gi.data, g0.data, atol=1e-5)
        mask = np.load(wdir / f"mask_{i:04d}.npy")
        assert not mask.any()


def test_warp_flo_directory(tmp_path):
    from noisewarp import make_synthetic_flow, write_flo

    gdir, fdir, wdir = tmp_path / "g", tmp_path / "f", tmp_path / "w"
    fdir.mkdir()
    _run(["gen", "--width", 8, "--height", 8, "--seed", 1, "--out", gdir])
    step = make_synthetic_flow("translate", {"dx": 1.0, "dy": 0.0}, 8, 8)
    write_flo(step, fdir / "0001.flo")
    write_flo(step, fdir / "0002.flo")
    assert _run(["warp", "--grid", gdir / "noise_0000.grid", "--flows", fdir,
                 "--k", 1, "--s", 1, "--seed", 9, "--out", wdir]) == 0
    g0 = read_grid(gdir / "noise_0000.grid")
    g2 = read_grid(wdir / "frame_0002.grid")
    assert np.allclose(g2.data[:, :6], g0.data[:, 2:], atol=1e-5)
    manifest = json.loads((wdir / "manifest.json").read_text())
    assert len(manifest["inputs"]) == 3  # grid + two flows


def test_baseline_scheme_and_prior(tmp_path):
    gdir = tmp_path / "g"
    _run(["gen", "--width", 8, "--height", 8, "--seed", 1, "--out", gdir])
    bdir = tmp_path / "b"
    assert _run(["baseline", "--grid", gdir / "noise_0000.grid",
                 "--scheme", "bilinear", "--synthetic", "translate:dx=0.5",
                 "--frames", 2, "--seed", 4, "--out", bdir]) == 0
    assert (bdir / "frame_0002.grid").exists()
    pdir = tmp_path / "p"
    assert _run(["baseline", "--prior", "pyoco_mixed", "--width", 8,
                 "--height", 8, "--frames", 3, "--alpha", "1.0",
                 "--seed", 4, "--out", pdir]) == 0
    assert (pdir / "frame_0002.grid").exists()


def test_validate_exit_codes(tmp_path):
    ok = _run(["validate", "--method", "intnoise", "--trials", 4000,
               "--k", 2, "--s", 2, "--seed", 0, "--out", tmp_path / "v1"])
    assert ok == 0
    report = json.loads((tmp_path / "v1" / "report.json").read_text())
    assert report["passed"] is True
    bad = _run(["validate", "--method", "bilinear", "--trials", 4000,
                "--k", 2, "--s", 2, "--seed", 0, "--out", tmp_path / "v2"])
    assert bad == 3
    report = json.loads((tmp_path / "v2" / "report.json").read_text())
    failed = {c["name"] for c in report["checks"] if not c["passed"]}
    assert "variance_preserved" in failed


def test_covariance_cmd(tmp_path):
    out = tmp_path / "c"
    assert _run(["covariance", "--method", "intnoise", "--trials", 3000,
                 "--k", 2, "--s", 2, "--seed", 0, "--out", out]) == 0
    data = json.loads((out / "covariance.json").read_text())
    assert "covariance" in data and "cross_covariance_far" in data
    lines = (out / "covariance.csv").read_text().splitlines()
    assert lines[0] == "matrix,row,col,value"
    assert len(lines) > 16


def test_ablate_cmd(tmp_path):
    out = tmp_path / "a"
    assert _run(["ablate_k", "--synthetic", "zoom:factor=1.2", "--frames", 2,
                 "--width", 24, "--height", 24, "--k-list", "0,1",
                 "--s", 2, "--seed", 0, "--out", out]) == 0
    lines = (out / "ablate_k.csv").read_text().splitlines()
    assert lines[0] == "k,frame,undefined_ratio"
    assert len(lines) == 1 + 2 * 2


def test_bench_cmd(tmp_path):
    out = tmp_path / "b"
    assert _run(["bench", "--frames", 2, "--width", 16, "--height", 16,
                 "--k-list", "0,1", "--s-list", "1,2", "--seed", 0,
                 "--out", out]) == 0
    lines = (out / "bench.csv").read_text().splitlines()
    assert lines[0].startswith("k,s,frames,wall_per_frame")
    assert len(lines) == 1 + 4


def test_replay_bit_identical(tmp_path):
    gdir = tmp_path / "g"
    _run(["gen", "--width", 8, "--height", 8, "--seed", 1, "--out", gdir])
    wdir = tmp_path / "w"
    _run(["warp", "--grid", gdir / "noise_0000.grid",
          "--synthetic", "swirl:strength=1.5", "--frames", 2,
          "--k", 2, "--s", 2, "--seed", 9, "--out", wdir])
    rdir = tmp_path / "r"
    assert _run(["replay", wdir / "manifest.json", "--out", rdir]) == 0
    assert _tree_bytes(wdir) == _tree_bytes(rdir)


def test_replay_rejects_foreign_manifest(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"tool": "other"}))
    assert _run(["replay", p, "--out", tmp_path / "o"]) == 1


def test_missing_input_is_data_error(tmp_path):
    assert _run(["upsample", "--grid", tmp_path / "none.grid", "--n", 2,
                 "--seed", 0, "--out", tmp_path / "o"]) == 1


def test_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        _run(["warp"])  # missing required flags
    assert exc.value.code == 2
