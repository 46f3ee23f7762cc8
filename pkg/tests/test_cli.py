import json
import re
import subprocess
import sys

import pytest

from qrdyn.cli import parse_config, run
from qrdyn.errors import UsageError


def _qrdyn(args, cwd):
    return subprocess.run([sys.executable, "-m", "qrdyn", *args],
                          cwd=cwd, capture_output=True, text=True)


# --- configuration parsing ---------------------------------------------------

def test_parse_winding_config():
    cfg = parse_config(["classify", "--map", "winding", "--k", "3",
                        "--box", "-2,2", "--res", "64", "--dim", "3"])
    assert cfg.map_name == "winding"
    assert cfg.dim == 3
    assert cfg.resolution == 64
    assert list(cfg.box.low) == [-2.0, -2.0, -2.0]
    assert cfg.map_instance.metadata.degree == 3


def test_parse_rejects_injective_winding():
    with pytest.raises(UsageError):
        parse_config(["classify", "--map", "winding", "--k", "1"])


def test_config_file_flag_precedence(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("map = zsquared\nhorizon = 100\nres = 32\n")
    cfg = parse_config(["classify", "--config", str(cfgfile), "--horizon", "200"])
    assert cfg.horizon == 200  # flag wins
    assert cfg.resolution == 32  # file fills the rest


def test_config_file_unknown_key(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("map = zsquared\nwibble = 3\n")
    with pytest.raises(UsageError):
        parse_config(["classify", "--config", str(cfgfile)])


def test_threads_env_fallback(monkeypatch):
    monkeypatch.setenv("QRDYN_THREADS", "3")
    cfg = parse_config(["classify", "--map", "zsquared"])
    assert cfg.threads == 3
    cfg2 = parse_config(["classify", "--map", "zsquared", "--threads", "2"])
    assert cfg2.threads == 2


def test_parse_per_axis_box():
    cfg = parse_config(["classify", "--map", "zorich",
                        "--box", "-2,2,-2,2,0,3", "--res", "16"])
    assert list(cfg.box.low) == [-2.0, -2.0, 0.0]
    assert list(cfg.box.high) == [2.0, 2.0, 3.0]


def test_parse_complex_poly_coeffs():
    cfg = parse_config(["classify", "--map", "complex_poly", "--coeffs", "1:0,0:0,-1:2"])
    assert cfg.map_instance.metadata.degree == 2


def test_map_parameters_from_config_file(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("map = conjugated_quadratic\nlambda = 3\n")
    cfg = parse_config(["classify", "--config", str(cfgfile)])
    assert cfg.lam == 3.0
    assert "stretch=3.0" in cfg.map_instance.metadata.description
    cfgfile2 = tmp_path / "run2.cfg"
    cfgfile2.write_text("map = complex_poly\ncoeffs = 2:0,0:0,1:0,0:0\n")
    cfg2 = parse_config(["classify", "--config", str(cfgfile2)])
    assert cfg2.map_instance.metadata.degree == 3


def test_verify_requires_suite():
    with pytest.raises(UsageError):
        parse_config(["verify", "--map", "zsquared"])


def test_missing_command_is_usage_error():
    assert run([]) == 1


# --- command behavior --------------------------------------------------------

def test_classify_outputs(tmp_path):
    res = _qrdyn(["classify", "--map", "zsquared", "--res", "48",
                  "--horizon", "30", "--out", "out"], tmp_path)
    assert res.returncode == 0, res.stderr
    out = tmp_path / "out"
    for name in ("grid.qrg", "escape.pgm", "class.ppm", "report.json", "report.csv"):
        assert (out / name).exists()
    assert (out / "figures" / "escape_map.png").exists()
    report = json.loads((out / "report.json").read_text())
    assert report["wall_clock_seconds"] > 0
    assert report["map"]["name"] == "zsquared"


def test_classify_zorich_holder_is_runtime_error(tmp_path):
    res = _qrdyn(["classify", "--map", "zorich", "--cert", "holder", "--out", "o"], tmp_path)
    assert res.returncode == 1
    assert "infinity" in res.stderr


def test_classify_injective_winding_exits_one(tmp_path):
    res = _qrdyn(["classify", "--map", "winding", "--k", "1", "--out", "o"], tmp_path)
    assert res.returncode == 1


def test_render_round_trip(tmp_path):
    r1 = _qrdyn(["classify", "--map", "zsquared", "--res", "48", "--horizon", "30",
                 "--out", "c", "--no-figures"], tmp_path)
    assert r1.returncode == 0, r1.stderr
    r2 = _qrdyn(["render", "--grid", "c/grid.qrg", "--out", "r", "--no-figures"], tmp_path)
    assert r2.returncode == 0, r2.stderr
    assert (tmp_path / "c" / "escape.pgm").read_bytes() == (tmp_path / "r" / "escape.pgm").read_bytes()
    assert (tmp_path / "c" / "class.ppm").read_bytes() == (tmp_path / "r" / "class.ppm").read_bytes()


def test_verify_sharpness_suite(tmp_path):
    res = _qrdyn(["verify", "--suite", "sharpness", "--map", "winding", "--k", "3",
                  "--box", "-2,2", "--res", "24", "--horizon", "40",
                  "--out", "v", "--no-figures"], tmp_path)
    assert res.returncode == 0, res.stderr + res.stdout
    report = json.loads((tmp_path / "v" / "report.json").read_text())
    names = {c["name"]: c["passed"] for c in report["checks"]}
    assert names["certificate-rejected"] is True
    assert names["no-escaping-cells"] is True


def test_verify_polyqr_suite(tmp_path):
    res = _qrdyn(["verify", "--suite", "polyqr", "--map", "zsquared", "--res", "96",
                  "--horizon", "60", "--samples", "2000", "--out", "v",
                  "--no-figures"], tmp_path)
    assert res.returncode == 0, res.stderr + res.stdout
    assert "[PASS]" in res.stdout


def test_verify_failure_exits_two(tmp_path):
    # a boundary oscillation threshold above the chordal diameter cannot be met
    res = _qrdyn(["verify", "--suite", "polyqr", "--map", "zsquared", "--res", "64",
                  "--horizon", "40", "--samples", "500", "--delta-eq", "1.5",
                  "--out", "v", "--no-figures"], tmp_path)
    assert res.returncode == 2
    assert "[FAIL]" in res.stdout


def test_verify_essential_suite(tmp_path):
    res = _qrdyn(["verify", "--suite", "essential", "--map", "zorich",
                  "--out", "v", "--no-figures"], tmp_path)
    assert res.returncode == 0, res.stderr
    report = json.loads((tmp_path / "v" / "report.json").read_text())
    probe = next(c for c in report["checks"] if c["name"] == "unbounded-boundary")
    assert probe["parameters"]["certified"] is False


def test_estimate_command(tmp_path):
    res = _qrdyn(["estimate", "--map", "winding", "--k", "3", "--dim", "3",
                  "--box", "0.25,2", "--samples", "500", "--out", "e"], tmp_path)
    assert res.returncode == 0, res.stderr
    report = json.loads((tmp_path / "e" / "report.json").read_text())
    est = report["estimates"]["dilatation"]
    assert 2.85 <= est["K_I_est"] <= 3.15


def test_thread_count_does_not_change_bytes(tmp_path):
    a = _qrdyn(["classify", "--map", "zsquared", "--res", "64", "--horizon", "40",
                "--threads", "1", "--out", "t1", "--no-figures"], tmp_path)
    b = _qrdyn(["classify", "--map", "zsquared", "--res", "64", "--horizon", "40",
                "--threads", "4", "--out", "t4", "--no-figures"], tmp_path)
    assert a.returncode == 0 and b.returncode == 0
    for name in ("grid.qrg", "escape.pgm", "class.ppm"):
        assert (tmp_path / "t1" / name).read_bytes() == (tmp_path / "t4" / name).read_bytes()
    strip = lambda s: re.sub(r'"wall_clock_seconds": [^,\n]+', "", s)
    assert strip((tmp_path / "t1" / "report.json").read_text()) == \
        strip((tmp_path / "t4" / "report.json").read_text())
