import json
import subprocess
import sys

import pytest

from holmgren.cli import main


def run(tmp_path, *argv, config=None):
    args = list(argv) + ["--out", str(tmp_path)]
    if config is not None:
        cfg = tmp_path / "cfg.json"
        cfg.write_text(config if isinstance(config, str) else json.dumps(config))
        args += ["--config", str(cfg)]
    code = main(args)
    return code, json.loads((tmp_path / "report.json").read_text())


def test_factorize3d_passes(tmp_path):
    code, rep = run(tmp_path, "factorize3d")
    assert code == 0 and rep["passed"]
    assert (tmp_path / "products.json").exists()


def test_kernel_verify_passes_and_writes_csv(tmp_path):
    code, rep = run(tmp_path, "kernel-verify", config={"grid_n": 8})
    assert code == 0 and rep["passed"]
    assert (tmp_path / "kernel_decay.csv").read_text().startswith("#")


def test_malformed_json_exits_2(tmp_path):
    code, rep = run(tmp_path, "schwarz", "ellipse", config="{not json")
    assert code == 2 and rep["error"]["field"] == "--config"


def test_unknown_field_exits_2(tmp_path):
    code, rep = run(tmp_path, "schwarz", "ellipse", config={"a": 2, "bogus": 1})
    assert code == 2 and rep["error"]["field"] == "/bogus"


def test_bad_axes_exit_2(tmp_path):
    code, _ = run(tmp_path, "schwarz", "ellipse", config={"a": 1, "b": 2})
    assert code == 2


def test_tolerance_override_fails_check(tmp_path):
    code, rep = run(tmp_path, "schwarz", "ellipse", "--tol", "focus_mismatch=100")
    assert code == 1 and not rep["passed"]
    assert any(c["verdict"] == "fail" for c in rep["checks"])


@pytest.mark.parametrize("argv, cfg", [
    (["schwarz", "ellipse"], {"a": 1, "b": 1}),
    (["x1field"], {"u": "x1^3*x2", "profile": "lex"}),
    (["almansi", "--dim", "2"], {"count": 5}),
    (["quadcheck"], None),
])
def test_exit_code_agrees_with_report(tmp_path, argv, cfg):
    code, rep = run(tmp_path, *argv, config=cfg)
    assert code == (0 if rep["passed"] else 1)
    assert rep["passed"] == all(c["verdict"] == "pass" for c in rep["checks"])


def test_reports_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        d.mkdir()
        run(d, "almansi", "--dim", "3", config={"count": 5, "degree": 6})
    ra = json.loads((a / "report.json").read_text())
    rb = json.loads((b / "report.json").read_text())
    ra.pop("wall_time"), rb.pop("wall_time")
    assert ra == rb


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "holmgren", "factorize3d", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "PASS" in proc.stdout
