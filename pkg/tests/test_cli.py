import json

import pytest

from gtorsion import cli, report
from gtorsion.errors import SingularMetric


def _run(tmp_path, name, *extra, monkeypatch=None):
    out = tmp_path / name
    code = cli.main(["run", "--scenario", "s3-reeb", "--scenario", "torus-skew", "--points", "3",
                     "--probes", "10", "--out", str(out), *extra])
    return code, out


def test_run_writes_report_and_succeeds(tmp_path):
    code, out = _run(tmp_path, "a.json")
    assert code == cli.EXIT_OK
    data = json.loads(out.read_text())
    assert data["schema_version"] == 1 and data["pass"] is True
    assert [s["id"] for s in data["scenarios"]] == ["s3-reeb", "torus-skew"]
    assert len(data["scenarios"][0]["points"]) == 3


def test_reports_are_byte_identical_except_timestamp(tmp_path, monkeypatch):
    _, a = _run(tmp_path, "a.json")
    monkeypatch.setenv("GTORSION_THREADS", "3")
    _, b = _run(tmp_path, "b.json")
    da, db = json.loads(a.read_text()), json.loads(b.read_text())
    assert report.dumps(report.strip_timestamp(da)) == report.dumps(report.strip_timestamp(db))


def test_check_failure_exit_code(tmp_path):
    code, _ = _run(tmp_path, "c.json", "--tol", "non_minimal_min_residual=100")
    assert code == cli.EXIT_CHECK_FAILED


@pytest.mark.parametrize("args", [
    ["run", "--scenario", "nope"],
    ["run", "--fd-step", "0.5"],
    ["run", "--points", "0"],
    ["run", "--tol", "bogus=1"],
    ["run", "--tol", "identity"],
    ["run", "--suites", "identity,nothing"],
    ["run", "--backend", "spectral"],
    ["explain", "no_such_check"],
    ["frobnicate"],
])
def test_configuration_errors(args):
    assert cli.main(args) == cli.EXIT_CONFIG


def test_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scenarios": {"s3-reeb": {"points": 2, "tolerances": {"minimality": 1e-5}}}}))
    out = tmp_path / "r.json"
    assert cli.main(["run", "--scenario", "s3-reeb", "--config", str(cfg), "--probes", "5", "--out", str(out)]) == 0
    entry = json.loads(out.read_text())["scenarios"][0]
    assert len(entry["points"]) == 2 and entry["tolerances"]["minimality"] == 1e-5
    cfg.write_text(json.dumps({"scenarios": {"s3-reeb": {"colour": "red"}}}))
    assert cli.main(["run", "--config", str(cfg)]) == cli.EXIT_CONFIG


def test_numerical_error_exit_code(monkeypatch, capsys):
    def boom(_config):
        raise SingularMetric("metric is singular", (0.0, 1.0))

    monkeypatch.setattr(report, "run", boom)
    assert cli.main(["run", "--scenario", "s3-reeb"]) == cli.EXIT_NUMERICAL
    assert "(0.0, 1.0)" in capsys.readouterr().err


def test_list_and_explain(capsys):
    assert cli.main(["list"]) == 0
    listing = capsys.readouterr().out
    assert "s7-hopf" in listing and "non_minimal" in listing
    assert cli.main(["explain", "min_residual"]) == 0
    assert "g~-orthonormal" in capsys.readouterr().out
    assert cli.main(["explain"]) == 0
    assert "sff_oracle" in capsys.readouterr().out


def test_numpy_kernel_path_gives_the_same_verdict(tmp_path):
    import os
    import subprocess
    import sys

    out = tmp_path / "np.json"
    env = dict(os.environ, GTORSION_DISABLE_NUMBA="1")
    proc = subprocess.run(
        [sys.executable, "-m", "gtorsion.cli", "run", "--scenario", "s3-reeb", "--points", "2",
         "--probes", "5", "--out", str(out)],
        env=env, capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    data = json.loads(out.read_text())
    assert data["environment"]["kernels"] == "numpy" and data["pass"]
