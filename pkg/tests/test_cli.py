"""CLI registry, persistence, reproducibility, exit codes."""

import json
import subprocess
import sys

import pytest

from vrjplab.cli import ExperimentConfig, main, run
from vrjplab.experiments import get_experiment, list_experiments


def test_registry_contents():
    names = [spec.name for spec in list_experiments()]
    assert names == sorted(names)
    assert "matsumoto_yor_kernel" in names
    assert "dos_sweep" in names
    assert len(names) == 14
    for spec in list_experiments():
        assert spec.description
        assert spec.identity


def test_unknown_experiment():
    with pytest.raises(KeyError):
        get_experiment("nope")


def test_run_writes_results_and_manifest(tmp_path):
    cfg = ExperimentConfig("mean_t1_quadrature", seed=5,
                           params={"e_list": [1.0, 4.0]}, output_dir=tmp_path)
    manifest = run(cfg)
    assert manifest.passed
    out = tmp_path / "mean_t1_quadrature"
    assert (out / "results.csv").exists()
    data = json.loads((out / "manifest.json").read_text())
    assert data["passed"] is True
    assert data["seed"] == 5
    assert data["result_files"] == ["results.csv"]
    assert data["artifact_version"]
    header = (out / "results.csv").read_text().splitlines()[0]
    assert header.startswith("E,")


def test_run_reproducibility_byte_identical(tmp_path):
    cfg1 = ExperimentConfig("null_calibration", seed=9,
                            params={"reps": 20, "n": 1000}, output_dir=tmp_path / "a")
    cfg2 = ExperimentConfig("null_calibration", seed=9,
                            params={"reps": 20, "n": 1000}, output_dir=tmp_path / "b")
    run(cfg1)
    run(cfg2)
    c1 = (tmp_path / "a/null_calibration/results.csv").read_bytes()
    c2 = (tmp_path / "b/null_calibration/results.csv").read_bytes()
    assert c1 == c2


def test_run_rejects_unknown_param(tmp_path):
    cfg = ExperimentConfig("mean_t1_quadrature", seed=1,
                           params={"bogus": 1}, output_dir=tmp_path)
    with pytest.raises(ValueError, match="unknown parameter"):
        run(cfg)


def test_main_list_and_exit_codes(tmp_path, capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert "dos_sweep" in out and "checks:" in out

    rc = main(["run", "--name", "no_such", "--out", str(tmp_path / "none")])
    assert rc == 2
    assert not (tmp_path / "none").exists()   # nothing written on failure

    rc = main(["run", "--name", "mean_t1_quadrature", "--seed", "3",
               "--param", "e_list=[1.0]", "--out", str(tmp_path)])
    assert rc == 0

    rc = main(["run", "--name", "mean_t1_quadrature",
               "--param", "notkeyvalue", "--out", str(tmp_path)])
    assert rc == 2


def test_output_env_var(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("VRJPLAB_OUT", str(tmp_path / "envout"))
    rc = main(["run", "--name", "mean_t1_quadrature", "--seed", "1",
               "--param", "e_list=[4.0]"])
    assert rc == 0
    assert (tmp_path / "envout/mean_t1_quadrature/results.csv").exists()


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "vrjplab.cli", "list"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "renewal_mean" in proc.stdout
