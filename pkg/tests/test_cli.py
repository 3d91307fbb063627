import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from ifire.cli import main
from ifire.io import load_model_config

MODELS = Path(__file__).resolve().parents[1] / "demos" / "models"


def cli(*args):
    return main([str(a) for a in args])


def test_simulate_outputs(tmp_path):
    assert cli("simulate", "--model", MODELS / "peskin.json", "--out", tmp_path) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["status"] == "synchronized"
    assert summary["sync_event"] == 2
    assert summary["sync_time"] == pytest.approx(0.530628251062, abs=1e-11)
    assert summary["final_clusters"] == 1
    first = (tmp_path / "log.csv").read_text().splitlines()
    assert first[0].startswith("# {") and first[1].startswith("event_index,t,firers,x_0,x_1")


def test_simulate_reports_periodic_orbit(tmp_path):
    assert cli("simulate", "--model", MODELS / "three_branch.json", "--x0", "0,0.4",
               "--max-firings", 40, "--out", tmp_path) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["status"] == "periodic" and summary["period"] == 2


def test_reruns_are_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert cli("simulate", "--model", MODELS / "peskin.json", "--x0", "0,0.3", "--out", tmp_path / d) == 0
        assert cli("map", "--model", MODELS / "peskin.json", "--grid", 101, "--out", tmp_path / d) == 0
    for name in ("log.csv", "summary.json", "map.csv", "cobweb.csv", "analysis.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_map_regions_fixedpoints(tmp_path):
    assert cli("map", "--model", MODELS / "quadratic.json", "--grid", 51, "--out", tmp_path) == 0
    analysis = json.loads((tmp_path / "analysis.json").read_text())
    assert analysis["A2"] is False and analysis["regions"] == []
    assert analysis["v_star"] == pytest.approx(0.365097169808, abs=1e-11)

    assert cli("regions", "--model", MODELS / "peskin.json", "--kmax", 4, "--out", tmp_path) == 0
    regions = json.loads((tmp_path / "regions.json").read_text())
    assert [r["k"] for r in regions["regions"]] == [0, 1, 2, 3, 4]

    assert cli("fixedpoints", "--model", MODELS / "three_branch.json", "--out", tmp_path) == 0
    fp = json.loads((tmp_path / "fixedpoints.json").read_text())
    assert fp["v_star"] == pytest.approx(0.45)
    assert fp["v_star2"] == pytest.approx(0.12755077, abs=1e-8)
    assert fp["v_hat"] == pytest.approx(0.79421744, abs=1e-8)


def test_set_override_and_dump_model(tmp_path):
    dump = tmp_path / "effective.json"
    assert cli("fixedpoints", "--model", MODELS / "peskin.json", "--set", "epsilon=0.1",
               "--dump-model", dump, "--out", tmp_path) == 0
    cfg = load_model_config(dump)
    assert cfg.params["epsilon"] == 0.1
    assert cli("fixedpoints", "--model", dump, "--out", tmp_path / "again") == 0
    assert (tmp_path / "fixedpoints.json").read_bytes() == (tmp_path / "again" / "fixedpoints.json").read_bytes()


def test_ensemble_small(tmp_path):
    assert cli("ensemble", "--n", 2, "--seed", 1, "--out", tmp_path) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["sync_event"] == 1 and report["missing_snapshots"] == [63]
    assert (tmp_path / "snapshot_001.csv").exists() and (tmp_path / "clusters.csv").exists()
    assert cli("ensemble", "--n", 5, "--runs", 2, "--out", tmp_path / "multi") == 0
    assert (tmp_path / "multi" / "seed_0" / "report.json").exists()
    assert (tmp_path / "multi" / "seed_1" / "report.json").exists()


def test_audit(tmp_path):
    assert cli("audit", "--model", MODELS / "peskin.json", "--x0", "0,0.3", "--out", tmp_path) == 0
    data = json.loads((tmp_path / "audit.json").read_text())
    assert data["in_window"] is True and data["bound_ok"] is True


@pytest.mark.parametrize("args", [
    ("simulate",),
    ("simulate", "--model", "/nonexistent.json"),
    ("simulate", "--model", MODELS / "peskin.json", "--x0", "0,0.1,0.2"),
    ("simulate", "--model", MODELS / "peskin.json", "--rtol", "-1"),
    ("map", "--model", MODELS / "peskin.json", "--set", "beta=0.1"),
    ("verify", "--only", "99"),
    ("nonsense",),
    ("simulate", "--x0", "a,b"),
])
def test_usage_errors_exit_2(tmp_path, args):
    assert cli(*args, "--out", tmp_path) == 2


def test_bad_model_file_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"model": "leaky", "params": {"S": 2, "gamma": 1, "epsilon": 0.2, "colour": 1}}')
    assert cli("simulate", "--model", bad, "--out", tmp_path) == 2


def test_verify_passes_and_fails(tmp_path):
    assert cli("verify", "--only", "3", "--out", tmp_path) == 0
    assert json.loads((tmp_path / "verify.json").read_text())["passed"] is True
    # a tolerance far too coarse for the closed-form comparison must fail
    assert cli("verify", "--only", "1", "--event-tol", "1e-2", "--out", tmp_path / "bad") == 1


@pytest.mark.skipif(shutil.which("ifire") is None, reason="console script not installed")
def test_console_script(tmp_path):
    res = subprocess.run(["ifire", "fixedpoints", "--model", str(MODELS / "peskin.json"), "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert "v_star" in res.stdout


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "ifire.cli", "simulate", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 2
    assert "--model" in res.stderr
