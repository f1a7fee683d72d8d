import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from monge_fd import __version__
from monge_fd.cli import EXIT_CONFIG, EXIT_DIVERGED, EXIT_FAILED, main
from monge_fd.grid import Grid, restrict


def _read_table(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    meta = json.loads(lines[0].lstrip("# "))
    rows = list(csv.DictReader(lines[1:]))
    return meta, rows


def _last_json(capsys):
    out = capsys.readouterr().out.strip().splitlines()
    return json.loads(out[-1])


def test_solve_quadratic(tmp_path):
    assert main(["solve", "--problem", "quadratic", "--n", "8", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["error"] <= 1e-8
    assert report["version"] == __version__
    assert report["config"]["problem"] == "quadratic" and report["config"]["n"] == [8]
    assert report["discrete_convex"] is True
    assert report["report"]["termination"].startswith("converged")
    assert report["report"]["min_eig"]

    raw = (tmp_path / "solution.csv").read_bytes()
    assert b"\r" not in raw
    meta, rows = _read_table(tmp_path / "solution.csv")
    assert meta["config"] == report["config"]
    assert len(rows) == 81 and list(rows[0]) == ["x1", "x2", "value"]
    last = rows[-1]
    assert float(last["x1"]) == 1.0 and float(last["x2"]) == 1.0
    assert abs(float(last["value"]) - 1.0) <= 1e-12


def test_solve_table1_n64(tmp_path):
    code = main(["solve", "--problem", "table1", "--n", "64", "--nu", "50", "--out", str(tmp_path)])
    report = json.loads((tmp_path / "report.json").read_text())
    assert code == 0
    assert 5.0688e-4 / 2 <= report["error"] <= 2 * 5.0688e-4


def test_solve_figure1_convex_small_residual(tmp_path):
    code = main(["solve", "--problem", "figure1", "--n", "128", "--nu", "50", "--out", str(tmp_path)])
    report = json.loads((tmp_path / "report.json").read_text())
    assert code == 0
    assert report["discrete_convex"] is True
    assert report["final_residual"] <= 1e-6


@pytest.mark.parametrize("solver", ["march", "newton", "chained", "rescaled"])
def test_solve_each_solver(tmp_path, solver):
    args = ["solve", "--problem", "table1", "--n", "8", "--solver", solver, "--out", str(tmp_path)]
    if solver == "newton":
        args += ["--scheme", "central"]
    if solver == "rescaled":
        args += ["--delta", "0.05"]
    if solver == "chained":
        args += ["--central-iters", "200"]
    assert main(args) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["error"] < 1e-2


@pytest.mark.parametrize("argv", [
    ["solve", "--mode", "bogus"],
    ["solve", "--problem", "nope"],
    ["solve", "--n", "2"],
    ["solve", "--n", "8", "16"],
    ["solve", "--nu", "-1"],
    ["solve", "--scheme", "upwind"],
    ["solve", "--solver", "newton", "--scheme", "compatible-sym"],
    ["solve", "--solver", "rescaled"],
    ["verify", "--inject-fault", "nonexistent"],
])
def test_invalid_config(tmp_path, capsys, argv):
    assert main(argv + ["--out", str(tmp_path)]) == EXIT_CONFIG
    err = _last_json(capsys)
    assert err["error"]["type"] == "invalid-config" and err["error"]["message"]
    assert not (tmp_path / "report.json").exists()


def test_diverged_still_writes_report(tmp_path, capsys):
    code = main(["solve", "--problem", "table3", "--n", "16", "--nu", "0.05", "--out", str(tmp_path)])
    assert code == EXIT_DIVERGED
    assert _last_json(capsys)["error"]["type"] == "diverged"
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["report"]["termination"] == "diverged"


def test_env_overrides(tmp_path, monkeypatch):
    monkeypatch.setenv("MONGE_FD_NU", "7.5")
    monkeypatch.setenv("MONGE_FD_N", "8")
    monkeypatch.setenv("MONGE_FD_PROBLEM", "quadratic")
    assert main(["solve", "--out", str(tmp_path)]) == 0
    cfg = json.loads((tmp_path / "report.json").read_text())["config"]
    assert cfg["nu"] == 7.5 and cfg["n"] == [8]
    # an explicit flag wins
    assert main(["solve", "--nu", "5", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "report.json").read_text())["config"]["nu"] == 5


def test_custom_tabulated_problem(tmp_path):
    grid = Grid(2, 8)
    g = restrict(grid, lambda x, y: (x * x + y * y) / 2)
    np.savez(tmp_path / "data.npz", f=np.ones(grid.shape), g=g, u=g)
    assert main(["solve", "--problem", str(tmp_path / "data.npz"), "--n", "8", "--nu", "5",
                 "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "report.json").read_text())["error"] <= 1e-8
    assert main(["solve", "--problem", str(tmp_path / "data.npz"), "--n", "16",
                 "--out", str(tmp_path)]) == EXIT_CONFIG


def test_sweep_table3(tmp_path):
    assert main(["sweep", "--problem", "table3", "--solver", "newton", "--n", "4", "8", "16", "32",
                 "64", "--out", str(tmp_path)]) == 0
    meta, rows = _read_table(tmp_path / "table.csv")
    assert list(rows[0]) == ["h", "error", "order", "iters", "seconds"]
    assert meta["config"]["solver"] == "newton"
    assert [float(r["h"]) for r in rows] == [1 / 4, 1 / 8, 1 / 16, 1 / 32, 1 / 64]
    assert rows[0]["order"] == "n/a"
    assert all(float(r["order"]) >= 1.9 for r in rows[1:])


def test_sweep_single_n(tmp_path):
    assert main(["sweep", "--problem", "table1", "--n", "8", "--out", str(tmp_path)]) == 0
    _, rows = _read_table(tmp_path / "table.csv")
    assert len(rows) == 1 and rows[0]["order"] == "n/a"


def test_sweep_table2(tmp_path):
    code = main(["sweep", "--problem", "table2", "--nu", "150", "--n", "8", "16", "32", "64",
                 "--monitor-every", "100", "--out", str(tmp_path)])
    _, rows = _read_table(tmp_path / "table.csv")
    ref = [3.9140e-3, 2.5847e-3, 1.4879e-3, 6.3084e-4]
    errs = [float(r["error"]) for r in rows]
    assert code == 0
    assert all(p / 2 <= e <= 2 * p for e, p in zip(errs, ref))


def test_sweep_needs_exact_solution(tmp_path, capsys):
    assert main(["sweep", "--problem", "figure1", "--n", "8", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_verify_status_matches_items(tmp_path):
    code = main(["verify", "--out", str(tmp_path)])
    body = json.loads((tmp_path / "verify.json").read_text())
    assert (code == 0) == body["passed"] == all(c["passed"] for c in body["checks"])
    if code:
        assert code == EXIT_FAILED
    names = {c["name"]: c for c in body["checks"]}
    for identity in ["integration-by-parts", "energy-identity", "leibniz", "product-rule",
                     "divergence-free-cof-hat", "cof-sym-commute-2d", "cofactor-trace",
                     "homogeneity", "eigenvalue-continuity", "cofactor-spectrum", "poincare"]:
        assert names[identity]["passed"], identity
    for slope in ["consistency-central", "consistency-compatible-sym"]:
        assert names[slope]["threshold"] > 0 and names[slope]["value"] > 0
        assert "per-halving orders" in names[slope]["detail"]


def test_verify_fault_injection(tmp_path):
    assert main(["verify", "--inject-fault", "flip-backward-sign", "--out", str(tmp_path)]) == EXIT_FAILED
    body = json.loads((tmp_path / "verify.json").read_text())
    checks = {c["name"]: c["passed"] for c in body["checks"]}
    assert checks["integration-by-parts"] is False
    assert checks["energy-identity"] is True


def test_outputs_byte_stable(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        main(["solve", "--problem", "table1", "--n", "16", "--out", str(tmp_path / "run")])
        (tmp_path / "run").rename(out)
    assert (a / "solution.csv").read_bytes() == (b / "solution.csv").read_bytes()
    for out in (a, b):
        main(["verify", "--seed", "3", "--out", str(tmp_path / "v")])
        (tmp_path / "v").rename(out / "v")
    assert (a / "v" / "verify.json").read_bytes() == (b / "v" / "verify.json").read_bytes()


def test_threads_flag(tmp_path):
    assert main(["solve", "--problem", "quadratic", "--n", "8", "--threads", "1",
                 "--out", str(tmp_path)]) == 0


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "monge_fd.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == __version__
    proc = subprocess.run([sys.executable, "-m", "monge_fd.cli", "solve", "--n", "1"],
                          capture_output=True, text=True, cwd=tmp_path)
    assert proc.returncode == EXIT_CONFIG
    assert "error" in json.loads(proc.stdout)
