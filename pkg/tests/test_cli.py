import csv
import json
from pathlib import Path

import numpy as np
import pytest

from ness_chain.cli import EXIT_CONFIG, EXIT_IDENTITY, EXIT_QUADRATURE, main, run_sweep, sweep_points
from ness_chain.config import ConfigError, RunConfig, SweepAxis, config_from_dict, load_config

ROOT = Path(__file__).resolve().parents[1]
REF = ROOT / "configs" / "baseline.json"


def write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def test_default_config_matches_reference_parameters():
    cfg = load_config(REF)
    assert (cfg.omega_r, cfg.gamma, cfg.T_H, cfg.T_C, cfg.lambda2) == (10.0, 1.0, 100.0, 0.002, 10.0)
    assert cfg.baths().betas == (0.01, 500.0)


def test_currents_json(tmp_path):
    out = tmp_path / "r.json"
    assert main(["currents", "--config", str(REF), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["zeroth_order"]["p_inter"][1][0] == pytest.approx(8.78451077593574, rel=1e-6)
    assert rep["zeroth_order"]["cutoff_dependent"] == ["p_xi", "p_gamma"]
    assert rep["perturbative_validity"] is True
    assert rep["provenance"]["config"]["omega_r"] == 10.0
    assert rep["provenance"]["library_version"]
    assert rep["provenance"]["cutoff"] == pytest.approx(50 * np.sqrt(120.0))


def test_json_roundtrip_exact(tmp_path):
    from ness_chain.cli import report_to_dict, run_point

    cfg = load_config(REF)
    rep = run_point(cfg)
    text = json.dumps(report_to_dict(cfg, rep))
    back = json.loads(text)
    assert back["ratio"] == rep.ratio
    assert back["first_order"]["p_xi"] == rep.first_order.p_xi.tolist()
    assert back["zeroth_order"]["p_inter"] == rep.zeroth.p_inter.tolist()


def test_table_dump(tmp_path):
    out = tmp_path / "r.json"
    assert main(["currents", "--config", str(REF), "--out", str(out), "--dump-table"]) == 0
    table = json.loads(out.read_text())["kernel_table"]
    assert "C[0, 0]" in table and "U[1, 1, 1, 1]" in table


def test_currents_csv(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["currents", "--config", str(REF), "--out", str(out), "--format", "csv"]) == 0
    raw = out.read_bytes()
    assert b"\r" not in raw
    rows = list(csv.DictReader(raw.decode().splitlines()))
    inter = [r for r in rows if r["order"] == "0" and r["quantity"] == "p_inter" and r["site"] == "1"]
    assert float(inter[0]["value"]) == pytest.approx(8.78451077593574, rel=1e-6)


def test_zero_strength_first_order_block(tmp_path):
    out = tmp_path / "r.json"
    path = write(tmp_path, {"strength": 0.0, "nonlinearity": "BetaFPUT"})
    assert main(["currents", "--config", path, "--out", str(out)]) == 0
    first = json.loads(out.read_text())["first_order"]
    for f in ("p_xi", "p_gamma"):
        assert first[f] == [0.0, 0.0]
    assert json.loads(out.read_text())["ratio"] == 0.0


@pytest.mark.parametrize(
    "data",
    [
        {"T_C": -1.0},
        {"T_H": -0.1},
        {"omega_r": 0.0},
        {"gamma": -1.0},
        {"nonlinearity": "quintic"},
        {"cutoff_kind": "Gaussian"},
        {"cutoff": 5.0},
        {"mystery": 1},
        {"format": "xml"},
        {"rel_tol": 0.0},
        {"T_C": "cold"},
        {"n_sites": 1.5},
        {"sweep": [{"var": "omega_r", "from": 1, "to": 2, "steps": 1}]},
    ],
)
def test_config_errors_exit_without_output(tmp_path, data):
    out = tmp_path / "r.json"
    assert main(["currents", "--config", write(tmp_path, data), "--out", str(out)]) == EXIT_CONFIG
    assert not out.exists()


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["verify", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["verify", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_quadrature_failure_exit(tmp_path, capsys):
    path = write(tmp_path, {"rel_tol": 1e-15, "max_subdivisions": 10})
    assert main(["currents", "--config", path]) == EXIT_QUADRATURE
    assert "quadrature failure" in capsys.readouterr().err


def test_verify_passes_on_default(capsys):
    assert main(["verify", "--config", str(REF)]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "identities passed" in out


def test_verify_overdamped(tmp_path, capsys):
    assert main(["verify", "--config", write(tmp_path, {"gamma": 15.0, "T_C": 1.0})]) == 0


def test_verify_catches_broken_symmetry(tmp_path, capsys):
    path = write(tmp_path, {"frequency_matrix": [[110.0, -10.0], [-9.0, 110.0]]})
    assert main(["verify", "--config", path]) == EXIT_IDENTITY
    assert "FAIL propagator.offdiag_symmetry" in capsys.readouterr().out


def test_sweep_rows_and_order(tmp_path):
    out = tmp_path / "s.csv"
    args = ["sweep", "--config", str(REF), "--out", str(out)]
    args += ["--var", "lambda2", "--from", "2", "--to", "6", "--steps", "2"]
    args += ["--var", "strength", "--from", "0", "--to", "1", "--steps", "1"]
    assert main(args) == 0
    rows = list(csv.DictReader(out.read_text().splitlines()))
    assert [(r["lambda2"], r["strength"]) for r in rows] == [
        ("2", "0"), ("2", "1"), ("4", "0"), ("4", "1"), ("6", "0"), ("6", "1"),
    ]
    assert all(r["error"] == "" for r in rows)
    assert rows[0]["ratio"] == "0"


def test_sweep_deterministic_across_workers(monkeypatch):
    cfg = RunConfig(strength=1.0, sweep=[SweepAxis("gamma", 1.0, 3.0, 4)])
    monkeypatch.setenv("NESS_CHAIN_THREADS", "1")
    serial = run_sweep(cfg)
    monkeypatch.setenv("NESS_CHAIN_THREADS", "3")
    parallel = run_sweep(cfg)
    assert serial == parallel
    assert serial.encode() == run_sweep(cfg, workers=2).encode()


def test_sweep_records_point_failures():
    # The cutoff is fixed, so large lambda2 pushes the top resonance above it.
    cfg = RunConfig(cutoff=12.0, sweep=[SweepAxis("lambda2", 1.0, 40.0, 1)])
    rows = list(csv.DictReader(run_sweep(cfg, workers=1).splitlines()))
    assert rows[0]["error"] == ""
    assert "cutoff" in rows[1]["error"] and rows[1]["ratio"] == "nan"


def test_sweep_steps_are_intervals():
    pts = sweep_points(RunConfig(sweep=[SweepAxis("lambda2", 0.0, 40.0, 80)]))
    assert len(pts) == 81 and pts[1]["lambda2"] == 0.5


@pytest.mark.parametrize(
    "sweep",
    [
        [{"var": "lambda2", "from": 4, "to": 4, "steps": 3}],
        [{"var": "lambda2", "from": 4, "to": 1, "steps": 3}],
        [{"var": "gamma", "from": 1, "to": 2, "steps": 1}] * 2,
        [{"var": "gamma", "from": 1, "to": 2, "steps": 1}, {"var": "T_C", "from": 1, "to": 2, "steps": 1},
         {"var": "strength", "from": 1, "to": 2, "steps": 1}],
        [{"var": "gamma"}],
    ],
)
def test_bad_sweeps(sweep):
    with pytest.raises(ConfigError):
        config_from_dict({"sweep": sweep})


def test_sweep_needs_matching_flags(tmp_path):
    args = ["sweep", "--config", str(REF), "--var", "gamma", "--from", "1", "--to", "2"]
    assert main(args) == EXIT_CONFIG
    assert main(["sweep", "--config", str(REF)]) == EXIT_CONFIG


def test_bad_thread_env(monkeypatch):
    monkeypatch.setenv("NESS_CHAIN_THREADS", "many")
    assert main(["sweep", "--config", str(REF), "--var", "gamma", "--from", "1", "--to", "2", "--steps", "1"]) == EXIT_CONFIG
