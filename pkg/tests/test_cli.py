import csv
import json

import pytest

import funnelgate.config as config
from funnelgate.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, build_parser, main
from funnelgate.run_ledger import list_runs


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


# ------------------------------------------------------------
# Parser
# ------------------------------------------------------------

def test_parser_flags():
    args = build_parser().parse_args(
        ["simulate", "--scenario", "example3-cos", "--alpha", "20.2", "--no-plots", "--out", "x"]
    )
    assert args.scenario == "example3-cos"
    assert args.alpha == 20.2
    assert args.no_plots and not args.xlsx
    assert args.out == "x"
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


# ------------------------------------------------------------
# selftest
# ------------------------------------------------------------

def test_selftest_passes_and_is_deterministic(capsys, tmp_path):
    code, first = _run(capsys, "selftest", "--out", str(tmp_path))
    assert code == EXIT_OK
    assert "5/5 checks passed" in first.out
    code, second = _run(capsys, "selftest", "--out", str(tmp_path))
    assert first.out == second.out


def test_selftest_fails_on_tightened_tolerance(capsys, tmp_path):
    code, res = _run(capsys, "selftest", "--tolerance", "round_trip=0", "--out", str(tmp_path))
    assert code == EXIT_FAIL
    assert "FAIL" in res.out


def test_selftest_bad_tolerance_value(capsys, tmp_path):
    code, _ = _run(capsys, "selftest", "--tolerance", "filter=tight", "--out", str(tmp_path))
    assert code == EXIT_CONFIG


def test_selftest_record(capsys, tmp_path):
    _run(capsys, "selftest", "--record", "--out", str(tmp_path))
    rows = list_runs(tmp_path)
    assert rows[0]["command"] == "selftest"


# ------------------------------------------------------------
# certify
# ------------------------------------------------------------

def test_certify_rejects_trivial_certificate(capsys, tmp_path):
    code, res = _run(capsys, "certify", "--scenario", "example2", "--alpha", "0.001",
                     "--tau", "1,1,1,1,1", "--out", str(tmp_path))
    assert code == EXIT_FAIL
    assert "FAILED" in res.out


def test_certify_example3(capsys, tmp_path):
    code, res = _run(capsys, "certify", "--scenario", "example3-exp", "--alpha", "20.2",
                     "--out", str(tmp_path))
    assert code == EXIT_OK
    doc = json.loads((tmp_path / "certificate.json").read_text(encoding="utf-8"))
    assert doc["alpha"] == 20.2
    assert len(doc["tau"]) == 5
    assert len(doc["H"]) == 3
    assert "feasible" in res.out


def test_certify_example2_eps_group(capsys, tmp_path):
    code, res = _run(capsys, "certify", "--scenario", "example2", "--eps-only", "--alpha", "11.6",
                     "--out", str(tmp_path))
    assert code == EXIT_OK
    assert "eps group:   ok" in res.out


def test_certify_example2_full_certificate_fails(capsys, tmp_path):
    code, res = _run(capsys, "certify", "--scenario", "example2", "--alpha", "11.6",
                     "--out", str(tmp_path))
    assert code == EXIT_FAIL
    assert "eps group:   ok" in res.out
    assert "Gramian ratio" in res.out
    assert not (tmp_path / "certificate.json").exists()
    assert list_runs(tmp_path)[0]["exit_code"] == EXIT_FAIL


def test_simulate_example2_without_certificate(capsys, tmp_path):
    code, _ = _run(capsys, "simulate", "--scenario", "example2", "--horizon", "1",
                   "--no-plots", "--out", str(tmp_path))
    assert code == EXIT_OK
    doc = json.loads((tmp_path / "violations.json").read_text(encoding="utf-8"))
    assert doc["certified"] is False
    assert doc["passed"] is True
    assert doc["steps"] == 1001


def test_certify_bad_tau(capsys, tmp_path):
    code, _ = _run(capsys, "certify", "--tau", "1,2,3", "--out", str(tmp_path))
    assert code == EXIT_CONFIG


def test_certify_missing_config(capsys, tmp_path):
    code, res = _run(capsys, "certify", "--scenario", "custom", "--config",
                     str(tmp_path / "nope.json"), "--out", str(tmp_path))
    assert code == EXIT_CONFIG
    assert "config error" in res.err


def test_unknown_scenario(capsys, tmp_path):
    code, _ = _run(capsys, "certify", "--scenario", "example7", "--out", str(tmp_path))
    assert code == EXIT_CONFIG


def test_env_seed_overrides_flag(capsys, tmp_path, monkeypatch):
    monkeypatch.setattr(config, "ENV_SEED", "5")
    _run(capsys, "certify", "--scenario", "example3-exp", "--alpha", "20.2", "--seed", "9",
         "--out", str(tmp_path))
    assert list_runs(tmp_path)[0]["seed"] == 5


# ------------------------------------------------------------
# simulate / report / runs
# ------------------------------------------------------------

@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    code = main([
        "simulate", "--scenario", "example2", "--eps-only", "--alpha", "11.6",
        "--horizon", "1", "--xlsx", "--out", str(out),
    ])
    return out, code


def test_simulate_exit_and_artifacts(sim_dir):
    out, code = sim_dir
    assert code == EXIT_OK
    for name in ("trajectory.csv", "violations.json", "certificate.json", "trajectory.xlsx", "runs.db"):
        assert (out / name).exists(), name
    svgs = sorted(p.name for p in (out / "plots").glob("*.svg"))
    assert svgs == ["phase_u.svg", "phase_x.svg", "signals.svg", "xi.svg"]


def test_simulate_csv(sim_dir):
    out, _ = sim_dir
    with (out / "trajectory.csv").open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:3] == ["t", "x1", "x2"]
    assert len(rows) == 1002
    assert float(rows[-1][0]) == pytest.approx(1.0)
    assert all(r[-1] == "1" for r in rows[1:])


def test_simulate_report(sim_dir):
    out, _ = sim_dir
    doc = json.loads((out / "violations.json").read_text(encoding="utf-8"))
    assert doc["passed"] is True
    assert doc["certified"] is True
    assert doc["scenario"] == "example2"
    assert all(v["count"] == 0 for v in doc["violations"].values())


def test_simulate_svgs_are_self_contained(sim_dir):
    out, _ = sim_dir
    for p in (out / "plots").glob("*.svg"):
        text = p.read_text(encoding="utf-8")
        assert 'href="http' not in text
        assert "<image" not in text


def test_report_and_runs(capsys, sim_dir):
    out, _ = sim_dir
    code, res = _run(capsys, "report", "--out", str(out))
    assert code == EXIT_OK
    assert "PASSED" in res.out
    assert "certificate: alpha=11.6" in res.out
    code, res = _run(capsys, "runs", "--out", str(out))
    assert code == EXIT_OK
    assert "simulate" in res.out


def test_report_on_empty_dir(capsys, tmp_path):
    code, _ = _run(capsys, "report", "--out", str(tmp_path))
    assert code == EXIT_CONFIG


def test_runs_on_empty_dir(capsys, tmp_path):
    code, res = _run(capsys, "runs", "--out", str(tmp_path))
    assert code == EXIT_OK
    assert "No runs recorded" in res.out
