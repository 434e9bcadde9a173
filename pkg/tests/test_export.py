import csv
import json

import pytest
from openpyxl import load_workbook

from funnelgate.export import (
    read_report_json,
    trajectory_header,
    write_report_json,
    write_trajectory_csv,
    write_workbook,
)
from funnelgate.plots import emit_plots
from funnelgate.run_ledger import LEDGER_NAME, list_runs, record_run
from funnelgate.scenarios import Scenario
from funnelgate.sim import run_output_feedback, run_state_feedback
from funnelgate.tools.export_presets import export_presets


@pytest.fixture(scope="module")
def ex2_run(ex2):
    s = ex2.with_overrides(horizon=0.2, record_stride=10)
    traj, report = run_state_feedback(s.plant, s.law(), s.funnel, s.sim_config())
    return s, traj, report


@pytest.fixture(scope="module")
def ex3_run(ex3_exp):
    s = ex3_exp.with_overrides(horizon=0.2, record_stride=10)
    traj, report = run_output_feedback(s.plant, s.law(), s.funnel, s.sim_config())
    return s, traj, report


# ------------------------------------------------------------
# CSV / JSON
# ------------------------------------------------------------

def test_header_layout():
    assert trajectory_header(2) == [
        "t", "x1", "x2", "y", "u1", "u2", "u", "xi", "eps", "f", "V1", "V2", "in_funnel",
    ]


def test_trajectory_csv(tmp_path, ex2_run):
    _, traj, _ = ex2_run
    path = write_trajectory_csv(traj, tmp_path / "trajectory.csv")
    with path.open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == trajectory_header(2)
    assert len(rows) == len(traj) + 1
    first = rows[1]
    assert float(first[0]) == 0.0
    assert float(first[1]) == -1.0 and float(first[2]) == 1.0
    # state feedback has no output column value
    assert first[3] == ""
    assert first[-1] in ("0", "1")
    assert float(first[7]) == traj.xi[0]


def test_report_json(tmp_path, ex2_run):
    _, _, report = ex2_run
    path = write_report_json(report, tmp_path / "violations.json", extra={"scenario": "example2"})
    data = read_report_json(path)
    assert data["scenario"] == "example2"
    assert data["passed"] == report.passed
    assert set(data["violations"]) == {"funnel", "X", "U", "Y", "clamp", "non_finite"}
    assert json.loads(path.read_text(encoding="utf-8"))["steps"] == 201


def test_workbook(tmp_path, ex3_run):
    _, traj, report = ex3_run
    path = write_workbook(traj, report, tmp_path / "trajectory.xlsx")
    wb = load_workbook(path)
    assert wb.sheetnames == ["trajectory", "summary"]
    sheet = wb["trajectory"]
    header = [c.value for c in sheet[1]]
    assert header == trajectory_header(3)
    assert sheet.max_row == len(traj) + 1
    assert sheet.cell(row=2, column=5).value == pytest.approx(4.4)
    kinds = [row[0].value for row in wb["summary"].iter_rows(min_row=2, max_row=7)]
    assert kinds == ["funnel", "X", "U", "Y", "clamp", "non_finite"]
    labels = {row[0].value: row[1].value for row in wb["summary"].iter_rows() if row[0].value}
    assert labels["u2_crossings"] == report.u2_crossings
    assert labels["sliding_steps"] == report.sliding_steps


# ------------------------------------------------------------
# Plots
# ------------------------------------------------------------

def test_plots_are_self_contained(tmp_path, ex2_run):
    s, traj, _ = ex2_run
    paths = emit_plots(traj, s.funnel, s.weights, tmp_path / "plots", P1_bar=s.law().P1_bar)
    names = sorted(p.name for p in paths)
    assert names == ["phase_u.svg", "phase_x.svg", "signals.svg", "xi.svg"]
    for p in paths:
        text = p.read_text(encoding="utf-8")
        assert text.lstrip().startswith("<?xml")
        assert 'href="http' not in text
        assert "<image" not in text


def test_plots_are_reproducible(tmp_path, ex3_run):
    s, traj, _ = ex3_run
    a = emit_plots(traj, s.funnel, s.weights, tmp_path / "a")
    b = emit_plots(traj, s.funnel, s.weights, tmp_path / "b")
    assert [p.name for p in a] == ["xi.svg", "phase_u.svg", "signals.svg"]
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()


# ------------------------------------------------------------
# Ledger / presets
# ------------------------------------------------------------

def test_ledger_records_newest_first(tmp_path):
    assert list_runs(tmp_path) == []
    first = record_run(tmp_path, "certify", "example2", 0, 1, {"found": False})
    second = record_run(tmp_path, "simulate", "example3-exp", 4, 0)
    assert (tmp_path / LEDGER_NAME).exists()
    rows = list_runs(tmp_path)
    assert [r["id"] for r in rows] == [second, first]
    assert rows[1]["summary"] == {"found": False}
    assert rows[0]["summary"] == {}
    assert len(list_runs(tmp_path, limit=1)) == 1


def test_export_presets(tmp_path):
    written = export_presets(str(tmp_path))
    assert len(written) == 3
    for path in written:
        s = Scenario.load(path)
        assert s.name in path
