# funnelgate/export.py

import csv
import json
import logging
import math
from pathlib import Path
from typing import List, Optional

from openpyxl import Workbook

from funnelgate.sim import Trajectory, ViolationReport

logger = logging.getLogger(__name__)


def trajectory_header(n: int) -> List[str]:
    return (
        ["t"]
        + [f"x{i + 1}" for i in range(n)]
        + ["y", "u1", "u2", "u", "xi", "eps", "f", "V1", "V2", "in_funnel"]
    )


def _cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def trajectory_rows(traj: Trajectory):
    for i in range(len(traj)):
        yield (
            [traj.t[i]]
            + list(traj.x[i])
            + [traj.y[i], traj.u1[i], traj.u2[i], traj.u[i], traj.xi[i],
               traj.eps[i], traj.f[i], traj.V1[i], traj.V2[i], bool(traj.in_funnel[i])]
        )


def write_trajectory_csv(traj: Trajectory, path: Path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(trajectory_header(traj.n))
        for row in trajectory_rows(traj):
            w.writerow([_cell(v) for v in row])
    logger.info("wrote %s (%d rows)", path, len(traj))
    return path


def write_report_json(report: ViolationReport, path: Path, extra: Optional[dict] = None) -> Path:
    path = Path(path)
    data = report.as_dict()
    if extra:
        data.update(extra)
    path.write_text(json.dumps(data, indent=2), encoding="utf-8")
    return path


def read_report_json(path: Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


# ------------------------------------------------------------
# XLSX workbook
# ------------------------------------------------------------

def write_workbook(traj: Trajectory, report: ViolationReport, path: Path) -> Path:
    """Trajectory sheet plus a summary sheet with the violation counts."""
    wb = Workbook()
    ws = wb.active
    ws.title = "trajectory"
    ws.append(trajectory_header(traj.n))
    for row in trajectory_rows(traj):
        ws.append([
            None if (not isinstance(v, bool) and math.isnan(float(v))) else (v if isinstance(v, bool) else float(v))
            for v in row
        ])
    ws.freeze_panes = "B2"

    summary = wb.create_sheet("summary")
    summary.append(["kind", "count", "first_time"])
    for kind, c in report.counts.items():
        summary.append([kind, c.count, c.first])
    summary.append([])
    summary.append(["margin", "min value"])
    for name, value in sorted(report.margins.items()):
        summary.append([name, value])
    summary.append([])
    summary.append(["sup_V1", report.sup_V1])
    summary.append(["eps_drift", report.eps_drift])
    summary.append(["u2_crossings", report.u2_crossings])
    summary.append(["sliding_steps", report.sliding_steps])
    summary.append(["passed", report.passed])

    path = Path(path)
    wb.save(path)
    logger.info("wrote %s", path)
    return path
