# funnelgate/plots.py
"""SVG figures of one run, rendered with the Agg backend."""

import logging
from pathlib import Path
from typing import List, Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from funnelgate.controller import ConstraintWeights, ellipse_points, input_level_points  # noqa: E402
from funnelgate.funnel_transform import FunnelBounds  # noqa: E402
from funnelgate.matrix_kernel import SymMatrix  # noqa: E402
from funnelgate.sim import Trajectory  # noqa: E402

logger = logging.getLogger(__name__)

# glyphs as paths, fixed ids, no date: one file, same bytes per run
plt.rcParams.update({
    "svg.fonttype": "path",
    "svg.hashsalt": "funnelgate",
    "figure.figsize": (7.0, 4.5),
})

_SVG_META = {"Date": None}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    logger.debug("plot %s", path)
    return path


def plot_xi(traj: Trajectory, funnel: FunnelBounds, path: Path) -> Path:
    fig, ax = plt.subplots()
    lo = funnel.lower.values(traj.t)
    hi = funnel.upper.values(traj.t)
    ax.fill_between(traj.t, lo, hi, color="tab:blue", alpha=0.15, label="funnel")
    ax.plot(traj.t, lo, color="tab:blue", lw=0.8)
    ax.plot(traj.t, hi, color="tab:blue", lw=0.8)
    ax.plot(traj.t, traj.xi, color="black", lw=1.2, label="xi(t)")
    ax.set_xlabel("t, s")
    ax.set_ylabel("xi")
    ax.legend(loc="upper right")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def plot_state_plane(traj: Trajectory, P1: SymMatrix, P1_bar: SymMatrix,
                     outer_level: float, inner_level: float, path: Path) -> Path:
    fig, ax = plt.subplots()
    outer = ellipse_points(P1, outer_level)
    inner = ellipse_points(P1_bar, inner_level)
    ax.plot(outer[:, 0], outer[:, 1], "--", color="tab:red", lw=1.0, label="x'P1x = upper(0)")
    ax.plot(inner[:, 0], inner[:, 1], "--", color="tab:green", lw=1.0, label="x'P1_bar x = inf upper")
    ax.plot(traj.x[:, 0], traj.x[:, 1], color="black", lw=1.0, label="x(t)")
    ax.plot(traj.x[0, 0], traj.x[0, 1], "o", color="black", ms=4)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def plot_input_plane(traj: Trajectory, weights: ConstraintWeights,
                     outer_level: float, inner_level: float, path: Path) -> Path:
    fig, ax = plt.subplots()
    for level, style, label in ((outer_level, "tab:red", "level upper(0)"),
                                (inner_level, "tab:green", "level inf upper")):
        pts = input_level_points(weights, level)
        if len(pts):
            ax.plot(pts[:, 0], pts[:, 1], "--", color=style, lw=1.0, label=label)
    ax.plot(traj.u1, traj.u2, color="black", lw=1.0, label="(u1, u2)")
    ax.set_xlabel("u1")
    ax.set_ylabel("u2")
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def plot_signals(traj: Trajectory, path: Path) -> Path:
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7.0, 6.0))
    if np.all(np.isnan(traj.y)):
        for i in range(traj.n):
            axes[0].plot(traj.t, traj.x[:, i], lw=1.0, label=f"x{i + 1}")
        axes[0].set_ylabel("x")
    else:
        axes[0].plot(traj.t, traj.y, color="black", lw=1.0, label="y")
        axes[0].set_ylabel("y")
    axes[1].plot(traj.t, traj.u1, lw=1.0, label="u1")
    axes[1].set_ylabel("u1")
    axes[2].plot(traj.t, traj.u2, lw=1.0, label="u2")
    axes[2].set_ylabel("u2")
    axes[2].set_xlabel("t, s")
    for ax in axes:
        ax.grid(True, alpha=0.3)
        ax.legend(loc="upper right")
    return _save(fig, path)


def emit_plots(traj: Trajectory, funnel: FunnelBounds, weights: ConstraintWeights,
               out_dir: Path, P1_bar: Optional[SymMatrix] = None) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    g0 = funnel.upper.value(0.0)
    g_inf = funnel.upper.inf()

    paths = [plot_xi(traj, funnel, out_dir / "xi.svg")]
    if P1_bar is not None and traj.n == 2:
        paths.append(plot_state_plane(traj, weights.P1, P1_bar, g0, g_inf, out_dir / "phase_x.svg"))
    paths.append(plot_input_plane(traj, weights, g0, g_inf, out_dir / "phase_u.svg"))
    paths.append(plot_signals(traj, out_dir / "signals.svg"))
    return paths
