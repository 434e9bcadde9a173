"""
Fixed-step closed-loop simulation.

The joint state is integrated with classical RK4:
  state feedback   [x; u2; eps_int]
  output feedback  [x; u2; z_f; eps_int]
eps_int is a side channel integrating the eps dynamics so the algebraic
eps = Phi^-1(xi, t) can be cross-checked; it never feeds back.
Steps in which u2 reaches 0 are split there, see advance().
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from funnelgate.config import DEFAULT_STEP, EVENT_XTOL
from funnelgate.controller import OutputFeedbackLaw, StateFeedbackLaw, eps_dot_reference
from funnelgate.errors import ConfigError
from funnelgate.funnel_transform import BoundCurve, FunnelBounds, phi_inv_clamped
from funnelgate.matrix_kernel import SymMatrix
from funnelgate.plant import (
    DisturbanceGenerator,
    DisturbanceSpec,
    OutputPlant,
    StatePlant,
)

logger = logging.getLogger(__name__)


# ------------------------------------------------------------
# Configuration
# ------------------------------------------------------------

@dataclass(frozen=True)
class ConstraintSets:
    """Time-varying bounds of X (x^T P1 x), U (p0 u^2) and Y (p1 y^2)."""
    l_u: BoundCurve
    l_x: Optional[BoundCurve] = None
    l_y: Optional[BoundCurve] = None

    def as_dict(self) -> dict:
        d = {"l_u": self.l_u.as_dict()}
        if self.l_x is not None:
            d["l_x"] = self.l_x.as_dict()
        if self.l_y is not None:
            d["l_y"] = self.l_y.as_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ConstraintSets":
        try:
            return cls(
                l_u=BoundCurve.from_dict(d["l_u"]),
                l_x=BoundCurve.from_dict(d["l_x"]) if "l_x" in d else None,
                l_y=BoundCurve.from_dict(d["l_y"]) if "l_y" in d else None,
            )
        except KeyError as e:
            raise ConfigError(f"constraint sets missing {e}") from e

    def check_under(self, funnel: FunnelBounds, horizon: float) -> bool:
        """upper(t) <= every configured bound on the grid (set containment premise)."""
        grid = np.linspace(0.0, horizon, 2001)
        g = funnel.upper.values(grid)
        for curve in (self.l_x, self.l_u, self.l_y):
            if curve is not None and np.any(g > curve.values(grid) + 1e-12):
                return False
        return True


@dataclass(frozen=True)
class SimConfig:
    horizon: float
    x0: Tuple[float, ...]
    step: float = DEFAULT_STEP
    record_stride: int = 1
    seed: int = 0
    disturbance: Optional[DisturbanceSpec] = None
    sets: Optional[ConstraintSets] = None
    H: Optional[SymMatrix] = None

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigError("step must be positive")
        if not self.horizon >= self.step:
            raise ConfigError("horizon must be at least one step")
        if int(self.record_stride) < 1:
            raise ConfigError("record_stride must be >= 1")
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        if self.disturbance is not None:
            ratio = self.disturbance.sample_time / self.step
            if abs(ratio - round(ratio)) > 1e-9 * max(ratio, 1.0) or round(ratio) < 1:
                raise ConfigError(
                    f"disturbance sample_time {self.disturbance.sample_time} is not an "
                    f"integer multiple of step {self.step}"
                )

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.step))

    @property
    def steps_per_hold(self) -> int:
        if self.disturbance is None:
            return 1
        return int(round(self.disturbance.sample_time / self.step))

    def as_dict(self) -> dict:
        d = {
            "horizon": self.horizon,
            "x0": list(self.x0),
            "step": self.step,
            "record_stride": self.record_stride,
            "seed": self.seed,
        }
        if self.disturbance is not None:
            d["disturbance"] = self.disturbance.as_dict()
        if self.sets is not None:
            d["sets"] = self.sets.as_dict()
        return d


# ------------------------------------------------------------
# Results
# ------------------------------------------------------------

@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    u: np.ndarray
    xi: np.ndarray
    eps: np.ndarray
    eps_int: np.ndarray
    f: np.ndarray
    V1: np.ndarray
    V2: np.ndarray
    in_funnel: np.ndarray
    in_X: np.ndarray
    in_U: np.ndarray
    in_Y: np.ndarray

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def __len__(self) -> int:
        return len(self.t)


@dataclass
class ViolationCount:
    count: int = 0
    first: Optional[float] = None

    def hit(self, t: float) -> None:
        if self.count == 0:
            self.first = t
        self.count += 1


VIOLATION_KINDS = ("funnel", "X", "U", "Y", "clamp", "non_finite")


@dataclass
class ViolationReport:
    counts: Dict[str, ViolationCount] = field(
        default_factory=lambda: {k: ViolationCount() for k in VIOLATION_KINDS}
    )
    margins: Dict[str, float] = field(default_factory=dict)
    sup_V1: float = 0.0
    eps_drift: float = 0.0
    steps: int = 0
    u2_crossings: int = 0
    sliding_steps: int = 0

    @property
    def passed(self) -> bool:
        return all(c.count == 0 for c in self.counts.values())

    def note_margin(self, name: str, value: float) -> None:
        old = self.margins.get(name)
        if old is None or value < old:
            self.margins[name] = value

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "steps": self.steps,
            "violations": {k: {"count": c.count, "first_time": c.first} for k, c in self.counts.items()},
            "margins": dict(self.margins),
            "sup_V1": self.sup_V1,
            "eps_drift": self.eps_drift,
            "u2_crossings": self.u2_crossings,
            "sliding_steps": self.sliding_steps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ViolationReport":
        rep = cls(margins=dict(d.get("margins", {})), sup_V1=float(d.get("sup_V1", 0.0)),
                  eps_drift=float(d.get("eps_drift", 0.0)), steps=int(d.get("steps", 0)),
                  u2_crossings=int(d.get("u2_crossings", 0)),
                  sliding_steps=int(d.get("sliding_steps", 0)))
        for k, v in d.get("violations", {}).items():
            rep.counts[k] = ViolationCount(int(v["count"]), v.get("first_time"))
        return rep


# ------------------------------------------------------------
# RK4
# ------------------------------------------------------------

def rk4_step(fun: Callable, t: float, z: np.ndarray, h: float) -> np.ndarray:
    k1 = fun(t, z)
    k2 = fun(t + 0.5 * h, z + 0.5 * h * k1)
    k3 = fun(t + 0.5 * h, z + 0.5 * h * k2)
    k4 = fun(t + h, z + h * k3)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_solve(fun: Callable, z0, horizon: float, step: float) -> np.ndarray:
    """Terminal state of dz/dt = fun(t, z) after horizon/step fixed steps."""
    z = np.asarray(z0, dtype=float).copy()
    n = int(round(horizon / step))
    for i in range(n):
        z = rk4_step(fun, i * step, z, step)
    return z


# ------------------------------------------------------------
# Closed loop
# ------------------------------------------------------------

class _Recorder:
    def __init__(self, n: int):
        self.n = n
        self.rows: Dict[str, List] = {k: [] for k in Trajectory.__dataclass_fields__}

    def add(self, **values):
        for k, v in values.items():
            self.rows[k].append(v)

    def build(self) -> Trajectory:
        cols = {}
        for k, v in self.rows.items():
            if k == "x":
                cols[k] = np.array(v, dtype=float).reshape(-1, self.n)
            elif k.startswith("in_"):
                cols[k] = np.array(v, dtype=bool)
            else:
                cols[k] = np.array(v, dtype=float)
        return Trajectory(**cols)


def _check_sets(report: ViolationReport, sets: Optional[ConstraintSets], t: float,
                xPx: Optional[float], p0u2: float, p1y2: Optional[float]):
    in_x = in_u = in_y = True
    if sets is None:
        return in_x, in_u, in_y
    if sets.l_x is not None and xPx is not None:
        slack = sets.l_x.value(t) - xPx
        report.note_margin("X", slack)
        in_x = slack >= 0.0
        if not in_x:
            report.counts["X"].hit(t)
    slack = sets.l_u.value(t) - p0u2
    report.note_margin("U", slack)
    in_u = slack >= 0.0
    if not in_u:
        report.counts["U"].hit(t)
    if sets.l_y is not None and p1y2 is not None:
        slack = sets.l_y.value(t) - p1y2
        report.note_margin("Y", slack)
        in_y = slack >= 0.0
        if not in_y:
            report.counts["Y"].hit(t)
    return in_x, in_u, in_y


def advance(loop, t: float, z: np.ndarray, h: float, hold: int,
            sliding: bool) -> Tuple[np.ndarray, bool, bool]:
    """
    One RK4 step of the closed loop, returning (z, sliding, crossed).

    |u2| has a kink at u2 = 0.  A step in which u2 changes sign is split
    at the crossing (brentq on the step fraction); if the u2 law pushes
    toward 0 from both sides there (loop.switching > 0) u2 is held at 0
    until switching turns nonpositive, and that exit is located the same
    way.  Off these events every stage sees a smooth vector field.
    """
    k = loop.u2_index

    if sliding:
        held = lambda s, w: loop(s, w, hold, True)  # noqa: E731
        if loop.switching(t, z, hold) > 0.0:
            z_end = rk4_step(held, t, z, h)
            if loop.switching(t + h, z_end, hold) > 0.0:
                return z_end, True, False
            theta = brentq(
                lambda th: loop.switching(t + th * h, rk4_step(held, t, z, th * h), hold),
                0.0, 1.0, xtol=EVENT_XTOL,
            )
            z = rk4_step(held, t, z, theta * h)
            t, h = t + theta * h, h - theta * h
            if h <= 0.0:
                return z, False, False
        # u2 leaves 0 on the side sign(0) = +1 picks

    free = lambda s, w: loop(s, w, hold)  # noqa: E731
    z_end = rk4_step(free, t, z, h)
    if (z[k] >= 0.0) == (z_end[k] >= 0.0):
        return z_end, False, False

    theta = brentq(lambda th: rk4_step(free, t, z, th * h)[k], 0.0, 1.0, xtol=EVENT_XTOL)
    z_cross = rk4_step(free, t, z, theta * h) if theta > 0.0 else z.copy()
    z_cross[k] = 0.0
    t_cross, rest = t + theta * h, h - theta * h
    held = loop.switching(t_cross, z_cross, hold) > 0.0
    if rest > 0.0:
        z_cross = rk4_step(lambda s, w: loop(s, w, hold, held), t_cross, z_cross, rest)
    return z_cross, held, True


def _run(n: int, loop, z0: np.ndarray, observe: Callable,
         funnel: FunnelBounds, config: SimConfig) -> Tuple[Trajectory, ViolationReport]:
    """
    Shared stepping loop.  loop is a StateLoop or OutputLoop,
    observe(t, z, hold) returns the diagnostics dict of one instant.
    """
    h = config.step
    N = config.n_steps
    per_hold = config.steps_per_hold
    stride = int(config.record_stride)
    report = ViolationReport()
    rec = _Recorder(n)
    z = z0
    sliding = False

    for i in range(N + 1):
        t = i * h
        hold = i // per_hold
        if not np.all(np.isfinite(z)):
            report.counts["non_finite"].hit(t)
            logger.error("non-finite state at t=%.6g, run aborted", t)
            break
        obs = observe(t, z, hold)
        report.steps += 1

        margin = funnel.margin(obs["xi"], t)
        report.note_margin("funnel", margin)
        in_funnel = margin > 0.0
        if not in_funnel:
            report.counts["funnel"].hit(t)
        if obs["clamped"]:
            report.counts["clamp"].hit(t)
        in_x, in_u, in_y = _check_sets(report, config.sets, t, obs["xPx"], obs["p0u2"], obs["p1y2"])
        report.sup_V1 = max(report.sup_V1, obs["V1"])
        report.eps_drift = max(report.eps_drift, abs(obs["eps_int"] - obs["eps"]))

        if i % stride == 0 or i == N:
            rec.add(t=t, x=obs["x"], y=obs["y"], u1=obs["u1"], u2=obs["u2"], u=obs["u"],
                    xi=obs["xi"], eps=obs["eps"], eps_int=obs["eps_int"], f=obs["f"],
                    V1=obs["V1"], V2=obs["V2"], in_funnel=in_funnel,
                    in_X=in_x, in_U=in_u, in_Y=in_y)
        if i < N:
            z, sliding, crossed = advance(loop, t, z, h, hold, sliding)
            report.u2_crossings += crossed
            report.sliding_steps += sliding

    logger.debug("u2 crossed 0 %d times, held at 0 for %d steps",
                 report.u2_crossings, report.sliding_steps)
    if not report.passed:
        logger.warning("run finished with violations: %s",
                       {k: c.count for k, c in report.counts.items() if c.count})
    return rec.build(), report


def _noise_source(config: SimConfig):
    if config.disturbance is None:
        return lambda t, hold: 0.0
    gen = DisturbanceGenerator(config.disturbance.with_seed(config.seed))
    return lambda t, hold: gen(t, hold_index=hold, right_limit=True)


def _initial_inside(funnel: FunnelBounds, xi0: float) -> None:
    if not funnel.contains(xi0, 0.0):
        lo, hi = funnel.bounds(0.0)
        raise ConfigError(f"initial xi={xi0:.6g} is not strictly inside ({lo:.6g}, {hi:.6g})")


def _sign0(v: float) -> float:
    if v > 0:
        return 1.0
    if v < 0:
        return -1.0
    return 0.0


# ------------------------------------------------------------
# Joint vector fields
# ------------------------------------------------------------

class StateLoop:
    """
    d/dt [x; u2; eps_int] under state feedback, with the law's matrices
    unpacked once.  loop(t, z, hold, held=True) is the field with u2
    pinned at 0.  switching() is the bracket of the u2 law at u2 = 0.
    """

    def __init__(self, plant: StatePlant, law: StateFeedbackLaw, noise: Callable):
        w = law.weights
        self.n = plant.n
        self.u2_index = plant.n
        self.spec = law.transform
        self.noise = noise
        self._A = plant.A
        self._b = plant.B[:, 0].copy()
        self._d = plant.D[:, 0].copy()
        self._k = law.K[0].copy()
        self._Pb = law.P1_bar.entries
        self._Ab = law.A_bar
        self._alpha = float(law.alpha)
        self._p3 = w.p3
        self._delta = w.delta
        self._mu = w.mu

    def _bracket(self, t: float, x: np.ndarray, u2: float):
        Px = self._Pb @ x
        r = abs(u2) + self._delta
        eps, _ = phi_inv_clamped(self.spec, float(x @ Px) + self._p3 * r * r, t)
        bracket = (
            self._alpha * eps
            + 2.0 * float(Px @ (self._Ab @ x))
            + 2.0 * float(Px @ self._b) * u2
            + self._mu * _sign0(eps) * float(Px @ Px)
        )
        return Px, eps, bracket

    def switching(self, t: float, z: np.ndarray, hold: int) -> float:
        return self._bracket(t, z[:self.n], 0.0)[2]

    def __call__(self, t: float, z: np.ndarray, hold: int, held: bool = False) -> np.ndarray:
        n = self.n
        x = z[:n]
        u2 = 0.0 if held else float(z[n])
        Px, eps, bracket = self._bracket(t, x, u2)
        x_dot = self._A @ x + self._b * (float(self._k @ x) + u2) + self._d * self.noise(t, hold)
        xi_dot = 2.0 * float(Px @ x_dot)
        u2_dot = 0.0
        if not held:
            r = abs(u2) + self._delta
            u2_dot = -2.0 / (self._p3 * r) * (-1.0 if u2 < 0 else 1.0) * bracket
            xi_dot += 2.0 * self._p3 * r * _sign0(u2) * u2_dot
        out = np.empty(n + 2)
        out[:n] = x_dot
        out[n] = u2_dot
        out[n + 1] = eps_dot_reference(self.spec, xi_dot, eps, t)
        return out


class OutputLoop:
    """d/dt [x; u2; z_f; eps_int] under output feedback, same calling convention as StateLoop."""

    def __init__(self, plant: OutputPlant, law: OutputFeedbackLaw, noise: Callable):
        w = law.weights
        filt = law.filter
        self.n = plant.n
        self.m = filt.order
        self.u2_index = plant.n
        self.spec = law.transform
        self.noise = noise
        self._A = plant.base.A
        self._b = plant.base.B[:, 0].copy()
        self._d = plant.base.D[:, 0].copy()
        self._l = plant.L[0].copy()
        self._k = float(law.k)
        self._Af = filt.A_f
        self._bf = filt.B_f[:, 0].copy()
        self._cf = filt.C_f[0].copy()
        self._df = float(filt.D_f)
        self._p1 = w.p1
        self._p2 = w.p2
        self._p1_bar = law.p1_bar
        self._alpha = float(law.alpha)
        self._p3 = w.p3
        self._delta = w.delta
        self._mu = w.mu

    def _bracket(self, t: float, x: np.ndarray, zf: np.ndarray, u2: float):
        y = float(self._l @ x)
        u1 = self._k * y
        r = abs(u2) + self._delta
        eps, _ = phi_inv_clamped(self.spec, self._p1 * y * y + self._p2 * u1 * u1 + self._p3 * r * r, t)
        w_f = float(self._cf @ zf) + self._df * u2
        bracket = (
            self._alpha * eps
            + 2.0 * self._p1_bar * y * w_f
            + self._mu * self._p1_bar ** 2 * _sign0(eps) * y * y
        )
        return y, eps, bracket

    def switching(self, t: float, z: np.ndarray, hold: int) -> float:
        n = self.n
        return self._bracket(t, z[:n], z[n + 1:n + 1 + self.m], 0.0)[2]

    def __call__(self, t: float, z: np.ndarray, hold: int, held: bool = False) -> np.ndarray:
        n, m = self.n, self.m
        x = z[:n]
        zf = z[n + 1:n + 1 + m]
        u2 = 0.0 if held else float(z[n])
        y, eps, bracket = self._bracket(t, x, zf, u2)
        x_dot = self._A @ x + self._b * (self._k * y + u2) + self._d * self.noise(t, hold)
        xi_dot = 2.0 * self._p1_bar * y * float(self._l @ x_dot)
        u2_dot = 0.0
        if not held:
            r = abs(u2) + self._delta
            u2_dot = -2.0 / (self._p3 * r) * (-1.0 if u2 < 0 else 1.0) * bracket
            xi_dot += 2.0 * self._p3 * r * _sign0(u2) * u2_dot
        out = np.empty(n + m + 2)
        out[:n] = x_dot
        out[n] = u2_dot
        out[n + 1:n + 1 + m] = self._Af @ zf + self._bf * u2
        out[-1] = eps_dot_reference(self.spec, xi_dot, eps, t)
        return out


# ------------------------------------------------------------
# Closed-loop runs
# ------------------------------------------------------------

def run_state_feedback(plant: StatePlant, law: StateFeedbackLaw, funnel: FunnelBounds,
                       config: SimConfig) -> Tuple[Trajectory, ViolationReport]:
    n = plant.n
    if len(config.x0) != n:
        raise ConfigError(f"x0 has {len(config.x0)} entries, plant order is {n}")
    spec = law.transform
    noise = _noise_source(config)
    w = law.weights
    H = config.H.entries if config.H is not None else None

    x0 = np.array(config.x0)
    xi0 = law.xi(x0, law.u2_init)
    _initial_inside(funnel, xi0)
    eps0, _ = phi_inv_clamped(spec, xi0, 0.0)

    def observe(t, z, hold):
        x, u2 = z[:n].copy(), float(z[n])
        u1 = law.u1(x)
        u = u1 + u2
        xi = law.xi(x, u2)
        eps, clamped = phi_inv_clamped(spec, xi, t)
        return {
            "x": x, "y": math.nan, "u1": u1, "u2": u2, "u": u, "xi": xi,
            "eps": eps, "eps_int": float(z[n + 1]), "f": noise(t, hold),
            "clamped": clamped, "V1": 0.5 * eps * eps,
            "V2": float(x @ H @ x) if H is not None else math.nan,
            "xPx": w.P1.quad(x), "p0u2": w.p0 * u * u, "p1y2": None,
        }

    z0 = np.concatenate([x0, [law.u2_init, eps0]])
    return _run(n, StateLoop(plant, law, noise), z0, observe, funnel, config)


def run_output_feedback(plant: OutputPlant, law: OutputFeedbackLaw, funnel: FunnelBounds,
                        config: SimConfig) -> Tuple[Trajectory, ViolationReport]:
    n = plant.n
    if len(config.x0) != n:
        raise ConfigError(f"x0 has {len(config.x0)} entries, plant order is {n}")
    spec = law.transform
    m = law.filter.order
    noise = _noise_source(config)
    w = law.weights
    Lrow = plant.L[0]
    H = config.H.entries if config.H is not None else None

    x0 = np.array(config.x0)
    xi0 = law.xi(plant.output(x0), law.u2_init)
    _initial_inside(funnel, xi0)
    eps0, _ = phi_inv_clamped(spec, xi0, 0.0)

    def observe(t, z, hold):
        x, u2 = z[:n].copy(), float(z[n])
        y = float(Lrow @ x)
        u1 = law.u1(y)
        u = u1 + u2
        xi = law.xi(y, u2)
        eps, clamped = phi_inv_clamped(spec, xi, t)
        return {
            "x": x, "y": y, "u1": u1, "u2": u2, "u": u, "xi": xi,
            "eps": eps, "eps_int": float(z[-1]), "f": noise(t, hold),
            "clamped": clamped, "V1": 0.5 * eps * eps,
            "V2": float(x @ H @ x) if H is not None else math.nan,
            "xPx": None, "p0u2": w.p0 * u * u, "p1y2": w.p1 * y * y,
        }

    z0 = np.concatenate([x0, [law.u2_init], np.zeros(m), [eps0]])
    return _run(n, OutputLoop(plant, law, noise), z0, observe, funnel, config)


# ------------------------------------------------------------
# Convergence and batches
# ------------------------------------------------------------

@dataclass
class ConvergenceRow:
    step: float
    error: float
    ratio: Optional[float]


@dataclass
class ConvergenceTable:
    rows: List[ConvergenceRow]

    @property
    def ratios(self) -> List[float]:
        return [r.ratio for r in self.rows if r.ratio is not None]

    @property
    def observed_order(self) -> float:
        ratios = [r for r in self.ratios if r > 0 and math.isfinite(r)]
        if not ratios:
            return math.nan
        return float(np.mean(np.log2(ratios)))


def convergence_study(run: Callable[[float], np.ndarray], steps: Sequence[float],
                      reference: Optional[np.ndarray] = None) -> ConvergenceTable:
    """
    run(step) -> terminal state.  Without a reference the error of each
    step is measured against the next finer run (self-convergence).
    """
    steps = [float(s) for s in steps]
    if len(steps) < 3:
        raise ConfigError("convergence study needs at least 3 step sizes")
    for a, b in zip(steps, steps[1:]):
        if abs(a / b - 2.0) > 1e-9:
            raise ConfigError("step sizes must halve")

    finals = [np.asarray(run(s), dtype=float) for s in steps]
    if reference is not None:
        errors = [float(np.max(np.abs(f - reference))) for f in finals]
        pairs = list(zip(steps, errors))
    else:
        errors = [float(np.max(np.abs(a - b))) for a, b in zip(finals, finals[1:])]
        pairs = list(zip(steps[:-1], errors))

    rows: List[ConvergenceRow] = []
    for i, (s, e) in enumerate(pairs):
        ratio = None
        if i > 0:
            prev = pairs[i - 1][1]
            ratio = prev / e if e > 0 else math.inf
        rows.append(ConvergenceRow(s, e, ratio))
    for r in rows:
        logger.debug("h=%.3g err=%.3e ratio=%s", r.step, r.error, r.ratio)
    return ConvergenceTable(rows)


def batch_runs(run: Callable[[int], Tuple[Trajectory, ViolationReport]], seeds: Iterable[int],
               workers: int = 4) -> Dict[int, Tuple[Trajectory, ViolationReport]]:
    """Independent runs per seed, merged by seed."""
    seeds = list(seeds)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run, seeds))
    return dict(zip(seeds, results))
