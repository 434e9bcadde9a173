# funnelgate/selftest.py
"""
Embedded invariant suite behind `funnelgate selftest`.  Every check is
seeded so two runs print the same bytes.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from funnelgate.controller import realize_filter
from funnelgate.funnel_transform import (
    BoundCurve,
    FunnelBounds,
    TransformKind,
    TransformSpec,
    phi,
    phi_inv,
)
from funnelgate.lmi_cert import Certificate, alpha_floor, eps_taus, verify
from funnelgate.matrix_kernel import (
    Polynomial,
    SymMatrix,
    is_negative_semidefinite,
    max_eigenvalue,
    nsd_by_minors,
)
from funnelgate.plant import DisturbanceGenerator, DisturbanceSpec

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCES = {
    "round_trip": 1e-9,
    "nsd_boundary": 1e-9,
    "filter": 1e-8,
    "disturbance_bound": 0.22,
}

# tanh saturates in double precision much earlier than the other two
EPS_RANGE = {
    TransformKind.RATIONAL: 50.0,
    TransformKind.TANH_HALF: 10.0,
    TransformKind.ARCTAN: 50.0,
}


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _funnels() -> List[FunnelBounds]:
    return [
        FunnelBounds(BoundCurve.constant(0.01), BoundCurve.exp_offset(0.9, 0.1, -0.1), gamma=1.475),
        FunnelBounds(BoundCurve.cos_offset(1.0, 1.05, 0.5), BoundCurve.cos_offset(3.5, 4.5, 0.5), gamma=1.75),
    ]


def check_round_trip(tol: Dict[str, float], rng: np.random.Generator, cases: int = 3000) -> CheckResult:
    worst = 0.0
    outside = 0
    funnels = _funnels()
    kinds = list(TransformKind)
    for _ in range(cases):
        kind = kinds[int(rng.integers(len(kinds)))]
        spec = TransformSpec(kind, funnels[int(rng.integers(len(funnels)))])
        eps = float(rng.uniform(-EPS_RANGE[kind], EPS_RANGE[kind]))
        t = float(rng.uniform(0.0, 100.0))
        xi = phi(spec, eps, t)
        lo, hi = spec.funnel.bounds(t)
        if not lo < xi < hi:
            outside += 1
            continue
        worst = max(worst, abs(phi_inv(spec, xi, t) - eps))
    ok = outside == 0 and worst < tol["round_trip"]
    return CheckResult("transform round trip", ok, f"max err {worst:.2e}, outside {outside}")


def check_nsd_oracle(tol: Dict[str, float], rng: np.random.Generator, cases: int = 1000) -> CheckResult:
    disagree = 0
    used = 0
    for _ in range(cases):
        n = int(rng.integers(2, 4))
        a = rng.normal(size=(n, n))
        m = SymMatrix(0.5 * (a + a.T) - float(rng.uniform(0.0, 3.0)) * np.eye(n))
        if abs(max_eigenvalue(m)) < tol["nsd_boundary"]:
            continue
        used += 1
        if is_negative_semidefinite(m) != nsd_by_minors(m):
            disagree += 1
    return CheckResult("eigen vs minors NSD", disagree == 0, f"{used} matrices, {disagree} disagreements")


def check_filter(tol: Dict[str, float], rng: np.random.Generator) -> CheckResult:
    R = Polynomial((1, 2, 1))
    Q_bar = Polynomial((1, 3, 3, 1))
    filt = realize_filter(R, Q_bar)
    worst = 0.0
    for w in np.geomspace(1e-2, 1e2, 10):
        s = 1j * w
        want = s * R(s) / Q_bar(s)
        worst = max(worst, abs(filt.transfer(s) - want))
    return CheckResult("filter pR/Q_bar", worst < tol["filter"], f"max err {worst:.2e} over 10 frequencies")


def check_disturbance(tol: Dict[str, float], rng: np.random.Generator) -> CheckResult:
    grid = np.arange(0.0, 100.0, 0.01)
    worst = 0.0
    same = True
    for seed in range(5):
        spec = DisturbanceSpec(seed=seed)
        a = DisturbanceGenerator(spec).sample(grid)
        b = DisturbanceGenerator(spec).sample(grid)
        same = same and np.array_equal(a, b)
        worst = max(worst, float(np.max(np.abs(a))))
    ok = same and worst <= tol["disturbance_bound"]
    return CheckResult("disturbance bound", ok, f"max |f| {worst:.4f}, deterministic {same}")


def check_alpha_floor(tol: Dict[str, float], rng: np.random.Generator) -> CheckResult:
    from funnelgate.scenarios import example2

    problem = example2().problem()
    floor = alpha_floor(problem)
    taus = eps_taus(problem, 1.01 * floor)
    if taus is None:
        return CheckResult("eps group above floor", False, f"no taus at 1.01 x {floor:.4g}")
    cert = Certificate(1.01 * floor, taus + (1.0, 1.0), SymMatrix(np.eye(problem.n)))
    ok = verify(problem, cert).eps_group and eps_taus(problem, 0.99 * floor) is None
    return CheckResult("eps group above floor", ok, f"floor {floor:.4f}")


CHECKS: List[Callable] = [
    check_round_trip,
    check_nsd_oracle,
    check_filter,
    check_disturbance,
    check_alpha_floor,
]


def run_selftest(seed: int = 0, tolerances: Optional[Dict[str, float]] = None,
                 out: Callable[[str], None] = print) -> bool:
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    results = []
    for check in CHECKS:
        rng = np.random.default_rng(seed)
        try:
            results.append(check(tol, rng))
        except Exception as e:  # a crashing check is a failing check
            logger.exception("selftest %s crashed", check.__name__)
            results.append(CheckResult(check.__name__, False, f"crashed: {e}"))

    out("========================================")
    out("  funnelgate self-test")
    out("========================================")
    for r in results:
        out(f"  {'PASS' if r.passed else 'FAIL':<5} {r.name:<24} {r.detail}")
    passed = all(r.passed for r in results)
    out("")
    out(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return passed
