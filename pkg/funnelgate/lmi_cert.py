"""
Certificates for the two composite control laws.

Group 1 (eps block, both vertices v = +-w_bar, plus a scalar side) keeps
eps bounded, hence xi inside the funnel.  Group 2 (H block, H dominance,
scalar side) confines the state to the inner ellipsoid.

For fixed alpha everything is affine in (tau_1..tau_5, H).  Group 1 has a
closed-form tau box.  Group 2 is equivalent, after a Schur complement and
H -> X = H^-1, to a controllability-Gramian bound; the Gramian gives the
starting H and Nelder-Mead over the Cholesky factor of the dominance slack
refines it.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import solve_continuous_lyapunov
from scipy.optimize import minimize

from funnelgate.config import NSD_TOL, PD_TOL
from funnelgate.errors import ConfigError
from funnelgate.matrix_kernel import (
    SymMatrix,
    max_eigenvalue,
    min_eigenvalue,
)

logger = logging.getLogger(__name__)

# margins the search aims for, well inside the verify tolerance
TARGET_MARGIN = 1e-8
ALPHA_GRID = np.geomspace(1e-2, 1e4, 121)


class ProblemKind(str, Enum):
    STATE_FEEDBACK = "state_feedback"
    OUTPUT_FEEDBACK = "output_feedback"


@dataclass(frozen=True, eq=False)
class CertificateProblem:
    kind: ProblemKind
    A_bar: np.ndarray
    B: np.ndarray
    D: np.ndarray
    p3: float
    w_bar: float            # f_bar (state case) or phi_hat (output case)
    gamma: float
    inf_g: float            # inf over t of the upper bound
    delta: float
    mu: float
    beta: float
    c: float
    P1_bar: Optional[SymMatrix] = None   # state case
    p1_bar: Optional[float] = None       # output case
    L: Optional[np.ndarray] = None       # output case

    def __post_init__(self):
        object.__setattr__(self, "kind", ProblemKind(self.kind))
        n = np.asarray(self.A_bar).shape[0]
        object.__setattr__(self, "A_bar", np.asarray(self.A_bar, dtype=float).reshape(n, n))
        object.__setattr__(self, "B", np.asarray(self.B, dtype=float).reshape(n, 1))
        object.__setattr__(self, "D", np.asarray(self.D, dtype=float).reshape(n, 1))
        if self.kind is ProblemKind.STATE_FEEDBACK:
            if self.P1_bar is None:
                raise ConfigError("state-feedback problem needs P1_bar")
        else:
            if self.p1_bar is None or self.L is None:
                raise ConfigError("output-feedback problem needs p1_bar and L")
            object.__setattr__(self, "L", np.asarray(self.L, dtype=float).reshape(1, n))
        for name in ("delta", "mu", "beta", "p3", "inf_g"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.w_bar < 0 or self.gamma < 0 or self.c < 0:
            raise ConfigError("w_bar, gamma and c must be nonnegative")

    @property
    def n(self) -> int:
        return self.A_bar.shape[0]

    @property
    def vertex_values(self) -> Tuple[float, float]:
        return (self.w_bar, -self.w_bar)

    @property
    def cross_gain(self) -> float:
        """D^T D in the state case, 1 in the output case."""
        if self.kind is ProblemKind.STATE_FEEDBACK:
            return float(self.D[:, 0] @ self.D[:, 0])
        return 1.0

    @property
    def dominance_floor(self) -> SymMatrix:
        if self.kind is ProblemKind.STATE_FEEDBACK:
            return self.P1_bar
        return SymMatrix(self.p1_bar * (self.L.T @ self.L))

    @property
    def ellipse_scale(self) -> float:
        """lambda_min(P1_bar) or p1_bar, the divisor in the second scalar side."""
        if self.kind is ProblemKind.STATE_FEEDBACK:
            return min_eigenvalue(self.P1_bar)
        return float(self.p1_bar)

    @property
    def h_budget(self) -> float:
        return self.inf_g / self.ellipse_scale * self.beta


@dataclass(frozen=True, eq=False)
class Certificate:
    alpha: float
    taus: Tuple[float, float, float, float, float]
    H: SymMatrix

    def __post_init__(self):
        taus = tuple(float(t) for t in self.taus)
        if len(taus) != 5:
            raise ConfigError(f"certificate needs 5 taus, got {len(taus)}")
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "alpha", float(self.alpha))
        if not isinstance(self.H, SymMatrix):
            object.__setattr__(self, "H", SymMatrix(self.H))

    def is_well_formed(self) -> bool:
        return (
            self.alpha > 0
            and all(t > 0 for t in self.taus)
            and min_eigenvalue(self.H) > PD_TOL
        )

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "tau": list(self.taus),
            "H": self.H.entries.tolist(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "Certificate":
        try:
            return cls(float(d["alpha"]), tuple(d["tau"]), SymMatrix(np.array(d["H"], dtype=float)))
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"bad certificate document: {e}") from e

    def save(self, path: Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "Certificate":
        try:
            return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read certificate {path}: {e}") from e


# ------------------------------------------------------------
# Assembly
# ------------------------------------------------------------

def assemble_eps_block(problem: CertificateProblem, cert: Certificate, v: float) -> SymMatrix:
    """3x3 block in the coordinates z = (eps, f or phi_bar, dPhi/dt)."""
    t1, t2, t3, _, _ = cert.taus
    off = 0.5 * v / problem.mu * problem.cross_gain
    return SymMatrix(np.array([
        [-cert.alpha + 0.5 * t1, off, -0.5],
        [off, -t2, 0.0],
        [-0.5, 0.0, -t3],
    ]))


def assemble_H_block(problem: CertificateProblem, cert: Certificate) -> SymMatrix:
    n = problem.n
    H = cert.H.entries
    if H.shape != (n, n):
        raise ConfigError(f"H has order {H.shape[0]}, A_bar has order {n}")
    _, _, _, t4, t5 = cert.taus
    top = problem.A_bar.T @ H + H @ problem.A_bar + problem.beta * H
    hb = H @ problem.B
    hd = H @ problem.D
    block = np.zeros((n + 2, n + 2))
    block[:n, :n] = top
    block[:n, n:n + 1] = hb
    block[n:n + 1, :n] = hb.T
    block[:n, n + 1:n + 2] = hd
    block[n + 1:n + 2, :n] = hd.T
    block[n, n] = -t4
    block[n + 1, n + 1] = -t5
    return SymMatrix(block)


def _scalar_slacks(problem: CertificateProblem, cert: Certificate) -> Tuple[float, float]:
    t1, t2, t3, t4, t5 = cert.taus
    w2 = problem.w_bar ** 2
    eps_side = problem.c * t1 - (w2 * t2 + problem.gamma ** 2 * t3)
    h_side = problem.h_budget - (problem.inf_g / problem.p3 * t4 + w2 * t5)
    return eps_side, h_side


def check_scalar_side(problem: CertificateProblem, cert: Certificate) -> bool:
    eps_side, h_side = _scalar_slacks(problem, cert)
    return eps_side >= 0.0 and h_side >= 0.0


def check_H_dominance(problem: CertificateProblem, cert: Certificate) -> bool:
    return min_eigenvalue(cert.H - problem.dominance_floor) >= -PD_TOL


# ------------------------------------------------------------
# Verification
# ------------------------------------------------------------

@dataclass
class VerifyReport:
    feasible: bool
    eps_group: bool
    h_group: bool
    well_formed: bool
    margins: Dict[str, float] = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "eps_group": self.eps_group,
            "h_group": self.h_group,
            "well_formed": self.well_formed,
            "margins": dict(self.margins),
            "notes": list(self.notes),
        }


def verify(problem: CertificateProblem, cert: Certificate) -> VerifyReport:
    margins: Dict[str, float] = {}
    for v, label in zip(problem.vertex_values, ("eps_block_plus", "eps_block_minus")):
        margins[label] = max_eigenvalue(assemble_eps_block(problem, cert, v))
    margins["h_block"] = max_eigenvalue(assemble_H_block(problem, cert))
    eps_side, h_side = _scalar_slacks(problem, cert)
    margins["scalar_eps_slack"] = eps_side
    margins["scalar_h_slack"] = h_side
    margins["dominance_min_eig"] = min_eigenvalue(cert.H - problem.dominance_floor)
    margins["H_min_eig"] = min_eigenvalue(cert.H)

    alpha_ok = cert.alpha > 0 and all(t > 0 for t in cert.taus[:3])
    eps_group = (
        alpha_ok
        and margins["eps_block_plus"] <= NSD_TOL
        and margins["eps_block_minus"] <= NSD_TOL
        and eps_side >= 0.0
    )
    h_group = (
        all(t > 0 for t in cert.taus[3:])
        and margins["H_min_eig"] > PD_TOL
        and margins["h_block"] <= NSD_TOL
        and h_side >= 0.0
        and margins["dominance_min_eig"] >= -PD_TOL
    )
    well_formed = cert.is_well_formed()
    return VerifyReport(
        feasible=bool(eps_group and h_group and well_formed),
        eps_group=bool(eps_group),
        h_group=bool(h_group),
        well_formed=bool(well_formed),
        margins=margins,
    )


# ------------------------------------------------------------
# Group 1: closed-form tau box
# ------------------------------------------------------------

def _eps_coupling(problem: CertificateProblem) -> float:
    return 0.5 * problem.w_bar / problem.mu * problem.cross_gain


def alpha_floor(problem: CertificateProblem) -> float:
    """
    Smallest alpha for which group 1 is solvable:
    min over tau of 0.5 tau_1 + a^2/tau_2 + 0.25/tau_3 with
    c tau_1 = w^2 tau_2 + gamma^2 tau_3.
    """
    if problem.c <= 0:
        return math.inf if problem.gamma > 0 or problem.w_bar > 0 else 0.0
    a = _eps_coupling(problem)
    c = problem.c
    return math.sqrt(2.0 / c) * problem.w_bar * a + problem.gamma / math.sqrt(2.0 * c)


def eps_taus(problem: CertificateProblem, alpha: float) -> Optional[Tuple[float, float, float]]:
    """tau_1..tau_3 making group 1 hold strictly at this alpha, or None."""
    if problem.c <= 0:
        return None
    a = _eps_coupling(problem)
    w, g, c = problem.w_bar, problem.gamma, problem.c

    if a > 0 and w > 0:
        t2 = a * math.sqrt(2.0 * c) / w
    else:
        t2 = 1e-6 if w > 0 else 1.0
    t3 = math.sqrt(0.5 * c) / g if g > 0 else 1e6

    low = (w * w * t2 + g * g * t3) / c
    room = 2.0 * (alpha - a * a / t2 - 0.25 / t3)
    if room <= low:
        return None
    t1 = max(0.5 * (low + room), 1e-12)
    return t1, t2, t3


# ------------------------------------------------------------
# Group 2: Gramian start + Nelder-Mead refinement
# ------------------------------------------------------------

def _split_taus(problem: CertificateProblem, share: float) -> Tuple[float, float]:
    """Spend the second scalar budget: share to tau_4, the rest to tau_5."""
    budget = problem.h_budget * (1.0 - 1e-9)
    t4 = share * budget * problem.p3 / problem.inf_g
    w2 = problem.w_bar ** 2
    t5 = (1.0 - share) * budget / w2 if w2 > 0 else 1e6
    return t4, t5


def gramian_ratio(problem: CertificateProblem, share: float, ridge: float = 0.0):
    """
    Group 2 holds for (tau_4, tau_5) iff X = H^-1 can sit above the Gramian
    W of (A_bar + beta/2 I, [B/sqrt(tau_4), D/sqrt(tau_5)]) and below the
    dominance floor.  Returns (ratio, X); ratio <= 1 is required.
    """
    t4, t5 = _split_taus(problem, share)
    n = problem.n
    shifted = problem.A_bar + 0.5 * problem.beta * np.eye(n)
    if np.max(np.linalg.eigvals(shifted).real) >= 0:
        return math.inf, None
    q = problem.B @ problem.B.T / t4 + problem.D @ problem.D.T / t5 + ridge * np.eye(n)
    X = solve_continuous_lyapunov(shifted, -q)
    X = 0.5 * (X + X.T)
    if problem.kind is ProblemKind.STATE_FEEDBACK:
        P = problem.P1_bar.entries
        ratio = float(np.max(np.linalg.eigvals(P @ X).real))
    else:
        ratio = float(problem.p1_bar * (problem.L @ X @ problem.L.T)[0, 0])
    return ratio, X


def best_gramian_split(problem: CertificateProblem, shares: Sequence[float] = None):
    shares = np.linspace(0.01, 0.99, 99) if shares is None else shares
    best = (math.inf, None)
    for share in shares:
        ratio, _ = gramian_ratio(problem, float(share))
        if ratio < best[0]:
            best = (ratio, float(share))
    return best


def _h_candidate_from_gramian(problem: CertificateProblem) -> Optional[Tuple[np.ndarray, float]]:
    ratio, share = best_gramian_split(problem)
    if share is None or ratio >= 1.0:
        return None
    # a ridge makes the Lyapunov inequality strict without leaving the floor
    scale = max(float(np.trace(problem.B @ problem.B.T + problem.D @ problem.D.T)), 1.0)
    for rel in (1e-2, 1e-3, 1e-4, 1e-6):
        r, X = gramian_ratio(problem, share, ridge=rel * scale)
        if X is not None and r < 1.0:
            H = np.linalg.inv(X)
            return 0.5 * (H + H.T), share
    return None


def _pack(problem: CertificateProblem, params: np.ndarray) -> Tuple[np.ndarray, float]:
    n = problem.n
    C = np.zeros((n, n))
    C[np.tril_indices(n)] = params[:-1]
    share = 1.0 / (1.0 + math.exp(-float(np.clip(params[-1], -50, 50))))
    H = problem.dominance_floor.entries + C @ C.T
    return H, share


def _unpack_start(problem: CertificateProblem, H: np.ndarray, share: float) -> np.ndarray:
    slack = H - problem.dominance_floor.entries
    w, v = np.linalg.eigh(0.5 * (slack + slack.T))
    w = np.clip(w, 1e-12, None)
    C = np.linalg.cholesky(v @ np.diag(w) @ v.T + 1e-14 * np.eye(problem.n))
    share = min(max(share, 1e-6), 1 - 1e-6)
    return np.concatenate([C[np.tril_indices(problem.n)], [math.log(share / (1 - share))]])


def _h_objective(problem: CertificateProblem, params: np.ndarray) -> float:
    H, share = _pack(problem, params)
    t4, t5 = _split_taus(problem, share)
    trial = Certificate(1.0, (1.0, 1.0, 1.0, t4, t5), SymMatrix(H))
    block = assemble_H_block(problem, trial).entries
    worst = float(np.linalg.eigvalsh(block)[-1])
    h_min = float(np.linalg.eigvalsh(H)[0])
    if h_min <= PD_TOL:
        worst += 1.0 + (PD_TOL - h_min)
    return worst


def _nelder_mead_restart(problem: CertificateProblem, start: np.ndarray, maxiter: int):
    res = minimize(
        lambda p: _h_objective(problem, p),
        start,
        method="Nelder-Mead",
        options={"maxiter": maxiter, "xatol": 1e-12, "fatol": 1e-14},
    )
    return float(res.fun), np.asarray(res.x)


def search_h(problem: CertificateProblem, seed: int = 0, restarts: int = 6,
             maxiter: int = 2000, workers: int = 4):
    """Returns (H, tau_4, tau_5) or None."""
    cand = _h_candidate_from_gramian(problem)
    starts = []
    if cand is not None:
        H, share = cand
        t4, t5 = _split_taus(problem, share)
        trial = Certificate(1.0, (1.0, 1.0, 1.0, t4, t5), SymMatrix(H))
        if _h_group_ok(problem, trial):
            logger.debug("H group solved by the Gramian construction (share %.3f)", share)
            return H, t4, t5
        starts.append(_unpack_start(problem, H, share))

    # H = lambda * floor scans, then seeded random perturbations
    rng = np.random.default_rng(seed)
    floor = problem.dominance_floor.entries
    base = floor if min_eigenvalue(problem.dominance_floor) > PD_TOL else floor + np.eye(problem.n)
    for lam in (1.05, 1.5, 2.0, 4.0, 8.0):
        starts.append(_unpack_start(problem, lam * base, 0.5))
    dim = problem.n * (problem.n + 1) // 2 + 1
    seeded = len(starts)
    for i in range(restarts):
        starts.append(starts[i % seeded] + rng.normal(0.0, 0.3, dim))

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda s: _nelder_mead_restart(problem, s, maxiter), starts))

    # merged by restart index: the first verified winner counts
    for idx, (fun, x) in enumerate(results):
        if fun > -TARGET_MARGIN:
            continue
        H, share = _pack(problem, x)
        t4, t5 = _split_taus(problem, share)
        trial = Certificate(1.0, (1.0, 1.0, 1.0, t4, t5), SymMatrix(H))
        if _h_group_ok(problem, trial):
            logger.debug("H group solved by Nelder-Mead restart %d (lambda_max %.3g)", idx, fun)
            return H, t4, t5
    return None


def _h_group_ok(problem: CertificateProblem, trial: Certificate) -> bool:
    report = verify(problem, trial)
    return report.h_group and report.margins["h_block"] <= -TARGET_MARGIN


# ------------------------------------------------------------
# Search
# ------------------------------------------------------------

@dataclass
class SearchResult:
    certificate: Optional[Certificate]
    report: Optional[VerifyReport]
    alpha_floor: float
    gramian_ratio: float
    message: str

    @property
    def found(self) -> bool:
        return self.certificate is not None and self.report is not None and self.report.feasible


def search(problem: CertificateProblem, alpha_hint: Optional[float] = None,
           seed: int = 0, eps_only: bool = False) -> SearchResult:
    """
    alpha is swept over a geometric grid (or fixed by alpha_hint), the eps
    taus come from the closed-form box and H from search_h.  A certificate
    is only handed back after verify accepted it.  With eps_only, group 2
    is not searched and H is set to the dominance floor plus a unit ridge.
    """
    floor = alpha_floor(problem)
    ratio, _ = best_gramian_split(problem)

    if problem.kind is ProblemKind.OUTPUT_FEEDBACK:
        logger.info("second H-block uses A^T H + H A (printed with Q in place of the second H)")

    alphas = [alpha_hint] if alpha_hint is not None else [a for a in ALPHA_GRID if a > floor]
    eps_part = None
    for alpha in alphas:
        taus = eps_taus(problem, float(alpha))
        if taus is not None:
            eps_part = (float(alpha), taus)
            break
    if eps_part is None:
        why = "scalar side unsatisfiable (c = 0)" if problem.c <= 0 else (
            f"no alpha on the grid clears the floor {floor:.6g}" if alpha_hint is None
            else f"alpha={alpha_hint} is below the floor {floor:.6g}")
        return SearchResult(None, None, floor, ratio, f"infeasible (search budget exhausted, not a proof): {why}")

    alpha, (t1, t2, t3) = eps_part
    if eps_only:
        H = problem.dominance_floor.entries + np.eye(problem.n)
        cert = Certificate(alpha, (t1, t2, t3, 1.0, 1.0), SymMatrix(H))
        report = verify(problem, cert)
        return SearchResult(cert if report.eps_group else None, report, floor, ratio,
                            "eps group only" if report.eps_group else "eps group failed")

    h_part = search_h(problem, seed=seed)
    if h_part is None:
        cert = Certificate(alpha, (t1, t2, t3, 1.0, 1.0),
                           SymMatrix(problem.dominance_floor.entries + np.eye(problem.n)))
        report = verify(problem, cert)
        report.notes.append(
            f"H group: no certificate found; best Gramian ratio {ratio:.4g} "
            f"(must stay below 1 for some tau_4/tau_5 split)"
        )
        return SearchResult(None, report, floor, ratio,
                            "infeasible (search budget exhausted, not a proof): H group")

    H, t4, t5 = h_part
    cert = Certificate(alpha, (t1, t2, t3, t4, t5), SymMatrix(H))
    report = verify(problem, cert)
    if not report.feasible:
        return SearchResult(None, report, floor, ratio, "candidate rejected by verify")
    return SearchResult(cert, report, floor, ratio, "feasible")
