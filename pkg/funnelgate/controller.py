"""
Composite control laws u = u1 + u2.

State feedback:  u1 = K x, u2 driven by the dynamic law built around
                 xi = x^T P1 x + p2 u1^2 + p3 (|u2| + delta)^2.
Output feedback: u1 = k y, u2 driven through the biproper filter
                 p R(p) / Q_bar(p), Q_bar = Q - k R.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from funnelgate.config import DEFAULT_U2_INIT
from funnelgate.errors import ConfigError, DegenerateSystemError
from funnelgate.funnel_transform import (
    FunnelBounds,
    TransformSpec,
    dphi_deps,
    dphi_dt,
)
from funnelgate.lmi_cert import CertificateProblem, ProblemKind
from funnelgate.matrix_kernel import Polynomial, SymMatrix, routh_hurwitz
from funnelgate.plant import IOForm, OutputPlant, StatePlant, derive_io_form

logger = logging.getLogger(__name__)


def _sign_pos(v: float) -> float:
    """sign with sign(0) = +1, used for u2 so the law is never inert at 0."""
    return -1.0 if v < 0 else 1.0


def _sign0(v: float) -> float:
    if v > 0:
        return 1.0
    if v < 0:
        return -1.0
    return 0.0


# ------------------------------------------------------------
# Weights
# ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConstraintWeights:
    p0: float
    r: float
    delta: float
    mu: float
    P1: Optional[SymMatrix] = None
    p1: Optional[float] = None
    p2: float = field(init=False)
    p3: float = field(init=False)

    def __post_init__(self):
        for name in ("p0", "r", "delta", "mu"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"weights: {name} must be positive")
        if (self.P1 is None) == (self.p1 is None):
            raise ConfigError("weights: give exactly one of P1 (state) or p1 (output)")
        if self.P1 is not None and not isinstance(self.P1, SymMatrix):
            object.__setattr__(self, "P1", SymMatrix(self.P1))
        if self.p1 is not None and not self.p1 > 0:
            raise ConfigError("weights: p1 must be positive")
        object.__setattr__(self, "p2", self.p0 * (1.0 + self.r))
        object.__setattr__(self, "p3", self.p0 * (1.0 + 1.0 / self.r))

    def as_dict(self) -> dict:
        d = {"p0": self.p0, "r": self.r, "delta": self.delta, "mu": self.mu}
        if self.P1 is not None:
            d["P1"] = self.P1.entries.tolist()
        else:
            d["p1"] = self.p1
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ConstraintWeights":
        try:
            P1 = SymMatrix(np.array(d["P1"], dtype=float)) if "P1" in d else None
            return cls(float(d["p0"]), float(d["r"]), float(d["delta"]), float(d["mu"]),
                       P1=P1, p1=d.get("p1"))
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"bad weights section: {e}") from e

    def __eq__(self, other) -> bool:
        return isinstance(other, ConstraintWeights) and self.as_dict() == other.as_dict()


# ------------------------------------------------------------
# State feedback
# ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StateFeedbackLaw:
    plant: StatePlant
    K: np.ndarray
    weights: ConstraintWeights
    alpha: float
    transform: TransformSpec
    u2_init: float = DEFAULT_U2_INIT
    P1_bar: SymMatrix = field(init=False)
    A_bar: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.weights.P1 is None:
            raise ConfigError("state feedback needs the matrix weight P1")
        K = np.asarray(self.K, dtype=float).reshape(1, self.plant.n)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "P1_bar", SymMatrix(self.weights.P1.entries + self.weights.p2 * (K.T @ K)))
        object.__setattr__(self, "A_bar", self.plant.closed_loop(K))
        if not self.plant.is_stabilized_by(K):
            logger.warning("A + B K is not Hurwitz for K=%s (advisory)", K.tolist())

    def u1(self, x) -> float:
        return float(self.K[0] @ x)

    def xi(self, x, u2: float) -> float:
        return xi_state(self, x, self.u1(x), u2)

    def xi_dot(self, x, u2: float, x_dot, u2_dot: float) -> float:
        w = self.weights
        u1 = self.u1(x)
        return (
            2.0 * float(x @ w.P1.entries @ x_dot)
            + 2.0 * w.p2 * u1 * float(self.K[0] @ x_dot)
            + 2.0 * w.p3 * (abs(u2) + w.delta) * _sign0(u2) * u2_dot
        )

    def certificate_problem(self, beta: float, c: float) -> CertificateProblem:
        f = self.transform.funnel
        return CertificateProblem(
            kind=ProblemKind.STATE_FEEDBACK,
            A_bar=self.A_bar, B=self.plant.B, D=self.plant.D,
            p3=self.weights.p3, w_bar=self.plant.f_bar, gamma=f.gamma,
            inf_g=f.upper.inf(), delta=self.weights.delta, mu=self.weights.mu,
            beta=beta, c=c, P1_bar=self.P1_bar,
        )


def xi_state(law: StateFeedbackLaw, x, u1: float, u2: float) -> float:
    w = law.weights
    x = np.asarray(x, dtype=float)
    return w.P1.quad(x) + w.p2 * u1 * u1 + w.p3 * (abs(u2) + w.delta) ** 2


def xi_state_reduced(law: StateFeedbackLaw, x, u2: float) -> float:
    """x^T P1_bar x + p3 (|u2| + delta)^2, valid when u1 = K x."""
    w = law.weights
    return law.P1_bar.quad(x) + w.p3 * (abs(u2) + w.delta) ** 2


def u2_derivative_state(law: StateFeedbackLaw, x, u2: float, eps: float) -> float:
    w = law.weights
    x = np.asarray(x, dtype=float)
    Pb = law.P1_bar.entries
    Px = Pb @ x
    bracket = (
        law.alpha * eps
        + 2.0 * float(Px @ (law.A_bar @ x))
        + 2.0 * float(Px @ law.plant.B[:, 0]) * u2
        + w.mu * _sign0(eps) * float(Px @ Px)
    )
    return -2.0 / (w.p3 * (abs(u2) + w.delta)) * _sign_pos(u2) * bracket


# ------------------------------------------------------------
# Filter p R(p) / Q_bar(p)
# ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FilterRealization:
    A_f: np.ndarray
    B_f: np.ndarray
    C_f: np.ndarray
    D_f: float

    @property
    def order(self) -> int:
        return self.A_f.shape[0]

    def derivative(self, z, u: float) -> np.ndarray:
        return self.A_f @ z + self.B_f[:, 0] * u

    def output(self, z, u: float) -> float:
        return float(self.C_f[0] @ z) + self.D_f * u

    def transfer(self, s: complex) -> complex:
        n = self.order
        if n == 0:
            return complex(self.D_f)
        sol = np.linalg.solve(s * np.eye(n) - self.A_f, self.B_f[:, 0].astype(complex))
        return complex(self.C_f[0] @ sol) + self.D_f


def realize_filter(R: Polynomial, Q_bar: Polynomial) -> FilterRealization:
    """Controllable canonical realization of p R(p) / Q_bar(p)."""
    num = R.shift()
    d = Q_bar.degree
    if num.degree > d and not num.is_zero():
        raise DegenerateSystemError(
            f"improper filter: deg pR = {num.degree} exceeds deg Q_bar = {d}"
        )
    lead = float(Q_bar.leading)
    if num.is_zero():
        return FilterRealization(
            np.zeros((d, d)), np.zeros((d, 1)), np.zeros((1, d)), 0.0
        )

    D_f = float(num.coefficients[d]) / lead if num.degree == d else 0.0
    rem = num - Q_bar * (num.coefficients[d] / Q_bar.leading if num.degree == d else 0)
    rem_c = [float(c) for c in rem.coefficients] + [0.0] * d
    den = [float(c) / lead for c in Q_bar.coefficients]

    A_f = np.zeros((d, d))
    if d > 1:
        A_f[:-1, 1:] = np.eye(d - 1)
    A_f[-1, :] = [-den[i] for i in range(d)]
    B_f = np.zeros((d, 1))
    B_f[-1, 0] = 1.0
    C_f = np.array([[rem_c[i] / lead for i in range(d)]])
    return FilterRealization(A_f, B_f, C_f, D_f)


# ------------------------------------------------------------
# Output feedback
# ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OutputFeedbackLaw:
    plant: OutputPlant
    k: float
    weights: ConstraintWeights
    alpha: float
    transform: TransformSpec
    u2_init: float = DEFAULT_U2_INIT
    p1_bar: float = field(init=False)
    io: IOForm = field(init=False)
    filter: FilterRealization = field(init=False)
    A_bar: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.weights.p1 is None:
            raise ConfigError("output feedback needs the scalar weight p1")
        object.__setattr__(self, "p1_bar", self.weights.p1 + self.k ** 2 * self.weights.p2)
        io = derive_io_form(self.plant.base.A, self.plant.base.B, self.plant.L, self.k)
        if not routh_hurwitz(io.Q_bar):
            raise ConfigError(f"Q_bar(p) = {io.Q_bar.pretty()} is not Hurwitz; the filter would be unstable")
        object.__setattr__(self, "io", io)
        object.__setattr__(self, "filter", realize_filter(io.R, io.Q_bar))
        object.__setattr__(self, "A_bar", self.plant.closed_loop(self.k))

    def u1(self, y: float) -> float:
        return self.k * y

    def xi(self, y: float, u2: float) -> float:
        w = self.weights
        u1 = self.u1(y)
        return w.p1 * y * y + w.p2 * u1 * u1 + w.p3 * (abs(u2) + w.delta) ** 2

    def xi_dot(self, y: float, u2: float, y_dot: float, u2_dot: float) -> float:
        w = self.weights
        return (
            2.0 * self.p1_bar * y * y_dot
            + 2.0 * w.p3 * (abs(u2) + w.delta) * _sign0(u2) * u2_dot
        )

    def certificate_problem(self, beta: float, c: float) -> CertificateProblem:
        f = self.transform.funnel
        return CertificateProblem(
            kind=ProblemKind.OUTPUT_FEEDBACK,
            A_bar=self.A_bar, B=self.plant.base.B, D=self.plant.base.D,
            p3=self.weights.p3, w_bar=self.plant.phi_hat, gamma=f.gamma,
            inf_g=f.upper.inf(), delta=self.weights.delta, mu=self.weights.mu,
            beta=beta, c=c, p1_bar=self.p1_bar, L=self.plant.L,
        )


def u2_derivative_output(law: OutputFeedbackLaw, y: float, w: float, u2: float, eps: float) -> float:
    wt = law.weights
    bracket = (
        law.alpha * eps
        + 2.0 * law.p1_bar * y * w
        + wt.mu * law.p1_bar ** 2 * _sign0(eps) * y * y
    )
    return -2.0 / (wt.p3 * (abs(u2) + wt.delta)) * _sign_pos(u2) * bracket


# ------------------------------------------------------------
# eps dynamics (verification oracle)
# ------------------------------------------------------------

def eps_dot_reference(transform: TransformSpec, xi_dot: float, eps: float, t: float) -> float:
    """(xi_dot - dPhi/dt) / (dPhi/deps)"""
    return (xi_dot - dphi_dt(transform, eps, t)) / dphi_deps(transform, eps, t)


# ------------------------------------------------------------
# Ellipses for the phase-plane plots
# ------------------------------------------------------------

def ellipse_points(M, level: float, num: int = 400) -> np.ndarray:
    """Points of x^T M x = level in the plane (M 2x2 positive definite)."""
    M = M.entries if isinstance(M, SymMatrix) else np.asarray(M, dtype=float)
    w, v = np.linalg.eigh(M)
    theta = np.linspace(0.0, 2.0 * math.pi, num)
    circle = np.vstack([np.cos(theta), np.sin(theta)])
    return (v @ np.diag(np.sqrt(level / w)) @ circle).T


def input_level_points(weights: ConstraintWeights, level: float, num: int = 400) -> np.ndarray:
    """Closed curve p2 u1^2 + p3 (|u2| + delta)^2 = level in the (u1, u2) plane."""
    top = math.sqrt(level / weights.p3) - weights.delta
    if top <= 0:
        return np.empty((0, 2))
    u2 = np.linspace(-top, top, num // 2)
    u1 = np.sqrt(np.clip((level - weights.p3 * (np.abs(u2) + weights.delta) ** 2) / weights.p2, 0.0, None))
    upper = np.column_stack([u1, u2])
    lower = np.column_stack([-u1[::-1], u2[::-1]])
    return np.vstack([upper, lower, upper[:1]])
