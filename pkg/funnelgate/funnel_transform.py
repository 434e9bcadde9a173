"""
The constraint funnel (lower(t), upper(t)) and the coordinate change

    xi = Phi(eps, t) = (upper - lower)/2 * T(eps) + (upper + lower)/2

with T one of three strictly increasing squashing functions into (-1, 1).
Closed forms for Phi, its inverse and both partial derivatives.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Tuple

import numpy as np

from funnelgate.config import AUDIT_GRID_STEP, GAMMA_AUDIT_RTOL, INVERSE_CLAMP
from funnelgate.errors import ConfigError, FunnelDomainError

logger = logging.getLogger(__name__)


# ------------------------------------------------------------
# Bound curves
# ------------------------------------------------------------

class CurveFamily(str, Enum):
    CONSTANT = "constant"
    EXP_OFFSET = "exp_offset"
    COS_OFFSET = "cos_offset"


@dataclass(frozen=True)
class BoundCurve:
    """
    constant:    a
    exp_offset:  a*exp(c*t) + b
    cos_offset:  a*cos(c*t) + b
    """
    family: CurveFamily
    a: float
    b: float = 0.0
    c: float = 0.0
    check_positive: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "family", CurveFamily(self.family))
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.check_positive and not self.is_positive():
            raise ConfigError(f"bound curve {self} is not positive for all t >= 0")

    @classmethod
    def constant(cls, a: float) -> "BoundCurve":
        return cls(CurveFamily.CONSTANT, a)

    @classmethod
    def exp_offset(cls, a: float, b: float, c: float) -> "BoundCurve":
        return cls(CurveFamily.EXP_OFFSET, a, b, c)

    @classmethod
    def cos_offset(cls, a: float, b: float, c: float) -> "BoundCurve":
        return cls(CurveFamily.COS_OFFSET, a, b, c)

    def value(self, t: float) -> float:
        if self.family is CurveFamily.CONSTANT:
            return self.a
        if self.family is CurveFamily.EXP_OFFSET:
            return self.a * math.exp(self.c * t) + self.b
        return self.a * math.cos(self.c * t) + self.b

    def deriv(self, t: float) -> float:
        if self.family is CurveFamily.CONSTANT:
            return 0.0
        if self.family is CurveFamily.EXP_OFFSET:
            return self.a * self.c * math.exp(self.c * t)
        return -self.a * self.c * math.sin(self.c * t)

    def values(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.family is CurveFamily.CONSTANT:
            return np.full_like(t, self.a)
        if self.family is CurveFamily.EXP_OFFSET:
            return self.a * np.exp(self.c * t) + self.b
        return self.a * np.cos(self.c * t) + self.b

    def derivs(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.family is CurveFamily.CONSTANT:
            return np.zeros_like(t)
        if self.family is CurveFamily.EXP_OFFSET:
            return self.a * self.c * np.exp(self.c * t)
        return -self.a * self.c * np.sin(self.c * t)

    def inf(self) -> float:
        """Infimum over t >= 0, closed form."""
        if self.family is CurveFamily.CONSTANT:
            return self.a
        if self.family is CurveFamily.EXP_OFFSET:
            start = self.a + self.b
            if self.c < 0:
                return min(start, self.b)
            if self.c == 0 or self.a >= 0:
                return start
            return -math.inf
        if self.c == 0:
            return self.a + self.b
        return self.b - abs(self.a)

    def sup(self) -> float:
        if self.family is CurveFamily.CONSTANT:
            return self.a
        if self.family is CurveFamily.EXP_OFFSET:
            start = self.a + self.b
            if self.c < 0:
                return max(start, self.b)
            if self.c == 0 or self.a <= 0:
                return start
            return math.inf
        if self.c == 0:
            return self.a + self.b
        return self.b + abs(self.a)

    def is_positive(self) -> bool:
        lo = self.inf()
        if lo > 0:
            return True
        # a decaying exponential only approaches its offset
        return (
            self.family is CurveFamily.EXP_OFFSET
            and self.c < 0 and self.a > 0 and self.b == 0.0
        )

    def as_dict(self) -> dict:
        return {"family": self.family.value, "a": self.a, "b": self.b, "c": self.c}

    @classmethod
    def from_dict(cls, d: dict) -> "BoundCurve":
        try:
            return cls(CurveFamily(d["family"]), d["a"], d.get("b", 0.0), d.get("c", 0.0))
        except (KeyError, ValueError, TypeError) as e:
            raise ConfigError(f"bad bound curve {d!r}: {e}") from e


def _difference_curve(upper: BoundCurve, lower: BoundCurve):
    """upper - lower as a single curve when both share a family and rate."""
    if upper.family is CurveFamily.CONSTANT and lower.family is CurveFamily.CONSTANT:
        return BoundCurve(CurveFamily.CONSTANT, upper.a - lower.a, check_positive=False)
    if lower.family is CurveFamily.CONSTANT:
        return BoundCurve(upper.family, upper.a, upper.b - lower.a, upper.c, check_positive=False)
    if upper.family is CurveFamily.CONSTANT:
        return BoundCurve(lower.family, -lower.a, upper.a - lower.b, lower.c, check_positive=False)
    if upper.family is lower.family and upper.c == lower.c:
        return BoundCurve(upper.family, upper.a - lower.a, upper.b - lower.b, upper.c, check_positive=False)
    return None


# ------------------------------------------------------------
# Funnel
# ------------------------------------------------------------

@dataclass(frozen=True)
class FunnelBounds:
    lower: BoundCurve
    upper: BoundCurve
    gamma: float
    horizon: float = 100.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ConfigError("gamma must be positive")
        if not self._gap_positive():
            raise ConfigError("upper bound does not stay above the lower bound")
        audited = audit_gamma(self, self.horizon)
        # |a*c| in floating point can land one ulp above the exact bound
        if audited > self.gamma * (1.0 + GAMMA_AUDIT_RTOL):
            raise ConfigError(
                f"gamma={self.gamma} is below the audited sup |dPhi/dt| = {audited:.6g}"
            )

    def _gap_positive(self) -> bool:
        diff = _difference_curve(self.upper, self.lower)
        if diff is not None and diff.is_positive():
            return True
        if self.upper.inf() > self.lower.sup():
            return True
        grid = np.arange(0.0, self.horizon + AUDIT_GRID_STEP, AUDIT_GRID_STEP)
        return bool(np.all(self.upper.values(grid) - self.lower.values(grid) > 0))

    def bounds(self, t: float) -> Tuple[float, float]:
        return self.lower.value(t), self.upper.value(t)

    def contains(self, xi: float, t: float) -> bool:
        lo, hi = self.bounds(t)
        return lo < xi < hi

    def margin(self, xi: float, t: float) -> float:
        """Distance to the nearest bound, negative outside."""
        lo, hi = self.bounds(t)
        return min(xi - lo, hi - xi)

    def as_dict(self) -> dict:
        return {
            "lower": self.lower.as_dict(),
            "upper": self.upper.as_dict(),
            "gamma": self.gamma,
            "horizon": self.horizon,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FunnelBounds":
        try:
            return cls(
                lower=BoundCurve.from_dict(d["lower"]),
                upper=BoundCurve.from_dict(d["upper"]),
                gamma=float(d["gamma"]),
                horizon=float(d.get("horizon", 100.0)),
            )
        except KeyError as e:
            raise ConfigError(f"funnel section missing {e}") from e


def audit_gamma(funnel: FunnelBounds, horizon: float) -> float:
    """
    Grid estimate of sup |dPhi/dt|.  dPhi/dt is affine in T, so the sup over
    |T| < 1 sits at the endpoints T = +-1, i.e. max(|upper'|, |lower'|).
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    grid = np.arange(0.0, horizon + AUDIT_GRID_STEP, AUDIT_GRID_STEP)
    du = np.abs(funnel.upper.derivs(grid))
    dl = np.abs(funnel.lower.derivs(grid))
    return float(np.max(np.maximum(du, dl)))


# ------------------------------------------------------------
# Squashing functions and the transform
# ------------------------------------------------------------

class TransformKind(str, Enum):
    RATIONAL = "rational"
    TANH_HALF = "tanh_half"
    ARCTAN = "arctan"


def _T(kind: TransformKind, eps: float) -> float:
    if kind is TransformKind.RATIONAL:
        return eps / (1.0 + abs(eps))
    if kind is TransformKind.TANH_HALF:
        return math.tanh(0.5 * eps)
    return (2.0 / math.pi) * math.atan(eps)


def _T_prime(kind: TransformKind, eps: float) -> float:
    if kind is TransformKind.RATIONAL:
        return 1.0 / (1.0 + abs(eps)) ** 2
    if kind is TransformKind.TANH_HALF:
        th = math.tanh(0.5 * eps)
        return 0.5 * (1.0 - th * th)
    return (2.0 / math.pi) / (1.0 + eps * eps)


def _T_inv(kind: TransformKind, s: float) -> float:
    if kind is TransformKind.RATIONAL:
        return s / (1.0 - abs(s))
    if kind is TransformKind.TANH_HALF:
        return 2.0 * math.atanh(s)
    return math.tan(0.5 * math.pi * s)


@dataclass(frozen=True)
class TransformSpec:
    kind: TransformKind
    funnel: FunnelBounds

    def __post_init__(self):
        object.__setattr__(self, "kind", TransformKind(self.kind))

    def as_dict(self) -> dict:
        return {"kind": self.kind.value, **self.funnel.as_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "TransformSpec":
        try:
            kind = TransformKind(d.get("kind", TransformKind.TANH_HALF.value))
        except ValueError as e:
            raise ConfigError(str(e)) from e
        return cls(kind, FunnelBounds.from_dict(d))


def eval_T(spec: TransformSpec, eps: float) -> float:
    return _T(spec.kind, float(eps))


def phi(spec: TransformSpec, eps: float, t: float) -> float:
    lo, hi = spec.funnel.bounds(t)
    return 0.5 * (hi - lo) * _T(spec.kind, float(eps)) + 0.5 * (lo + hi)


def _normalized(spec: TransformSpec, xi: float, t: float) -> Tuple[float, float, float]:
    lo, hi = spec.funnel.bounds(t)
    return (2.0 * xi - lo - hi) / (hi - lo), lo, hi


def phi_inv_clamped(spec: TransformSpec, xi: float, t: float) -> Tuple[float, bool]:
    """
    Inverse transform that never raises: s is clamped to +-(1 - 1e-15).
    The flag tells whether clamping was needed (xi on/outside a bound or
    numerically at one).
    """
    s, _, _ = _normalized(spec, float(xi), t)
    limit = 1.0 - INVERSE_CLAMP
    clamped = False
    if not math.isfinite(s):
        s, clamped = 0.0, True
    elif s >= limit:
        s, clamped = limit, True
    elif s <= -limit:
        s, clamped = -limit, True
    return _T_inv(spec.kind, s), clamped


def phi_inv(spec: TransformSpec, xi: float, t: float) -> float:
    lo, hi = spec.funnel.bounds(t)
    if not (lo < xi < hi):
        raise FunnelDomainError(xi, lo, hi, t)
    eps, clamped = phi_inv_clamped(spec, xi, t)
    if clamped:
        logger.warning("inverse transform clamped at t=%.6g (xi=%.17g within 1e-15 of a bound)", t, xi)
    return eps


def dphi_deps(spec: TransformSpec, eps: float, t: float) -> float:
    lo, hi = spec.funnel.bounds(t)
    return 0.5 * (hi - lo) * _T_prime(spec.kind, float(eps))


def dphi_dt(spec: TransformSpec, eps: float, t: float) -> float:
    dl = spec.funnel.lower.deriv(t)
    du = spec.funnel.upper.deriv(t)
    return 0.5 * (du - dl) * _T(spec.kind, float(eps)) + 0.5 * (dl + du)
