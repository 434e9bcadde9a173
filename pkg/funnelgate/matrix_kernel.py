"""
Dense symmetric linear algebra for the certificate checks and the
polynomial (I/O) form of the plant.

Everything here is desk scale: matrices of order 2..8.  Eigenvalues come
from cyclic Jacobi rotations, characteristic polynomials and adjugates
from the Faddeev-LeVerrier recurrence, which stays exact (Fraction
arithmetic) when the input matrix holds integers.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral
from typing import Sequence, Tuple

import numpy as np

from funnelgate.config import JACOBI_MAX_SWEEPS, JACOBI_REL_TOL
from funnelgate.errors import NumericError

logger = logging.getLogger(__name__)


# ------------------------------------------------------------
# Symmetric matrices
# ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SymMatrix:
    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"SymMatrix needs a non-empty square array, got {a.shape}")
        a = 0.5 * (a + a.T)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def order(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def zeros(cls, n: int) -> "SymMatrix":
        return cls(np.zeros((n, n)))

    @classmethod
    def identity(cls, n: int) -> "SymMatrix":
        return cls(np.eye(n))

    def __getitem__(self, idx):
        return self.entries[idx]

    def __add__(self, other: "SymMatrix") -> "SymMatrix":
        return SymMatrix(self.entries + other.entries)

    def __sub__(self, other: "SymMatrix") -> "SymMatrix":
        return SymMatrix(self.entries - other.entries)

    def scaled(self, k: float) -> "SymMatrix":
        return SymMatrix(k * self.entries)

    def quad(self, x) -> float:
        """x^T M x"""
        x = np.asarray(x, dtype=float).reshape(-1)
        return float(x @ self.entries @ x)

    def __eq__(self, other) -> bool:
        return isinstance(other, SymMatrix) and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())


def _as_sym(m) -> SymMatrix:
    return m if isinstance(m, SymMatrix) else SymMatrix(m)


def eigenvalues(m) -> np.ndarray:
    """
    All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi
    sweeps.  Stops once the off-diagonal Frobenius norm drops under
    JACOBI_REL_TOL * ||m||_F.
    """
    a = np.array(_as_sym(m).entries, dtype=float)
    n = a.shape[0]
    scale = np.linalg.norm(a)
    if n == 1 or scale == 0.0:
        return np.sort(np.diagonal(a).copy())

    threshold = JACOBI_REL_TOL * scale

    for sweep in range(JACOBI_MAX_SWEEPS):
        off = float(np.linalg.norm(a - np.diag(np.diagonal(a))))
        if off < threshold:
            return np.sort(np.diagonal(a).copy())

        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q

                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q

                a[p, q] = 0.0
                a[q, p] = 0.0

    raise NumericError(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (order {n})")


def max_eigenvalue(m) -> float:
    return float(eigenvalues(m)[-1])


def min_eigenvalue(m) -> float:
    return float(eigenvalues(m)[0])


def is_negative_semidefinite(m, tol: float = 0.0) -> bool:
    if tol < 0:
        raise ValueError("tol must be >= 0")
    return max_eigenvalue(m) <= tol


def is_positive_definite(m, tol: float = 0.0) -> bool:
    return min_eigenvalue(m) > tol


def nsd_by_minors(m) -> bool:
    """
    Independent NSD decision: -m is PSD iff every principal minor of -m
    is nonnegative.  Only meant for small orders.
    """
    neg = -np.asarray(_as_sym(m).entries)
    n = neg.shape[0]
    for size in range(1, n + 1):
        for idx in itertools.combinations(range(n), size):
            if np.linalg.det(neg[np.ix_(idx, idx)]) < 0.0:
                return False
    return True


# ------------------------------------------------------------
# Polynomials (ascending coefficients)
# ------------------------------------------------------------

def _tidy(c):
    if isinstance(c, Fraction):
        return int(c) if c.denominator == 1 else float(c)
    if isinstance(c, Integral):
        return int(c)
    return float(c)


@dataclass(frozen=True)
class Polynomial:
    coefficients: Tuple = (0,)

    def __post_init__(self):
        coeffs = [_tidy(c) for c in self.coefficients] or [0]
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        object.__setattr__(self, "coefficients", tuple(coeffs))

    @classmethod
    def from_roots(cls, roots: Sequence) -> "Polynomial":
        p = cls((1,))
        for r in roots:
            p = p * cls((-r, 1))
        return p

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def leading(self):
        return self.coefficients[-1]

    def is_zero(self) -> bool:
        return self.coefficients == (0,)

    def is_exact(self) -> bool:
        return all(isinstance(c, int) for c in self.coefficients)

    def __call__(self, s):
        acc = 0
        for c in reversed(self.coefficients):
            acc = acc * s + c
        return acc

    def __add__(self, other: "Polynomial") -> "Polynomial":
        n = max(len(self.coefficients), len(other.coefficients))
        a = self.coefficients + (0,) * (n - len(self.coefficients))
        b = other.coefficients + (0,) * (n - len(other.coefficients))
        return Polynomial(tuple(x + y for x, y in zip(a, b)))

    def __neg__(self) -> "Polynomial":
        return Polynomial(tuple(-c for c in self.coefficients))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            return Polynomial(tuple(c * other for c in self.coefficients))
        out = [0] * (len(self.coefficients) + len(other.coefficients) - 1)
        for i, a in enumerate(self.coefficients):
            for j, b in enumerate(other.coefficients):
                out[i + j] += a * b
        return Polynomial(tuple(out))

    __rmul__ = __mul__

    def shift(self) -> "Polynomial":
        """Multiply by p."""
        if self.is_zero():
            return self
        return Polynomial((0,) + self.coefficients)

    def divmod(self, divisor: "Polynomial") -> Tuple["Polynomial", "Polynomial"]:
        if divisor.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = [Fraction(c) if isinstance(c, int) else c for c in self.coefficients]
        quot = [0] * max(1, len(rem) - divisor.degree)
        lead = divisor.leading
        for k in range(len(rem) - 1 - divisor.degree, -1, -1):
            q = rem[k + divisor.degree] / lead
            quot[k] = q
            for j, d in enumerate(divisor.coefficients):
                rem[k + j] -= q * d
        rem = rem[: max(1, divisor.degree)]
        return Polynomial(tuple(quot)), Polynomial(tuple(rem))

    def as_array(self) -> np.ndarray:
        return np.array(self.coefficients, dtype=float)

    def pretty(self, var: str = "p") -> str:
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.coefficients[k]
            if c == 0 and self.degree > 0:
                continue
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if k == 0:
                body = f"{mag:g}"
            else:
                coef = "" if mag == 1 else f"{mag:g}"
                body = f"{coef}{var}" + (f"^{k}" if k > 1 else "")
            terms.append((sign, body))
        if not terms:
            return "0"
        first_sign, first = terms[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in terms[1:]:
            out += f" {sign} {body}"
        return out


def routh_hurwitz(poly: Polynomial) -> bool:
    """True iff every root of poly lies in the open left half-plane."""
    coeffs = [float(c) for c in reversed(poly.coefficients)]  # descending
    if poly.degree == 0:
        return coeffs[0] != 0.0
    if coeffs[0] < 0:
        coeffs = [-c for c in coeffs]
    if any(c <= 0.0 for c in coeffs):
        return False

    row_a = coeffs[0::2]
    row_b = coeffs[1::2]
    first_col = [row_a[0], row_b[0]]
    for _ in range(poly.degree - 1):
        width = len(row_a)
        row_b = row_b + [0.0] * (width - len(row_b))
        if row_b[0] == 0.0:
            return False
        nxt = [
            (row_b[0] * row_a[i + 1] - row_a[0] * row_b[i + 1]) / row_b[0]
            for i in range(width - 1)
        ] or [0.0]
        row_a, row_b = row_b, nxt
        first_col.append(row_b[0])
    return all(c > 0.0 for c in first_col)


# ------------------------------------------------------------
# Faddeev-LeVerrier
# ------------------------------------------------------------

def _is_integer_matrix(a: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(a)) and np.all(a == np.round(a)))


def _leverrier(a) -> Tuple[list, list]:
    """
    Returns (coefficients ascending, [M_1..M_n]) where
    adj(pI - A) = sum_k M_k p^(n-k).
    """
    arr = np.asarray(a, dtype=float)
    n = arr.shape[0]
    if arr.shape != (n, n):
        raise ValueError(f"square matrix expected, got {arr.shape}")

    exact = _is_integer_matrix(arr)
    if exact:
        mat = [[Fraction(int(v)) for v in row] for row in arr]
    else:
        mat = arr.tolist()
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0

    def matmul(x, y):
        return [[sum((x[i][k] * y[k][j] for k in range(n)), zero) for j in range(n)] for i in range(n)]

    coeffs = [zero] * (n + 1)
    coeffs[n] = one
    ms = []
    prev = [[zero] * n for _ in range(n)]
    for k in range(1, n + 1):
        am = matmul(mat, prev)
        m_k = [[am[i][j] + (coeffs[n - k + 1] if i == j else zero) for j in range(n)] for i in range(n)]
        ms.append(m_k)
        am_k = matmul(mat, m_k)
        trace = sum((am_k[i][i] for i in range(n)), zero)
        coeffs[n - k] = -trace / k
        prev = m_k
    return coeffs, ms


def char_poly(a) -> Polynomial:
    """det(pI - A), monic."""
    coeffs, _ = _leverrier(a)
    return Polynomial(tuple(coeffs))


def numerator_poly(a, b, l) -> Polynomial:
    """L adj(pI - A) B for a single-input single-output triple."""
    arr = np.asarray(a, dtype=float)
    n = arr.shape[0]
    bcol = np.asarray(b, dtype=float).reshape(n)
    lrow = np.asarray(l, dtype=float).reshape(n)
    _, ms = _leverrier(arr)

    exact = _is_integer_matrix(arr) and _is_integer_matrix(bcol) and _is_integer_matrix(lrow)
    conv = (lambda v: Fraction(int(v))) if exact else float

    out = [0] * n
    for k, m_k in enumerate(ms, start=1):
        acc = Fraction(0) if exact else 0.0
        for i in range(n):
            for j in range(n):
                acc += conv(lrow[i]) * (m_k[i][j] if exact else float(m_k[i][j])) * conv(bcol[j])
        out[n - k] = acc
    return Polynomial(tuple(out))
