"""
Plant models: the state-space plant dx/dt = A x + B u + D f, the output
plant with y = L x and its polynomial I/O form Q(p) y = R(p) u + phi,
and the composite disturbance used by both examples.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import List, Optional

import numpy as np

from funnelgate.errors import ConfigError, DegenerateSystemError
from funnelgate.matrix_kernel import (
    Polynomial,
    char_poly,
    numerator_poly,
    routh_hurwitz,
)

logger = logging.getLogger(__name__)


def _matrix(value, rows: Optional[int], cols: Optional[int], name: str) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{name}: not a numeric matrix ({e})") from e
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if cols == 1 else arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ConfigError(f"{name}: expected a 2-d matrix, got shape {arr.shape}")
    if rows is not None and arr.shape[0] != rows:
        raise ConfigError(f"{name}: expected {rows} rows, got {arr.shape[0]}")
    if cols is not None and arr.shape[1] != cols:
        raise ConfigError(f"{name}: expected {cols} columns, got {arr.shape[1]}")
    arr.setflags(write=False)
    return arr


def _plain(arr: np.ndarray):
    """numpy -> nested lists, integers kept as ints for exact round trips."""
    return [[int(v) if float(v).is_integer() else float(v) for v in row] for row in np.asarray(arr)]


# ------------------------------------------------------------
# State plant
# ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StatePlant:
    A: np.ndarray
    B: np.ndarray
    D: np.ndarray
    f_bar: float

    def __post_init__(self):
        a = _matrix(self.A, None, None, "A")
        n = a.shape[0]
        if a.shape != (n, n):
            raise ConfigError(f"A must be square, got {a.shape}")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", _matrix(self.B, n, 1, "B"))
        object.__setattr__(self, "D", _matrix(self.D, n, 1, "D"))
        if not self.f_bar > 0:
            raise ConfigError("f_bar must be positive")
        object.__setattr__(self, "f_bar", float(self.f_bar))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def closed_loop(self, K) -> np.ndarray:
        """A + B K"""
        return self.A + self.B @ np.asarray(K, dtype=float).reshape(1, self.n)

    def is_stabilized_by(self, K) -> bool:
        return routh_hurwitz(char_poly(self.closed_loop(K)))

    def as_dict(self) -> dict:
        return {
            "A": _plain(self.A),
            "B": [row[0] for row in _plain(self.B)],
            "D": [row[0] for row in _plain(self.D)],
            "f_bar": self.f_bar,
        }

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, StatePlant)
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.B, other.B)
            and np.array_equal(self.D, other.D)
            and self.f_bar == other.f_bar
        )


def plant_derivative(plant: StatePlant, x, u: float, f: float) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(plant.n)
    return plant.A @ x + plant.B[:, 0] * u + plant.D[:, 0] * f


# ------------------------------------------------------------
# Output plant and its I/O form
# ------------------------------------------------------------

@dataclass(frozen=True)
class IOForm:
    Q: Polynomial
    R: Polynomial
    Q_bar: Polynomial

    def flag_printed(self, printed: Polynomial) -> Optional[str]:
        """
        Compare a printed Q(p) with the derived one.  Returns a note when they
        differ; a printed value equal to Q_bar is called out explicitly.
        """
        if printed == self.Q:
            return None
        note = f"printed Q(p) = {printed.pretty()} differs from det(pI-A) = {self.Q.pretty()}"
        if printed == self.Q_bar:
            note += f"; it equals Q_bar(p) = Q(p) - k R(p) = {self.Q_bar.pretty()}"
        return note


def _exact_scalar(k: float):
    return int(k) if float(k).is_integer() else float(k)


def derive_io_form(A, B, L, k: float) -> IOForm:
    Q = char_poly(A)
    R = numerator_poly(A, B, L)
    if R.is_zero():
        raise DegenerateSystemError("R(p) is identically zero: no input-output path")
    Q_bar = Q - R * _exact_scalar(k)
    return IOForm(Q=Q, R=R, Q_bar=Q_bar)


@dataclass(frozen=True, eq=False)
class OutputPlant:
    base: StatePlant
    L: np.ndarray
    phi_hat: float
    io: IOForm = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "L", _matrix(self.L, 1, self.base.n, "L"))
        if not self.phi_hat > 0:
            raise ConfigError("phi_hat must be positive")
        object.__setattr__(self, "phi_hat", float(self.phi_hat))
        io = derive_io_form(self.base.A, self.base.B, self.L, 0)
        if io.R.degree >= io.Q.degree:
            raise ConfigError("deg R must be below deg Q")
        if not routh_hurwitz(io.R):
            raise ConfigError(f"plant is not minimum phase: R(p) = {io.R.pretty()}")
        object.__setattr__(self, "io", io)

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def Q(self) -> Polynomial:
        return self.io.Q

    @property
    def R(self) -> Polynomial:
        return self.io.R

    def output(self, x) -> float:
        return float(self.L[0] @ np.asarray(x, dtype=float).reshape(self.n))

    def closed_loop(self, k: float) -> np.ndarray:
        """A + k B L"""
        return self.base.A + k * (self.base.B @ self.L)

    def as_dict(self) -> dict:
        d = self.base.as_dict()
        d["L"] = _plain(self.L)[0]
        d["phi_hat"] = self.phi_hat
        return d

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, OutputPlant)
            and self.base == other.base
            and np.array_equal(self.L, other.L)
            and self.phi_hat == other.phi_hat
        )


# ------------------------------------------------------------
# Disturbance
# ------------------------------------------------------------

@dataclass(frozen=True)
class DisturbanceSpec:
    amplitude: float = 0.1
    square_freq: float = 1.7
    sine_gain: float = 0.2
    sine_freq: float = 0.3
    noise_power: float = 0.3
    sample_time: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not self.sample_time > 0:
            raise ConfigError("disturbance sample_time must be positive")
        if self.noise_power < 0:
            raise ConfigError("disturbance noise_power must be nonnegative")

    @property
    def bound(self) -> float:
        """amplitude * (1 + sine_gain + 1)"""
        return abs(self.amplitude) * (1.0 + abs(self.sine_gain) + 1.0)

    def with_seed(self, seed: int) -> "DisturbanceSpec":
        return replace(self, seed=int(seed))

    def as_dict(self) -> dict:
        return {
            "amplitude": self.amplitude,
            "square_freq": self.square_freq,
            "sine_gain": self.sine_gain,
            "sine_freq": self.sine_freq,
            "noise_power": self.noise_power,
            "sample_time": self.sample_time,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DisturbanceSpec":
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(f"bad disturbance section: {e}") from e


def _sign0(v: float) -> float:
    if v > 0:
        return 1.0
    if v < 0:
        return -1.0
    return 0.0


class DisturbanceGenerator:
    """
    Zero-order-hold band-limited noise: one Gaussian draw with variance
    noise_power / sample_time per hold window, drawn lazily in order from
    one seeded stream, so the path is a pure function of the seed.
    """

    _BLOCK = 1024

    def __init__(self, spec: DisturbanceSpec):
        self.spec = spec
        self._rng = np.random.default_rng(spec.seed)
        self._std = math.sqrt(spec.noise_power / spec.sample_time)
        self._holds: List[float] = []

    def with_seed(self, seed: int) -> "DisturbanceGenerator":
        return DisturbanceGenerator(self.spec.with_seed(seed))

    def hold_index(self, t: float) -> int:
        return int(math.floor(t / self.spec.sample_time + 1e-9))

    def noise(self, index: int) -> float:
        while index >= len(self._holds):
            self._holds.extend(self._rng.normal(0.0, 1.0, self._BLOCK).tolist())
        return self._std * self._holds[index]

    def __call__(self, t: float, hold_index: Optional[int] = None, right_limit: bool = False) -> float:
        """
        right_limit replaces the square wave's value at its switching
        instants (sign(0) = 0) by the value just after them.
        """
        s = self.spec
        idx = self.hold_index(t) if hold_index is None else hold_index
        d = self.noise(idx) if s.noise_power > 0 else 0.0
        sat = min(1.0, max(-1.0, d))
        square = _sign0(math.sin(s.square_freq * t))
        if right_limit and square == 0.0:
            square = _sign0(s.square_freq * math.cos(s.square_freq * t))
        return s.amplitude * (
            square
            + s.sine_gain * math.sin(s.sine_freq * t)
            + sat
        )

    def sample(self, times) -> np.ndarray:
        return np.array([self(float(t)) for t in times])


@lru_cache(maxsize=32)
def _generator_for(spec: DisturbanceSpec) -> DisturbanceGenerator:
    return DisturbanceGenerator(spec)


def disturbance(spec: DisturbanceSpec, t: float) -> float:
    if t < 0:
        raise ValueError("t must be >= 0")
    return _generator_for(spec)(t)


# ------------------------------------------------------------
# JSON documents
# ------------------------------------------------------------

def load_plant(doc: dict):
    """
    {A, B, D, L?, f_bar, phi_hat?, disturbance: {...}} ->
    (StatePlant | OutputPlant, DisturbanceSpec)
    """
    try:
        base = StatePlant(doc["A"], doc["B"], doc["D"], doc["f_bar"])
    except KeyError as e:
        raise ConfigError(f"plant section missing {e}") from e
    dist = DisturbanceSpec.from_dict(doc.get("disturbance", {}))
    if "L" in doc:
        return OutputPlant(base, doc["L"], doc.get("phi_hat", base.f_bar)), dist
    return base, dist


def dump_plant(plant, dist: DisturbanceSpec) -> dict:
    d = plant.as_dict()
    d["disturbance"] = dist.as_dict()
    return d
