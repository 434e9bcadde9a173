# funnelgate/scenarios.py
"""
Run documents: one JSON file with sections
{plant, weights, gains, funnel, certificate?, sim}, plus the built-in
presets for the two worked examples.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from funnelgate.config import DEFAULT_U2_INIT, derive_seed
from funnelgate.controller import ConstraintWeights, OutputFeedbackLaw, StateFeedbackLaw
from funnelgate.errors import ConfigError
from funnelgate.funnel_transform import BoundCurve, FunnelBounds, TransformKind, TransformSpec
from funnelgate.lmi_cert import Certificate, CertificateProblem
from funnelgate.matrix_kernel import Polynomial, SymMatrix
from funnelgate.plant import DisturbanceSpec, OutputPlant, StatePlant, dump_plant, load_plant
from funnelgate.sim import ConstraintSets, SimConfig

logger = logging.getLogger(__name__)

SCENARIOS = ("example2", "example3-exp", "example3-cos", "custom")

# Q(p) as printed for the output-feedback example
PRINTED_Q_EXAMPLE3 = Polynomial((1, 3, 3, 1))


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    plant: Union[StatePlant, OutputPlant]
    disturbance: DisturbanceSpec
    weights: ConstraintWeights
    gain: Union[np.ndarray, float]
    alpha: float
    beta: float
    c: float
    transform: TransformSpec
    horizon: float
    x0: tuple
    sets: Optional[ConstraintSets] = None
    step: float = 1e-3
    record_stride: int = 1
    seed: int = 0
    u2_init: float = DEFAULT_U2_INIT
    certificate: Optional[Certificate] = None

    @property
    def is_output(self) -> bool:
        return isinstance(self.plant, OutputPlant)

    @property
    def funnel(self) -> FunnelBounds:
        return self.transform.funnel

    def law(self, alpha: Optional[float] = None):
        a = self.alpha if alpha is None else float(alpha)
        if self.is_output:
            return OutputFeedbackLaw(self.plant, float(self.gain), self.weights, a,
                                     self.transform, self.u2_init)
        return StateFeedbackLaw(self.plant, self.gain, self.weights, a,
                                self.transform, self.u2_init)

    def problem(self) -> CertificateProblem:
        return self.law().certificate_problem(self.beta, self.c)

    def sim_config(self, H: Optional[SymMatrix] = None) -> SimConfig:
        return SimConfig(
            horizon=self.horizon,
            x0=self.x0,
            step=self.step,
            record_stride=self.record_stride,
            seed=derive_seed(self.seed, "disturbance"),
            disturbance=self.disturbance,
            sets=self.sets,
            H=H,
        )

    def with_overrides(self, **changes) -> "Scenario":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes) if changes else self

    # --------------------------------------------------------
    # JSON
    # --------------------------------------------------------

    def to_dict(self) -> dict:
        gains = {
            "alpha": self.alpha,
            "beta": self.beta,
            "c": self.c,
            "u2_init": self.u2_init,
        }
        if self.is_output:
            gains["k"] = float(self.gain)
        else:
            gains["K"] = np.asarray(self.gain, dtype=float).ravel().tolist()
        doc = {
            "name": self.name,
            "plant": dump_plant(self.plant, self.disturbance),
            "weights": self.weights.as_dict(),
            "gains": gains,
            "funnel": self.transform.as_dict(),
            "sim": {
                "horizon": self.horizon,
                "x0": list(self.x0),
                "step": self.step,
                "record_stride": self.record_stride,
                "seed": self.seed,
            },
        }
        if self.sets is not None:
            doc["sim"]["sets"] = self.sets.as_dict()
        if self.certificate is not None:
            doc["certificate"] = self.certificate.to_json()
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "Scenario":
        try:
            plant, dist = load_plant(doc["plant"])
            weights = ConstraintWeights.from_dict(doc["weights"])
            g = doc["gains"]
            s = doc["sim"]
            gain = float(g["k"]) if "k" in g else np.array(g["K"], dtype=float)
            return cls(
                name=doc.get("name", "custom"),
                plant=plant,
                disturbance=dist,
                weights=weights,
                gain=gain,
                alpha=float(g["alpha"]),
                beta=float(g.get("beta", 0.1)),
                c=float(g.get("c", 1.0)),
                transform=TransformSpec.from_dict(doc["funnel"]),
                horizon=float(s["horizon"]),
                x0=tuple(float(v) for v in s["x0"]),
                sets=ConstraintSets.from_dict(s["sets"]) if "sets" in s else None,
                step=float(s.get("step", 1e-3)),
                record_stride=int(s.get("record_stride", 1)),
                seed=int(s.get("seed", 0)),
                u2_init=float(g.get("u2_init", DEFAULT_U2_INIT)),
                certificate=Certificate.from_json(doc["certificate"]) if "certificate" in doc else None,
            )
        except KeyError as e:
            raise ConfigError(f"config document missing {e}") from e
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad config document: {e}") from e

    def save(self, path: Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "Scenario":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        if not isinstance(doc, dict):
            raise ConfigError(f"config {path} is not a JSON object")
        return cls.from_dict(doc)


# ------------------------------------------------------------
# Presets
# ------------------------------------------------------------

def example2() -> Scenario:
    plant = StatePlant(
        A=[[0, 1], [1, 2]],
        B=[0, 1],
        D=[0.1, 1],
        f_bar=0.22,
    )
    funnel = FunnelBounds(
        lower=BoundCurve.constant(0.01),
        upper=BoundCurve.exp_offset(0.9, 0.1, -0.1),
        gamma=1.475,
    )
    return Scenario(
        name="example2",
        plant=plant,
        disturbance=DisturbanceSpec(),
        weights=ConstraintWeights(p0=0.1, r=0.1, delta=0.01, mu=0.01,
                                  P1=SymMatrix(np.array([[0.1, 0.0], [0.0, 0.1]]))),
        gain=np.array([-2.0, -4.0]),
        alpha=11.6,
        beta=0.1,
        c=1.0,
        transform=TransformSpec(TransformKind.TANH_HALF, funnel),
        horizon=100.0,
        x0=(-1.0, 1.0),
        sets=ConstraintSets(
            l_u=BoundCurve.constant(1.0),
            l_x=BoundCurve.exp_offset(1.0, 0.5, -0.05),
        ),
    )


def _example3(name: str, funnel: FunnelBounds) -> Scenario:
    base = StatePlant(
        A=[[0, 1, 0], [0, 0, 1], [3, 5, 1]],
        B=[0, 0, 1],
        D=[0.1, 0.2, 1],
        f_bar=0.22,
    )
    plant = OutputPlant(base, L=[1, 2, 1], phi_hat=0.22)
    note = plant.io.flag_printed(PRINTED_Q_EXAMPLE3)
    if note:
        logger.info("%s: %s", name, note)
    return Scenario(
        name=name,
        plant=plant,
        disturbance=DisturbanceSpec(),
        weights=ConstraintWeights(p0=0.01, r=0.01, delta=0.01, mu=0.01, p1=0.1),
        gain=-4.0,
        alpha=20.2,
        beta=0.1,
        c=1.0,
        transform=TransformSpec(TransformKind.TANH_HALF, funnel),
        horizon=100.0,
        x0=(1.1, 1.1, 1.1),
        sets=ConstraintSets(
            l_u=BoundCurve.constant(8.0),
            l_y=BoundCurve.constant(8.0),
        ),
    )


def example3_exp() -> Scenario:
    # gamma: sup |upper'| = 7 * 0.1
    return _example3("example3-exp", FunnelBounds(
        lower=BoundCurve.exp_offset(4.95, 0.05, -0.1),
        upper=BoundCurve.exp_offset(7.0, 1.0, -0.1),
        gamma=0.7,
    ))


def example3_cos() -> Scenario:
    # gamma: sup |upper'| = 3.5 * 0.5
    return _example3("example3-cos", FunnelBounds(
        lower=BoundCurve.cos_offset(1.0, 1.05, 0.5),
        upper=BoundCurve.cos_offset(3.5, 4.5, 0.5),
        gamma=1.75,
    ))


PRESETS = {
    "example2": example2,
    "example3-exp": example3_exp,
    "example3-cos": example3_cos,
}


def load_scenario(name: str, config_path: Optional[Path] = None) -> Scenario:
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    if name == "custom":
        if config_path is None:
            raise ConfigError("scenario 'custom' needs --config")
        return Scenario.load(config_path)
    scenario = PRESETS[name]()
    if config_path is not None:
        raise ConfigError("--config is only used with --scenario custom")
    return scenario
