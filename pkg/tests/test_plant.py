import numpy as np
import pytest

from funnelgate.errors import ConfigError, DegenerateSystemError
from funnelgate.matrix_kernel import Polynomial
from funnelgate.plant import (
    DisturbanceGenerator,
    DisturbanceSpec,
    OutputPlant,
    StatePlant,
    derive_io_form,
    disturbance,
    dump_plant,
    load_plant,
    plant_derivative,
)

A3 = [[0, 1, 0], [0, 0, 1], [3, 5, 1]]
B3 = [0, 0, 1]
L3 = [1, 2, 1]


# ------------------------------------------------------------
# State plant
# ------------------------------------------------------------

def test_state_plant_shapes():
    p = StatePlant([[0, 1], [1, 2]], [0, 1], [0.1, 1], 0.22)
    assert p.n == 2
    assert p.B.shape == (2, 1) and p.D.shape == (2, 1)
    with pytest.raises(ConfigError):
        StatePlant([[0, 1, 2], [1, 2, 3]], [0, 1], [0, 1], 0.22)
    with pytest.raises(ConfigError):
        StatePlant([[0, 1], [1, 2]], [0, 1, 2], [0, 1], 0.22)
    with pytest.raises(ConfigError):
        StatePlant([[0, 1], [1, 2]], [0, 1], [0, 1], 0.0)


def test_plant_derivative():
    p = StatePlant([[0, 1], [1, 2]], [0, 1], [0.1, 1], 0.22)
    x = np.array([-1.0, 1.0])
    got = plant_derivative(p, x, 0.5, 0.2)
    want = np.array([1.0 + 0.02, 1.0 + 0.5 + 0.2])
    assert np.allclose(got, want)


def test_closed_loop_and_stabilization():
    p = StatePlant([[0, 1], [1, 2]], [0, 1], [0.1, 1], 0.22)
    assert np.array_equal(p.closed_loop([-2, -4]), np.array([[0.0, 1.0], [-1.0, -2.0]]))
    assert p.is_stabilized_by([-2, -4])
    assert not p.is_stabilized_by([0, 0])


# ------------------------------------------------------------
# I/O form
# ------------------------------------------------------------

def test_io_form_exact():
    io = derive_io_form(A3, B3, L3, -4)
    assert io.R == Polynomial((1, 2, 1))
    assert io.Q == Polynomial((-3, -5, -1, 1))
    assert io.Q_bar == Polynomial((1, 3, 3, 1))
    assert io.R.is_exact() and io.Q.is_exact() and io.Q_bar.is_exact()


def test_io_form_flags_printed_q():
    io = derive_io_form(A3, B3, L3, -4)
    note = io.flag_printed(Polynomial((1, 3, 3, 1)))
    assert note is not None and "Q_bar" in note
    assert io.flag_printed(Polynomial((-3, -5, -1, 1))) is None


def test_io_form_zero_path():
    with pytest.raises(DegenerateSystemError):
        derive_io_form([[1, 0], [0, 2]], [0, 1], [1, 0], 1.0)


def test_output_plant_requires_minimum_phase():
    base = StatePlant([[0, 1], [-2, -3]], [0, 1], [0, 1], 0.22)
    with pytest.raises(ConfigError):
        OutputPlant(base, [-1, 1], 0.22)
    ok = OutputPlant(base, [1, 1], 0.22)
    assert ok.R == Polynomial((1, 1))
    assert ok.output([2.0, 3.0]) == pytest.approx(5.0)


def test_output_plant_closed_loop():
    base = StatePlant(A3, B3, [0.1, 0.2, 1], 0.22)
    p = OutputPlant(base, L3, 0.22)
    expected = np.array([[0, 1, 0], [0, 0, 1], [-1, -3, -3]], dtype=float)
    assert np.array_equal(p.closed_loop(-4.0), expected)


# ------------------------------------------------------------
# Disturbance
# ------------------------------------------------------------

def test_disturbance_bound_over_seeds():
    grid = np.arange(0.0, 100.0, 0.01)
    spec = DisturbanceSpec()
    assert spec.bound == pytest.approx(0.22)
    for seed in range(20):
        f = DisturbanceGenerator(spec.with_seed(seed)).sample(grid)
        assert np.max(np.abs(f)) <= 0.22 + 1e-12


def test_disturbance_deterministic():
    grid = np.linspace(0.0, 30.0, 3001)
    a = DisturbanceGenerator(DisturbanceSpec(seed=4)).sample(grid)
    b = DisturbanceGenerator(DisturbanceSpec(seed=4)).sample(grid)
    c = DisturbanceGenerator(DisturbanceSpec(seed=5)).sample(grid)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_disturbance_holds_noise_per_window():
    gen = DisturbanceGenerator(DisturbanceSpec(seed=1))
    assert gen.hold_index(0.0) == 0
    assert gen.hold_index(0.1999) == 0
    assert gen.hold_index(0.2) == 1
    assert gen.hold_index(0.6) == 3
    # out-of-order access returns the same draws
    late = gen.noise(5000)
    assert DisturbanceGenerator(DisturbanceSpec(seed=1)).noise(5000) == late


def test_disturbance_hold_override():
    gen = DisturbanceGenerator(DisturbanceSpec(seed=2))
    assert gen(0.2, hold_index=0) == pytest.approx(
        0.1 * (np.sign(np.sin(1.7 * 0.2)) + 0.2 * np.sin(0.3 * 0.2) + np.clip(gen.noise(0), -1, 1))
    )


def test_noise_free_disturbance_is_deterministic_signal():
    spec = DisturbanceSpec(noise_power=0.0)
    assert disturbance(spec, 1.0) == pytest.approx(0.1 * (1.0 + 0.2 * np.sin(0.3)))
    with pytest.raises(ValueError):
        disturbance(spec, -1.0)


def test_disturbance_spec_validation():
    with pytest.raises(ConfigError):
        DisturbanceSpec(sample_time=0.0)
    with pytest.raises(ConfigError):
        DisturbanceSpec.from_dict({"amplitude": 0.1, "colour": "pink"})


# ------------------------------------------------------------
# JSON
# ------------------------------------------------------------

def test_plant_document_round_trip():
    doc = {
        "A": A3, "B": B3, "D": [0.1, 0.2, 1], "L": L3,
        "f_bar": 0.22, "phi_hat": 0.22,
        "disturbance": {"seed": 3},
    }
    plant, dist = load_plant(doc)
    assert isinstance(plant, OutputPlant)
    assert dist.seed == 3
    again, dist2 = load_plant(dump_plant(plant, dist))
    assert again == plant and dist2 == dist


def test_plant_document_missing_key():
    with pytest.raises(ConfigError):
        load_plant({"A": [[0]], "B": [1]})
