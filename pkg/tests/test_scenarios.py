import json

import numpy as np
import pytest

from funnelgate.errors import ConfigError
from funnelgate.funnel_transform import audit_gamma
from funnelgate.lmi_cert import Certificate
from funnelgate.matrix_kernel import Polynomial, SymMatrix
from funnelgate.scenarios import PRESETS, SCENARIOS, Scenario, load_scenario


def test_presets_are_registered():
    assert set(PRESETS) | {"custom"} == set(SCENARIOS)
    for name, build in PRESETS.items():
        assert build().name == name


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_every_preset_builds(name):
    s = PRESETS[name]()
    assert s.funnel.gamma >= audit_gamma(s.funnel, s.horizon) * (1.0 - 1e-12)
    assert s.law().alpha == s.alpha
    assert s.problem().n == s.plant.n


def test_example2_preset(ex2):
    assert not ex2.is_output
    assert ex2.alpha == 11.6
    assert ex2.x0 == (-1.0, 1.0)
    assert ex2.sets.check_under(ex2.funnel, ex2.horizon)
    law = ex2.law()
    assert law.xi([-1.0, 1.0], 0.0) == pytest.approx(0.64011)


def test_example3_presets(ex3_exp, ex3_cos):
    for s in (ex3_exp, ex3_cos):
        assert s.is_output
        assert s.gain == -4.0
        assert s.plant.io.Q_bar == Polynomial((1, 3, 3, 1))
        assert s.sets.check_under(s.funnel, s.horizon)
        law = s.law()
        assert law.xi(4.4, 0.01) == pytest.approx(5.064980, abs=1e-6)
        assert s.funnel.contains(law.xi(4.4, 0.01), 0.0)
    assert ex3_exp.funnel.gamma == pytest.approx(audit_gamma(ex3_exp.funnel, 100.0))
    assert ex3_cos.funnel.gamma == pytest.approx(audit_gamma(ex3_cos.funnel, 100.0), rel=1e-6)


def test_alpha_override(ex2):
    assert ex2.law(20.0).alpha == 20.0
    assert ex2.law().alpha == 11.6
    assert ex2.with_overrides(alpha=None) is ex2
    assert ex2.with_overrides(alpha=5.0).alpha == 5.0


def test_sim_config_derives_disturbance_seed(ex2):
    a = ex2.with_overrides(seed=1).sim_config()
    b = ex2.with_overrides(seed=2).sim_config()
    assert a.seed != b.seed
    assert a.seed == ex2.with_overrides(seed=1).sim_config().seed


@pytest.mark.parametrize("name", ["example2", "example3-exp", "example3-cos"])
def test_dict_round_trip(name):
    s = PRESETS[name]()
    again = Scenario.from_dict(json.loads(json.dumps(s.to_dict())))
    assert again.to_dict() == s.to_dict()


def test_save_and_load_custom(tmp_path, ex3_cos):
    cert = Certificate(20.2, (1.0, 2.0, 3.0, 4.0, 5.0), SymMatrix(np.eye(3)))
    s = ex3_cos.with_overrides(certificate=cert, name="custom")
    path = tmp_path / "run.json"
    s.save(path)
    loaded = load_scenario("custom", path)
    assert loaded.is_output
    assert loaded.certificate is not None
    assert loaded.certificate.taus == cert.taus
    assert loaded.funnel == ex3_cos.funnel


def test_bad_documents(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError):
        Scenario.load(path)
    path.write_text("{oops", encoding="utf-8")
    with pytest.raises(ConfigError):
        Scenario.load(path)
    with pytest.raises(ConfigError):
        Scenario.from_dict({"plant": {}})
    with pytest.raises(ConfigError):
        Scenario.load(tmp_path / "missing.json")


def test_load_scenario_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_scenario("example9")
    with pytest.raises(ConfigError):
        load_scenario("custom")
    with pytest.raises(ConfigError):
        load_scenario("example2", tmp_path / "x.json")
