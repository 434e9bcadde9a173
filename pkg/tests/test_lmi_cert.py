import math

import numpy as np
import pytest

from funnelgate.errors import ConfigError
from funnelgate.lmi_cert import (
    Certificate,
    CertificateProblem,
    ProblemKind,
    alpha_floor,
    assemble_eps_block,
    assemble_H_block,
    best_gramian_split,
    check_H_dominance,
    eps_taus,
    search,
    search_h,
    verify,
)
from funnelgate.matrix_kernel import SymMatrix


def _trivial_cert(problem, alpha=0.001):
    return Certificate(alpha, (1.0, 1.0, 1.0, 1.0, 1.0), SymMatrix(np.eye(problem.n)))


# ------------------------------------------------------------
# Problem / certificate objects
# ------------------------------------------------------------

def test_problem_kinds(ex2, ex3_exp):
    p2 = ex2.problem()
    p3 = ex3_exp.problem()
    assert p2.kind is ProblemKind.STATE_FEEDBACK
    assert p3.kind is ProblemKind.OUTPUT_FEEDBACK
    assert p2.cross_gain == pytest.approx(1.01)
    assert p3.cross_gain == 1.0
    assert p2.ellipse_scale == pytest.approx(0.1, abs=1e-10)
    assert p3.ellipse_scale == pytest.approx(0.2616)


def test_problem_requires_case_data():
    with pytest.raises(ConfigError):
        CertificateProblem(
            kind="state_feedback", A_bar=np.eye(2) * -1, B=[0, 1], D=[0, 1],
            p3=1.0, w_bar=0.2, gamma=1.0, inf_g=1.0, delta=0.01, mu=0.01,
            beta=0.1, c=1.0,
        )


def test_certificate_needs_five_taus():
    with pytest.raises(ConfigError):
        Certificate(1.0, (1.0, 1.0, 1.0, 1.0), SymMatrix(np.eye(2)))


def test_certificate_json_round_trip(tmp_path):
    cert = Certificate(11.6, (1.0, 2.0, 3.0, 4.0, 5.0), SymMatrix(np.array([[2.0, 0.5], [0.5, 1.0]])))
    path = tmp_path / "certificate.json"
    cert.save(path)
    again = Certificate.load(path)
    assert again.alpha == cert.alpha
    assert again.taus == cert.taus
    assert again.H == cert.H
    with pytest.raises(ConfigError):
        Certificate.from_json({"alpha": 1.0})


def test_certificate_load_bad_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        Certificate.load(path)


# ------------------------------------------------------------
# Assembly / verify
# ------------------------------------------------------------

def test_eps_block_layout(ex2):
    problem = ex2.problem()
    cert = Certificate(11.6, (2.0, 3.0, 4.0, 1.0, 1.0), SymMatrix(np.eye(2)))
    m = assemble_eps_block(problem, cert, 0.22).entries
    assert m[0, 0] == pytest.approx(-11.6 + 1.0)
    assert m[0, 1] == pytest.approx(0.5 * 0.22 / 0.01 * 1.01)
    assert m[0, 2] == pytest.approx(-0.5)
    assert m[1, 1] == -3.0 and m[2, 2] == -4.0
    assert np.array_equal(m, m.T)


def test_H_block_shape_mismatch(ex2):
    problem = ex2.problem()
    cert = Certificate(1.0, (1.0,) * 5, SymMatrix(np.eye(3)))
    with pytest.raises(ConfigError):
        assemble_H_block(problem, cert)


def test_margins_match_numpy(ex2):
    problem = ex2.problem()
    cert = Certificate(11.6, (11.6, 71.4, 0.48, 0.5, 0.5), SymMatrix(np.array([[3.0, 1.0], [1.0, 4.0]])))
    report = verify(problem, cert)
    plus = np.linalg.eigvalsh(assemble_eps_block(problem, cert, 0.22).entries)[-1]
    hb = np.linalg.eigvalsh(assemble_H_block(problem, cert).entries)[-1]
    assert report.margins["eps_block_plus"] == pytest.approx(plus, abs=1e-10)
    assert report.margins["h_block"] == pytest.approx(hb, abs=1e-10)


def test_trivial_certificate_is_rejected(ex2, ex3_exp):
    for scenario in (ex2, ex3_exp):
        problem = scenario.problem()
        report = verify(problem, _trivial_cert(problem))
        assert not report.feasible
        assert not report.eps_group
        assert report.margins["eps_block_plus"] > 0


def test_dominance_check(ex2):
    problem = ex2.problem()
    below = Certificate(1.0, (1.0,) * 5, SymMatrix(0.5 * problem.P1_bar.entries))
    above = Certificate(1.0, (1.0,) * 5, SymMatrix(problem.P1_bar.entries + np.eye(2)))
    assert not check_H_dominance(problem, below)
    assert check_H_dominance(problem, above)


# ------------------------------------------------------------
# Group 1
# ------------------------------------------------------------

def test_alpha_floor_example2(ex2):
    problem = ex2.problem()
    a = 0.5 * 0.22 / 0.01 * 1.01
    want = math.sqrt(2.0) * 0.22 * a + 1.475 / math.sqrt(2.0)
    assert alpha_floor(problem) == pytest.approx(want)
    assert alpha_floor(problem) == pytest.approx(4.4996, abs=1e-3)


def test_alpha_floor_example3(ex3_exp, ex3_cos):
    assert alpha_floor(ex3_exp.problem()) == pytest.approx(3.917, abs=1e-2)
    assert alpha_floor(ex3_cos.problem()) == pytest.approx(4.660, abs=1e-2)


def test_eps_taus_at_preset_alpha(ex2):
    problem = ex2.problem()
    taus = eps_taus(problem, 11.6)
    assert taus is not None
    cert = Certificate(11.6, taus + (1.0, 1.0), SymMatrix(problem.P1_bar.entries + np.eye(2)))
    report = verify(problem, cert)
    assert report.eps_group
    assert report.margins["eps_block_plus"] < -1e-10
    assert report.margins["eps_block_minus"] < -1e-10
    assert report.margins["scalar_eps_slack"] >= 0


@pytest.mark.parametrize("taus", [None, (1.0, 1.0, 1.0)])
def test_vertex_blocks_bound_interior_disturbances(ex2, taus):
    problem = ex2.problem()
    taus = eps_taus(problem, 11.6) if taus is None else taus
    cert = Certificate(11.6, taus + (1.0, 1.0), SymMatrix(problem.P1_bar.entries + np.eye(2)))
    w = problem.w_bar
    worst = max(
        np.linalg.eigvalsh(assemble_eps_block(problem, cert, v).entries)[-1] for v in (w, -w)
    )
    for v in np.random.default_rng(7).uniform(-w, w, 200):
        inner = np.linalg.eigvalsh(assemble_eps_block(problem, cert, float(v)).entries)[-1]
        assert inner <= worst + 1e-12


def test_eps_group_survives_doubling_alpha(ex2, ex3_cos):
    for scenario in (ex2, ex3_cos):
        problem = scenario.problem()
        alpha = 1.5 * alpha_floor(problem)
        taus = eps_taus(problem, alpha)
        H = SymMatrix(problem.dominance_floor.entries + np.eye(problem.n))
        first = verify(problem, Certificate(alpha, taus + (1.0, 1.0), H))
        doubled = verify(problem, Certificate(2.0 * alpha, taus + (1.0, 1.0), H))
        assert first.eps_group and doubled.eps_group
        assert doubled.margins["eps_block_plus"] <= first.margins["eps_block_plus"]


def test_eps_taus_below_floor(ex2):
    problem = ex2.problem()
    assert eps_taus(problem, 0.9 * alpha_floor(problem)) is None


def test_eps_taus_track_the_floor(ex3_cos):
    problem = ex3_cos.problem()
    floor = alpha_floor(problem)
    assert eps_taus(problem, floor * 1.001) is not None
    assert eps_taus(problem, floor * 0.999) is None


# ------------------------------------------------------------
# Search
# ------------------------------------------------------------

def test_search_eps_only_example2(ex2):
    result = search(ex2.problem(), alpha_hint=11.6, eps_only=True)
    assert result.certificate is not None
    assert result.report.eps_group
    assert result.message == "eps group only"


def test_search_below_floor_reports_infeasible(ex2):
    result = search(ex2.problem(), alpha_hint=1.0)
    assert not result.found
    assert result.certificate is None
    assert "not a proof" in result.message


def test_search_example3_feasible(ex3_exp):
    problem = ex3_exp.problem()
    result = search(problem, alpha_hint=20.2, seed=0)
    assert result.found
    assert result.gramian_ratio < 1.0
    again = verify(problem, result.certificate)
    assert again.feasible
    assert again.margins["h_block"] <= 0


def test_gramian_split_example3(ex3_exp):
    ratio, share = best_gramian_split(ex3_exp.problem())
    assert share is not None and 0 < share < 1
    assert ratio < 1.0


def test_search_example2_reports_h_group_infeasible(ex2):
    result = search(ex2.problem(), alpha_hint=11.6, seed=0)
    assert not result.found
    assert result.certificate is None
    assert result.gramian_ratio > 1.0
    assert result.report is not None and result.report.eps_group
    assert not result.report.h_group
    assert any("Gramian ratio" in note for note in result.report.notes)
    assert "not a proof" in result.message


def test_search_h_without_gramian_start(ex2):
    problem = ex2.problem()
    assert best_gramian_split(problem)[0] > 1.0
    assert search_h(problem, seed=1, restarts=9, maxiter=50, workers=2) is None


def test_search_trivial_problem_takes_smallest_alpha():
    problem = CertificateProblem(
        kind="state_feedback", A_bar=-np.eye(2), B=[0, 0], D=[0, 0],
        p3=1.0, w_bar=0.0, gamma=0.0, inf_g=1.0, delta=0.01, mu=0.01,
        beta=0.1, c=1.0, P1_bar=SymMatrix(np.eye(2)),
    )
    assert alpha_floor(problem) == 0.0
    result = search(problem, eps_only=True)
    assert result.certificate is not None
    assert result.certificate.alpha == pytest.approx(0.01)
    assert result.report.eps_group


def test_search_without_scalar_room_is_infeasible(ex2):
    p = ex2.problem()
    problem = CertificateProblem(
        kind=p.kind, A_bar=p.A_bar, B=p.B, D=p.D, p3=p.p3, w_bar=p.w_bar,
        gamma=p.gamma, inf_g=p.inf_g, delta=p.delta, mu=p.mu, beta=p.beta,
        c=0.0, P1_bar=p.P1_bar,
    )
    assert alpha_floor(problem) == math.inf
    result = search(problem, alpha_hint=11.6)
    assert not result.found
    assert result.report is None
    assert "c = 0" in result.message


def test_search_is_deterministic(ex3_cos):
    problem = ex3_cos.problem()
    a = search(problem, seed=3)
    b = search(problem, seed=3)
    assert a.found == b.found
    if a.found:
        assert a.certificate.alpha == b.certificate.alpha
        assert a.certificate.taus == b.certificate.taus
        assert a.certificate.H == b.certificate.H
