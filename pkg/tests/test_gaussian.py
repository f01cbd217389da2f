import math

import numpy as np
import pytest

from ensrlab import gaussian as g
from ensrlab.dependence import maximal_correlation
from ensrlab.errors import ClampWarning, InfeasibleError, InputError, ScopeError
from ensrlab.prob import correlation_ratio_sq

GP = g.GaussianPair(1.0, 1.0, 0.8)


def test_pair_validation():
    with pytest.raises(InputError):
        g.GaussianPair(0.0, 1.0, 0.5)
    with pytest.raises(InputError):
        g.GaussianPair(1.0, 1.0, 1.5)
    with pytest.raises(InputError):
        g.AdditiveFilter(-1.0)
    with pytest.raises(InputError):
        g.PairModel("cauchy")


@pytest.mark.parametrize("gp, eps, g2", [
    (GP, 0.16, 3.0),
    (GP, 0.32, 1.0),
    (g.GaussianPair(1.0, 4.0, 0.5), 0.05, 16.0),
])
def test_gamma_eps(gp, eps, g2):
    gam = g.gamma_eps(gp, eps)
    assert gam ** 2 == pytest.approx(g2, abs=1e-12)
    assert g.gaussian_rho_sq(gp, gam) == pytest.approx(eps, abs=1e-12)


def test_gamma_eps_edges():
    assert g.gamma_eps(GP, 0.64) == 0.0
    assert g.gamma_eps(GP, 0.9) == 0.0
    assert math.isinf(g.gamma_eps(GP, 0.0))


def test_closed_form_curve():
    assert g.m_eps_gaussian(GP, 0.0) == 1.0
    assert g.m_eps_gaussian(GP, 0.64) == 0.0
    assert g.m_eps_gaussian(GP, 0.16) == pytest.approx(0.75)
    with pytest.raises(InfeasibleError):
        g.m_eps_gaussian(GP, -0.1)
    with pytest.warns(ClampWarning):
        assert g.m_eps_gaussian(GP, 0.7) == 0.0


def test_closed_form_mmse_matches_curve():
    gam = g.gamma_eps(GP, 0.32)
    assert g.gaussian_mmse(GP, gam) == pytest.approx(g.m_eps_gaussian(GP, 0.32), abs=1e-12)


def test_quantize_without_noise_reproduces_y():
    qp = g.quantize(GP, 0.0)
    np.testing.assert_allclose(qp.channel.k, np.eye(256), atol=1e-15)
    mom = g.quantized_moments(qp)
    assert mom["var_x"] == pytest.approx(1.0, abs=1e-3)
    assert mom["var_y"] == pytest.approx(1.0, abs=1e-3)
    assert qp.coverage_ok
    j_yz = qp.joint_yz
    np.testing.assert_allclose(j_yz.marginal_v, qp.joint.marginal_v, atol=1e-15)


def test_large_noise_decorrelates():
    qp = g.quantize(GP, 1e3)
    assert correlation_ratio_sq(qp.joint_yz.transpose()) < 1e-4


def test_quantized_leakage_at_closed_form_noise():
    pt = g.evaluate_gamma(GP, math.sqrt(3.0))
    assert pt.rho_m_sq == pytest.approx(0.16, abs=0.01)
    assert pt.ensr == pytest.approx(0.75, abs=0.01)


def test_quantize_validation():
    with pytest.raises(InputError):
        g.quantize(GP, 1.0, bins=4)
    with pytest.raises(InputError):
        g.quantize("not a model", 1.0)


def test_from_gaussian_model():
    m = g.PairModel.from_gaussian(GP)
    assert m.rho_sq == pytest.approx(0.64)
    assert m.var_x == pytest.approx(1.0)


def test_numeric_search_matches_closed_form():
    for eps in (0.16, 0.48):
        res = g.numeric_m_eps(GP, eps)
        assert res.feasible and res.rho_m_sq <= eps
        assert res.ensr == pytest.approx(g.m_eps_gaussian(GP, eps), abs=0.02)
    assert g.numeric_m_eps(GP, 0.7).gamma == 0.0
    with pytest.raises(InfeasibleError):
        g.numeric_m_eps(GP, -0.1)


def test_numeric_search_near_zero_approaches_one():
    res = g.numeric_m_eps(GP, 1e-3, bins=64)
    assert res.ensr > 0.99


def test_erasure_candidate():
    assert g.erasure_ensr(GP, 0.9) == 0.0
    rho_q = maximal_correlation(g.quantize(GP, 0.0).joint).rho_m_sq
    assert g.erasure_ensr(GP, 0.32) == pytest.approx(1 - 0.32 / rho_q, abs=1e-9)


def test_monotonicity():
    rep = g.check_monotonicity(GP, gammas=np.geomspace(0.1, 10, 8), bins=128)
    assert rep.passed
    assert all(np.diff(rep.rho_m_sq) < 0)


def test_gaussian_curve_report():
    rep = g.verify_gaussian_curve(GP, [0.16, 0.64], bins=128, families=("uniform",))
    assert rep.passed
    assert rep.rows[-1].closed_form == 0.0 and rep.rows[-1].numeric == pytest.approx(0, abs=1e-9)
    assert all(w["ok"] for w in rep.worst_case)


def test_pearson_sandwich():
    rep = g.verify_pearson_sandwich(g.laplace_reference(1.0), (0.1, 0.2), bins=128)
    assert rep.passed
    assert rep.rho_sq <= rep.rho_m_sq
    for row in rep.rows:
        assert row.lower <= row.numeric <= row.upper + rep.tolerance
        assert row.gap_bound == pytest.approx(row.upper - row.lower, abs=1e-12)


def test_pearson_sandwich_collapses_for_small_scale():
    rep = g.verify_pearson_sandwich(g.laplace_reference(0.01), (0.1,), bins=128)
    assert rep.rows[0].gap_bound < 1e-3


def test_pearson_sandwich_scope():
    with pytest.raises(ScopeError):
        g.verify_pearson_sandwich(g.PairModel(slope=0.0), (0.1,))
    with pytest.raises(ScopeError):
        g.verify_pearson_sandwich(g.PairModel("laplace"), (0.1,))
    with pytest.raises(ScopeError):
        g.verify_pearson_sandwich(g.laplace_reference(1.0), (0.9,))
