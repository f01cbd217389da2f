import numpy as np
import pytest

from ensrlab.errors import DimensionError, InputError, ResourceError, ScopeError
from ensrlab.filters import evaluate_filter
from ensrlab.iid import (ProductProblem, memoryless_filter, product_joint, product_objective,
                         verify_memoryless_filters)
from ensrlab.prob import Alphabet, Channel, JointDistribution, random_channel, random_joint


def test_product_joint(bsc_joint):
    assert product_joint(bsc_joint, 1) is bsc_joint
    pj = product_joint(bsc_joint, 2)
    assert pj.shape == (4, 4)
    base = np.array([[0.45, 0.05], [0.05, 0.45]])
    np.testing.assert_allclose(pj.p, np.kron(base, base), atol=1e-15)
    indep = JointDistribution([0, 1], [0, 1], np.outer([0.3, 0.7], [0.4, 0.6]))
    pi = product_joint(indep, 2)
    np.testing.assert_allclose(pi.p, np.outer(pi.marginal_u, pi.marginal_v), atol=1e-15)


def test_product_joint_limits(bsc_joint):
    with pytest.raises(ScopeError):
        product_joint(bsc_joint, 4)
    with pytest.raises(ResourceError):
        product_joint(bsc_joint, 3, cap=32)
    with pytest.raises(InputError):
        product_joint(bsc_joint, 0)


def test_memoryless_filter_is_kronecker(bsc_joint):
    a = Channel.erasure(bsc_joint.alphabet_v, 0.3)
    b = Channel.erasure(bsc_joint.alphabet_v, 0.7)
    np.testing.assert_allclose(memoryless_filter([a, b]).k, np.kron(a.k, b.k))


def test_product_objective_examples(bsc_joint):
    y = bsc_joint.alphabet_v
    ident = Channel.identity(y)
    assert product_objective(ProductProblem(bsc_joint, 2, (ident, ident))) == pytest.approx(
        0.0, abs=1e-12)
    const = Channel.constant(y, 2)
    assert product_objective(ProductProblem(bsc_joint, 2, (const, const))) == pytest.approx(
        1.0, abs=1e-12)
    mixed = (Channel.erasure(y, 0.3), Channel.erasure(y, 0.7))
    assert product_objective(ProductProblem(bsc_joint, 2, mixed)) == pytest.approx(
        0.5, abs=1e-12)


def test_product_objective_is_mean_of_coordinates():
    rng = np.random.default_rng(4)
    j = random_joint(rng, 3, 3)
    for _ in range(5):
        fs = tuple(random_channel(rng, j.alphabet_v, 3) for _ in range(2))
        single = np.mean([evaluate_filter(j, f)[0] for f in fs])
        assert product_objective(ProductProblem(j, 2, fs)) == pytest.approx(single, abs=1e-12)


def test_product_problem_validation(bsc_joint):
    f = Channel.identity(bsc_joint.alphabet_v)
    with pytest.raises(DimensionError):
        ProductProblem(bsc_joint, 2, (f,))
    with pytest.raises(DimensionError):
        ProductProblem(bsc_joint, 1, (Channel.identity(Alphabet([5.0, 6.0])),))


def test_memoryless_check_on_bsc(bsc_joint):
    rep = verify_memoryless_filters(bsc_joint, 0.32, trials=40)
    assert rep.passed
    assert rep.violations == 0
    assert rep.replicated == pytest.approx(0.5, abs=1e-9)
    assert rep.single_letter == pytest.approx(0.5, abs=1e-9)
    assert rep.sigma_min_product == pytest.approx(0.64, abs=1e-10)
    d = rep.to_dict()
    assert d["passed"] and d["trials"] == 40


def test_memoryless_check_at_limit(bsc_joint):
    rep = verify_memoryless_filters(bsc_joint, 0.64, trials=5)
    assert rep.single_letter == pytest.approx(0.0, abs=1e-12)
    assert rep.replicated == pytest.approx(0.0, abs=1e-12)


def test_memoryless_check_random_base():
    j = random_joint(np.random.default_rng(9), 2, 2)
    rep = verify_memoryless_filters(j, 0.02, trials=40, seed=3)
    assert rep.violations == 0 and rep.weak_violations == 0
    with pytest.raises(InputError):
        verify_memoryless_filters(j, 0.1, n=1)
