"""Independent copies of a pair and coordinate-wise (memoryless) filters.

With ``n`` i.i.d. copies of ``(X, Y)`` and a filter acting on each ``Y_i``
separately, the maximal correlation of ``(X^n, Z^n)`` is the largest of the
per-coordinate values, and ``mmse(Y_i | Z^n) = mmse(Y_i | Z_i)``.  Hence
the best averaged ENSR over memoryless filters equals the single-letter
optimum.  :func:`verify_memoryless_filters` checks this numerically for ``n = 2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dependence import PRODUCT_CAP, maximal_correlation, tensor_rho_m
from .errors import DimensionError, InputError, ResourceError, ScopeError
from .filters import FilterProblem, SearchConfig, make_feasible, solve
from .prob import (Alphabet, Channel, JointDistribution, compose, correlation_ratio_sq,
                   mmse, product, random_channel, variance)

MAX_N = 3


def product_joint(base: JointDistribution, n: int, cap: int = PRODUCT_CAP) -> JointDistribution:
    """Joint pmf of ``n`` independent copies, indexed lexicographically."""
    if n < 1:
        raise InputError("n must be at least 1")
    if n > MAX_N:
        raise ScopeError(f"n={n} exceeds the supported maximum {MAX_N}")
    nx, ny = base.shape
    if nx ** n * ny ** n > cap:
        raise ResourceError(f"product joint {nx ** n}x{ny ** n} exceeds the cap {cap}")
    j = base
    for _ in range(n - 1):
        j = product(j, base)
    return j


def memoryless_filter(filters) -> Channel:
    """Channel ``P(z^n | y^n) = prod_i P_i(z_i | y_i)`` over index alphabets."""
    k = np.ones((1, 1))
    for f in filters:
        k = np.kron(k, f.k)
    return Channel(Alphabet.range(k.shape[0]), Alphabet.range(k.shape[1]), k)


@dataclass(frozen=True, eq=False)
class ProductProblem:
    base: JointDistribution
    n: int
    per_coordinate_filters: tuple
    eps: float = 0.0

    def __post_init__(self):
        filters = tuple(self.per_coordinate_filters)
        if len(filters) != self.n:
            raise DimensionError(f"{len(filters)} filters for n={self.n} coordinates")
        for f in filters:
            if f.input != self.base.alphabet_v:
                raise DimensionError("every filter must take the Y alphabet as input")
        object.__setattr__(self, "per_coordinate_filters", filters)


def product_objective(prob: ProductProblem) -> float:
    """``(1/n) sum_i mmse(Y_i | Z^n) / var(Y)`` computed on the full product.

    The joint of ``(Y^n, Z^n)`` is formed explicitly and each ``Y_i`` is
    marginalized out of it, so the result does not presuppose the
    per-coordinate factorization it is used to test.
    """
    base = prob.base
    n = prob.n
    pmf_y = base.marginal_v
    y = base.alphabet_v.points
    ny = y.size
    var_y = variance(pmf_y, y)
    p_yn = pmf_y
    for _ in range(n - 1):
        p_yn = np.kron(p_yn, pmf_y)
    kn = memoryless_filter(prob.per_coordinate_filters).k
    joint = p_yn[:, None] * kn
    nz = joint.shape[1]
    shaped = joint.reshape((ny,) * n + (nz,))
    total = 0.0
    for i in range(n):
        axes = tuple(a for a in range(n) if a != i)
        p_i = shaped.sum(axis=axes) if axes else shaped
        total += mmse(JointDistribution(base.alphabet_v, Alphabet.range(nz), p_i))
    return float(total / (n * var_y))


@dataclass(frozen=True)
class MemorylessReport:
    n: int
    eps: float
    single_letter: float
    replicated: float
    trials: int
    violations: int
    min_margin: float
    tensor_max_error: float
    sigma_min_base: float
    sigma_min_product: float
    weak_single: float
    weak_trials: int
    weak_violations: int
    weak_min_margin: float
    tolerance: float
    extras: dict = field(default_factory=dict)

    @property
    def sigma_identity_error(self) -> float:
        return abs(self.sigma_min_product - self.sigma_min_base ** self.n)

    @property
    def passed(self) -> bool:
        return (self.violations == 0 and self.weak_violations == 0
                and abs(self.replicated - self.single_letter) <= 1e-10
                and self.tensor_max_error <= 1e-8 and self.sigma_identity_error <= 1e-8)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in (
            "n", "eps", "single_letter", "replicated", "trials", "violations", "min_margin",
            "tensor_max_error", "sigma_min_base", "sigma_min_product", "weak_single",
            "weak_trials", "weak_violations", "weak_min_margin", "tolerance")}
        d["sigma_identity_error"] = self.sigma_identity_error
        d["passed"] = self.passed
        d.update(self.extras)
        return d


def verify_memoryless_filters(base: JointDistribution, eps: float, trials: int = 200, *,
                        n: int = 2, seed: int = 0, config: SearchConfig | None = None,
                        tol: float = 1e-3, weak_trials: int | None = None) -> MemorylessReport:
    """Randomized check that memoryless filters cannot beat the single-letter optimum.

    Strong mode: ``trials`` random filter tuples are shrunk until every
    coordinate leaks at most ``eps``; the product leakage (maximal
    correlation of the product joint) must equal the largest coordinate
    leakage, and the averaged ENSR must not fall below the single-letter
    ``M_eps`` by more than ``tol``.  Repeating the single-letter optimum on
    every coordinate must give the single-letter value.

    Weak mode: per-coordinate budgets ``eps_i`` averaging to ``eps`` are
    drawn at random, and the averaged ENSR must stay above ``W_eps``.
    """
    if n < 2:
        raise InputError("the product check needs n >= 2")
    cfg = config or SearchConfig(seed=seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, n, trials]))
    y_alpha = base.alphabet_v
    nz = len(y_alpha) + 1

    eps = min(float(eps), FilterProblem(base, 0.0, "strong").limit)
    strong = solve(FilterProblem(base, eps, "strong", nz), cfg)
    eps_s = strong.eps
    replicated = product_objective(ProductProblem(base, n, (strong.filter,) * n, eps_s))

    violations, min_margin, tensor_err = 0, np.inf, 0.0
    for _ in range(trials):
        filters = [make_feasible(base, random_channel(rng, y_alpha, nz), eps_s)
                   for _ in range(n)]
        comps = [compose(base, f) for f in filters]
        joint_n = comps[0]
        for c in comps[1:]:
            joint_n = product(joint_n, c)
        rho_n = maximal_correlation(joint_n).rho_m
        rho_max = max(maximal_correlation(c).rho_m for c in comps)
        tensor_err = max(tensor_err, abs(rho_n - rho_max))
        if n == 2:
            pair, _ = tensor_rho_m(comps[0], comps[1])
            tensor_err = max(tensor_err, abs(pair - rho_n))
        value = product_objective(ProductProblem(base, n, tuple(filters), eps_s))
        margin = value - strong.ensr
        min_margin = min(min_margin, margin)
        if rho_n ** 2 <= eps_s + 1e-10 and margin < -tol:
            violations += 1

    base_sigma = maximal_correlation(base).sigma_min
    prod_sigma = maximal_correlation(product_joint(base, n)).sigma_min

    weak = solve(FilterProblem(base, min(eps, FilterProblem(base, 0.0, "weak").limit),
                               "weak", nz), cfg)
    limit_w = FilterProblem(base, 0.0, "weak").limit
    eps_w = weak.eps
    w_trials = trials if weak_trials is None else weak_trials
    weak_viol, weak_margin = 0, np.inf
    for _ in range(w_trials):
        alloc = rng.dirichlet(np.ones(n)) * n * eps_w
        alloc = np.minimum(alloc, limit_w)
        filters = [make_feasible(base, random_channel(rng, y_alpha, nz), a, "weak")
                   for a in alloc]
        leaks = [correlation_ratio_sq(compose(base, f)) for f in filters]
        value = product_objective(ProductProblem(base, n, tuple(filters), eps_w))
        margin = value - weak.ensr
        weak_margin = min(weak_margin, margin)
        if np.mean(leaks) <= eps_w + 1e-10 and margin < -tol:
            weak_viol += 1

    return MemorylessReport(n, eps_s, strong.ensr, replicated, trials, violations,
                       float(min_margin) if trials else 0.0, float(tensor_err),
                       base_sigma, prod_sigma, weak.ensr, w_trials, weak_viol,
                       float(weak_margin) if w_trials else 0.0, tol)
