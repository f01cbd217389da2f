"""Acceptance criteria, one test each, run at their stated tolerances.

Every test records a PASS/FAIL line that the terminal summary prints.
"""

import math
import subprocess
import sys
import time
import warnings

import numpy as np
import pytest

from ensrlab import biso
from ensrlab import gaussian as g
from ensrlab.dependence import maximal_correlation, rho_m_sq
from ensrlab.errors import ClampWarning
from ensrlab.filters import (FilterProblem, SearchConfig, p_error_curve, solve, verify_bounds,
                             verify_convexity)
from ensrlab.iid import verify_memoryless_filters
from ensrlab.prob import (Alphabet, JointDistribution, compose, random_channel, random_joint)
from ensrlab.verify import erasure_membership, load_fixture


def direct_normalized_mmse(j, f):
    """mmse(f(U)|V) / var(f(U)) from the joint pmf, without the library's estimators."""
    p = j.p
    pu = p.sum(axis=1)
    pv = p.sum(axis=0)
    mean = pu @ f
    var = pu @ (f - mean) ** 2
    live = pv > 0
    cond = (f @ p[:, live]) / pv[live]
    explained = pv[live] @ (cond - mean) ** 2
    return (var - explained) / var


def acceptance_joints(seed, count, max_dim):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        nx, ny = (int(v) for v in rng.integers(2, max_dim + 1, size=2))
        y = np.cumsum(rng.uniform(0.5, 1.5, size=ny))
        out.append(random_joint(rng, nx, ny, np.arange(nx, dtype=float), y))
    return out


def test_criterion_01_svd_function_attains_minimum(acceptance_record):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst_gap, beaten, checked = 0.0, 0, 0
    for _ in range(50):
        nx, ny = (int(v) for v in rng.integers(2, 5, size=2))
        j = random_joint(rng, nx, ny)
        for _ in range(50):
            j_xz = compose(j, random_channel(rng, j.alphabet_v, int(rng.integers(2, 5))))
            rep = maximal_correlation(j_xz)
            best = direct_normalized_mmse(j_xz, rep.optimal_f)
            worst_gap = max(worst_gap, abs(best - (1.0 - rep.rho_m_sq)))
            for f in rng.normal(size=(4, nx)):
                checked += 1
                if direct_normalized_mmse(j_xz, f) < best - 1e-10:
                    beaten += 1
    elapsed = time.perf_counter() - start
    ok = worst_gap <= 1e-8 and beaten == 0 and elapsed < 10.0
    acceptance_record(1, "SVD function attains min normalized mmse = 1 - rho_m^2", ok,
                      f"(max gap {worst_gap:.2e}, {beaten}/{checked} beaten, {elapsed:.1f}s)")
    assert worst_gap <= 1e-8
    assert beaten == 0
    assert elapsed < 10.0


def test_criterion_02_bsc_exact(acceptance_record):
    j = biso.bsc(0.1, 0.5).joint
    cfg = SearchConfig(include_erasure=False)
    start = time.perf_counter()
    worst, missing = 0.0, []
    for i in range(1, 9):
        eps = 0.08 * i
        target = 1.0 - eps / 0.64
        for kind in ("strong", "weak"):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ClampWarning)
                sol = solve(FilterProblem(j, eps, kind), cfg)
            worst = max(worst, abs(sol.ensr - target))
        eps_c = min(eps, rho_m_sq(j))
        if not erasure_membership(j, eps_c, "strong", 0.02, max(target, 0.0))["found"]:
            missing.append(eps)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-3 and not missing and elapsed < 60.0
    acceptance_record(2, "BSC(0.1) M and W equal 1 - eps/0.64, optimum erases", ok,
                      f"(max dev {worst:.2e}, no erasure match at {missing}, {elapsed:.1f}s)")
    assert worst <= 1e-3
    assert not missing
    assert elapsed < 60.0


def test_criterion_03_bec_exact(acceptance_record):
    j = biso.bec(0.5, 0.5).joint
    rho2 = rho_m_sq(j)
    cfg = SearchConfig(include_erasure=False)
    worst = 0.0
    for i in range(1, 11):
        eps = 0.05 * i
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ClampWarning)
            sol = solve(FilterProblem(j, eps, "strong"), cfg)
        worst = max(worst, abs(sol.ensr - (1.0 - eps / 0.5)))
    ok = worst <= 1e-3 and abs(rho2 - 0.5) <= 1e-8
    acceptance_record(3, "BEC(0.5) M equals 1 - eps/0.5, rho_m^2 = 0.5", ok,
                      f"(max dev {worst:.2e}, rho_m^2 {rho2:.10f})")
    assert worst <= 1e-3
    assert abs(rho2 - 0.5) <= 1e-8


def test_criterion_04_biso_linear_mmse_identity(acceptance_record):
    rng = np.random.default_rng(4)
    y = Alphabet([0.0, 1.0])
    worst = 0.0
    for p in (0.3, 0.5, 0.7):
        for b in (biso.bsc(0.1, p), biso.bsc(0.3, p), biso.bec(0.5, p)):
            for _ in range(100):
                lhs, rhs = biso.mmse_linear_relation(b, random_channel(rng, y, 3))
                worst = max(worst, abs(lhs - rhs))
    ok = worst < 1e-10
    acceptance_record(4, "BISO mmse(Y|Z) linear in mmse(X|Z)", ok, f"(max dev {worst:.2e})")
    assert worst < 1e-10


def test_criterion_05_convexity_and_bounds(acceptance_record):
    cfg = SearchConfig(restarts=16)
    failures = []
    worst_convex, worst_bound = 0.0, 0.0
    for i, j in enumerate(acceptance_joints(5, 10, 3)):
        grid = np.linspace(0.0, 1.0, 7) * rho_m_sq(j)
        rep = verify_bounds(j, grid, cfg)
        for r in rep.rows:
            worst_bound = max(worst_bound, -r.w_eps, r.w_eps - r.m_eps,
                              r.m_eps - r.trivial_upper, r.m_eps - r.erasure_upper)
        if not rep.passed:
            failures.append(f"bounds[{i}]")
        for label, curve in (("M", rep.m_curve), ("W", rep.w_curve)):
            if len(curve.points) < 3:
                continue
            c = verify_convexity(curve, tol=1e-3)
            worst_convex = max(worst_convex, c.max_violation, c.max_ratio_increase)
            if not c.passed:
                failures.append(f"convexity[{i}]{label}")
    ok = not failures
    acceptance_record(5, "curves convex with (1-M)/eps non-increasing; 0<=W<=M<=bounds", ok,
                      f"(convexity {worst_convex:.2e}, bounds {worst_bound:.2e}, "
                      f"failures {failures})")
    assert not failures


def binary_y_joints(p):
    rng = np.random.default_rng(int(p * 100))
    cond = rng.dirichlet(np.ones(3), size=2)
    custom = JointDistribution.from_conditional(Alphabet([0.0, 1.0, 2.0]), Alphabet([0.0, 1.0]),
                                                [1 - p, p], cond)
    return [biso.bsc(0.1, p).joint, biso.bec(0.5, p).joint, custom]


def test_criterion_06_error_probability_sandwich(acceptance_record):
    worst = -math.inf
    fails = []
    for p in (0.5, 0.6, 0.75):
        for k, j in enumerate(binary_y_joints(p)):
            lim = FilterProblem(j, 0.0, "weak").limit
            curve = p_error_curve(j, np.linspace(0.0, 1.0, 6) * lim)
            var_y = p * (1 - p)
            for pt in curve.points:
                w = pt.extras["w_eps"]
                ratio = pt.value / var_y
                slack = min(ratio - w, 2 * w - ratio)
                worst = max(worst, -slack)
                if slack < -1e-6:
                    fails.append((p, k, pt.eps))
    ok = not fails
    acceptance_record(6, "W <= P_error/var(Y) <= 2W", ok,
                      f"(least slack {-worst:.2e}, failures {fails})")
    assert not fails


def test_criterion_07_tensorization(acceptance_record):
    rep = verify_memoryless_filters(load_fixture("bsc_0.1_uniform"), 0.32, 200, n=2, seed=0)
    floor = rep.single_letter + rep.min_margin
    ok = (floor >= 0.5 - 1e-3 and rep.violations == 0
          and abs(rep.replicated - 0.5) <= 1e-3 and rep.tensor_max_error <= 1e-8)
    acceptance_record(7, "memoryless pairs never beat 0.5; replicated optimum attains it", ok,
                      f"(min product ENSR {floor:.6f}, replicated {rep.replicated:.6f}, "
                      f"tensor err {rep.tensor_max_error:.1e})")
    assert rep.trials == 200
    assert floor >= 0.5 - 1e-3
    assert abs(rep.replicated - 0.5) <= 1e-3
    assert rep.tensor_max_error <= 1e-8


def test_criterion_08_gaussian_closed_forms(acceptance_record):
    gp = g.GaussianPair(1.0, 1.0, 0.8)
    start = time.perf_counter()
    expected = {0.16: 3.0, 0.32: 1.0, 0.48: 1.0 / 3.0}
    gamma_err = max(abs(g.gamma_eps(gp, e) ** 2 - v) for e, v in expected.items())
    curve = g.verify_gaussian_curve(gp, sorted(expected), bins=256, families=())
    dev = max(abs(r.numeric - r.closed_form) for r in curve.rows)
    mono = g.check_monotonicity(gp, np.geomspace(0.1, 10.0, 20), bins=256)
    elapsed = time.perf_counter() - start
    ok = (gamma_err <= 1e-12 and dev <= 0.02 and mono.max_rho_increase < 0
          and mono.max_mmse_decrease < 0 and elapsed < 120.0)
    acceptance_record(8, "Gaussian gamma_eps exact, numeric within 0.02, monotone in gamma", ok,
                      f"(gamma^2 err {gamma_err:.1e}, numeric dev {dev:.4f}, {elapsed:.1f}s)")
    assert gamma_err <= 1e-12
    assert dev <= 0.02
    assert mono.max_rho_increase < 0 and mono.max_mmse_decrease < 0
    assert elapsed < 120.0


def test_criterion_09_pearson_sandwich(acceptance_record):
    rep = g.verify_pearson_sandwich(g.laplace_reference(1.0), (0.1, 0.2), bins=256)
    ok = all(r.lower <= r.numeric <= r.upper + 0.02 for r in rep.rows)
    detail = ", ".join(f"eps={r.eps}: {r.lower:.4f}<={r.numeric:.4f}<={r.upper + 0.02:.4f}"
                       for r in rep.rows)
    acceptance_record(9, "Laplace-perturbed X between Pearson and maximal-correlation curves",
                      ok, f"({detail})")
    assert ok


def test_criterion_10_verify_all_is_deterministic(acceptance_record, tmp_path):
    cmd = [sys.executable, "-m", "ensrlab.cli", "verify", "all", "--seed", "0"]
    procs = [subprocess.Popen(cmd, stdout=subprocess.PIPE, stderr=subprocess.PIPE)
             for _ in range(2)]
    results = [p.communicate(timeout=1200) for p in procs]
    codes = [p.returncode for p in procs]
    same = results[0][0] == results[1][0] and len(results[0][0]) > 0
    ok = same and codes == [0, 0]
    acceptance_record(10, "verify all twice with one seed gives identical JSON", ok,
                      f"(exit codes {codes}, {len(results[0][0])} bytes)")
    assert same
    assert codes == [0, 0], results[0][1].decode()
