"""Verification suites producing machine-readable reports.

Each suite returns a list of claims.  A claim records what was checked, the
observed value, the tolerance and whether it passed.  Reports are
deterministic for a given seed: no timestamps, fixed iteration order, and
floats rounded to 12 significant digits on serialization.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import replace
from importlib import resources

import numpy as np

from . import biso as biso_mod
from . import gaussian as gauss
from .dependence import maximal_correlation, rho_m_sq
from .errors import ClampWarning, InputError
from .filters import (FilterProblem, SearchConfig, _evaluator, p_error_curve, solve,
                      verify_bounds, verify_convexity)
from .iid import verify_memoryless_filters
from .prob import (Alphabet, JointDistribution, compose, mmse, output_joint, random_channel,
                   random_joint, variance)

SUITES = ("bounds", "convexity", "biso", "tensor", "gaussian")
FIXTURES = ("bsc_0.1_uniform", "bec_0.5_uniform", "mixed_3x3")


def load_fixture(name: str) -> JointDistribution:
    """One of the joint pmfs shipped with the package (see ``FIXTURES``)."""
    if name not in FIXTURES:
        raise InputError(f"unknown fixture {name!r}")
    text = resources.files("ensrlab").joinpath("data", f"{name}.json").read_text()
    return JointDistribution.from_dict(json.loads(text))


def claim(name: str, observed, tolerance, passed: bool, **details) -> dict:
    d = {"claim": name, "observed": observed, "tolerance": tolerance, "passed": bool(passed)}
    if details:
        d["details"] = details
    return d


def round_floats(obj, digits: int = 12):
    """Recursively round floats to ``digits`` significant digits for stable output."""
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.{digits}g}")
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return round_floats(obj.tolist(), digits)
    return obj


def _random_joints(seed: int, count: int, max_dim: int = 4):
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, 101]))
    out = []
    for _ in range(count):
        nx, ny = (int(v) for v in rng.integers(2, max_dim + 1, size=2))
        x = np.arange(nx, dtype=float)
        y = np.cumsum(rng.uniform(0.5, 1.5, size=ny))
        out.append(random_joint(rng, nx, ny, x, y))
    return out


# ---------------------------------------------------------------------------
# bounds and convexity


def _curve_joints(seed: int):
    named = [(name, load_fixture(name)) for name in FIXTURES]
    named += [(f"random_{i}", j) for i, j in enumerate(_random_joints(seed, 2, 3))]
    return named


def _eps_fractions(points: int = 9):
    return np.linspace(0.0, 1.0, points)


def _bounds_reports(seed, cfg, cache):
    if "bounds" not in cache:
        reports = []
        for name, j in _curve_joints(seed):
            grid = _eps_fractions() * rho_m_sq(j)
            reports.append((name, verify_bounds(j, grid, cfg)))
        cache["bounds"] = reports
    return cache["bounds"]


def suite_bounds(seed: int, cfg: SearchConfig, cache=None) -> list:
    claims = []
    for name, rep in _bounds_reports(seed, cfg, {} if cache is None else cache):
        worst = 0.0
        for r in rep.rows:
            worst = max(worst, -r.w_eps, r.w_eps - r.m_eps, r.m_eps - r.trivial_upper,
                        r.m_eps - r.erasure_upper)
        claims.append(claim(f"bounds[{name}]: 0 <= W <= M <= 1-eps and M <= 1-eps/rho_m^2",
                            worst, 1e-6, rep.passed, rho_m_sq=rep.rho_m_sq,
                            eps=[r.eps for r in rep.rows], w=[r.w_eps for r in rep.rows],
                            m=[r.m_eps for r in rep.rows]))
    return claims


def suite_convexity(seed: int, cfg: SearchConfig, cache=None) -> list:
    claims = []
    for name, rep in _bounds_reports(seed, cfg, {} if cache is None else cache):
        for label, curve in (("M", rep.m_curve), ("W", rep.w_curve)):
            if len(curve.points) < 3:
                continue
            c = verify_convexity(curve)
            claims.append(claim(f"convexity[{name}]: {label}_eps convex, (1-{label})/eps "
                                "non-increasing", max(c.max_violation, c.max_ratio_increase),
                                c.tolerance, c.passed, chord_violation=c.max_violation,
                                ratio_increase=c.max_ratio_increase))
    return claims


# ---------------------------------------------------------------------------
# BISO


def erasure_membership(joint: JointDistribution, eps: float, kind: str, resolution: float,
                       delta: float) -> dict:
    """Does the near-optimal part of the lattice contain an erasure filter?

    Optimal filters need not be unique (for a symmetric source every filter
    with the right leakage can be optimal), so the grid argmin itself may
    not be an erasure channel.  The check instead looks at all feasible
    lattice filters within ``resolution`` of the lattice minimum and asks
    whether one of them erases: each row keeps its own symbol or emits a
    shared third symbol, with erasure probability within ``resolution`` of
    ``delta``, for some labelling of the outputs.
    """
    ev = _evaluator(joint)
    table = ev.grid_table(resolution, 1)
    rows = table["rows"]
    n1 = rows.shape[0]
    feas = table[kind] <= eps + 1e-12
    ensr = np.where(feas, table["ensr"], np.inf)
    best = float(ensr.min())
    near = np.flatnonzero(ensr <= best + resolution + 1e-12)
    r0 = rows[near // n1]
    r1 = rows[near % n1]
    found = False
    hit = None
    h = resolution + 1e-9
    for a, b, c in ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)):
        ok = ((r0[:, b] <= 1e-12) & (r1[:, a] <= 1e-12)
              & (np.abs(r0[:, c] - delta) <= h) & (np.abs(r1[:, c] - delta) <= h))
        if np.any(ok):
            i = int(np.flatnonzero(ok)[0])
            found = True
            hit = [r0[i].tolist(), r1[i].tolist()]
            break
    arg = int(np.argmin(ensr))
    return {"found": found, "grid_min": best, "near_optimal_count": int(near.size),
            "erasure_filter": hit,
            "grid_argmin": [rows[arg // n1].tolist(), rows[arg % n1].tolist()]}


def _biso_cases():
    cases = []
    for p in (0.3, 0.5, 0.7):
        cases.append((f"BSC(0.1),p={p}", biso_mod.bsc(0.1, p)))
        cases.append((f"BSC(0.3),p={p}", biso_mod.bsc(0.3, p)))
        cases.append((f"BEC(0.5),p={p}", biso_mod.bec(0.5, p)))
    return cases


def suite_biso(seed: int, cfg: SearchConfig, cache=None) -> list:
    claims = []
    grid_cfg = replace(cfg, include_erasure=False)
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, 202]))
    cases = _biso_cases()

    # symmetry identities
    worst = 0.0
    for _, b in cases:
        rep = biso_mod.report(b)
        x = b.x_alphabet.points
        m0 = float(b.merged_trans[0] @ x)
        worst = max(worst, abs(rep.var_x - rep.var_x_given_y1 - rep.var_cond_mean),
                    abs(m0 + rep.ex_given_y1))
    claims.append(claim("biso: var(X)-var(X|Y=1) = 4 var(Y) E[X|Y=1]^2 and "
                        "E[X|Y=0] = -E[X|Y=1]", worst, 1e-10, worst <= 1e-10))

    # linear MMSE relation and the efficiency ratio for random filters
    worst, ratio_err = 0.0, 0.0
    y = Alphabet([0.0, 1.0])
    for name, b in cases:
        if name.startswith("BSC(0.3)"):
            continue
        _, ratio = biso_mod.initial_efficiency(b)
        rep = biso_mod.report(b)
        for _ in range(100):
            f = random_channel(rng, y, 3)
            lhs, rhs = biso_mod.mmse_linear_relation(b, f)
            worst = max(worst, abs(lhs - rhs))
            gain_x = rep.var_x - mmse(compose(b.joint, f))
            if gain_x > 1e-9:
                gain_y = rep.var_y - lhs
                ratio_err = max(ratio_err, abs(gain_y / gain_x - ratio))
    claims.append(claim("biso: mmse(Y|Z) = (mmse(X|Z) - var(X|Y=1)) / (4 E[X|Y=1]^2) "
                        "for random filters", worst, 1e-10, worst < 1e-10))
    claims.append(claim("biso: (var(Y)-mmse(Y|Z)) / (var(X)-mmse(X|Z)) = 1/(4 E[X|Y=1]^2)",
                        ratio_err, 1e-8, ratio_err <= 1e-8))

    # BEC maximal correlation
    bec_err = max(abs(biso_mod.report(biso_mod.bec(0.5, p)).rho_m_sq - 0.5)
                  for p in (0.3, 0.5, 0.7))
    claims.append(claim("biso: rho_m^2 of BEC(0.5) equals 1 - delta for every p",
                        bec_err, 1e-8, bec_err <= 1e-8))

    # weak closed form against the weak grid search
    worst = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClampWarning)
        for name, b in cases:
            if name.startswith("BSC(0.3)"):
                continue
            lim = FilterProblem(b.joint, 0.0, "weak").limit
            for frac in (0.25, 0.5, 0.75):
                eps = frac * lim
                w = solve(FilterProblem(b.joint, eps, "weak"), grid_cfg).ensr
                worst = max(worst, abs(w - biso_mod.w_eps_closed(b, eps)))
    claims.append(claim("biso: weak grid search equals 1 - eps var(X)/(4 var(Y) E[X|Y=1]^2)",
                        worst, 1e-3, worst <= 1e-3))

    # symmetric sources: strong search equals the erasure value, optimum erases
    bsc_eps = [0.08 * i for i in range(1, 9)]
    bec_eps = [0.05 * i for i in range(1, 11)]
    for label, b, grid, lim in (("BSC(0.1)", biso_mod.bsc(0.1, 0.5), bsc_eps, 0.64),
                                ("BEC(0.5)", biso_mod.bec(0.5, 0.5), bec_eps, 0.5)):
        worst_m, worst_w, missing = 0.0, 0.0, []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ClampWarning)
            for eps in grid:
                target = 1.0 - eps / lim
                m = solve(FilterProblem(b.joint, eps, "strong"), grid_cfg).ensr
                worst_m = max(worst_m, abs(m - target))
                if label.startswith("BSC"):
                    w = solve(FilterProblem(b.joint, eps, "weak"), grid_cfg).ensr
                    worst_w = max(worst_w, abs(w - target))
                mem = erasure_membership(b.joint, min(eps, lim), "strong", cfg.resolution,
                                         max(target, 0.0))
                if not mem["found"]:
                    missing.append(eps)
        claims.append(claim(f"biso: {label} p=0.5 strong search equals 1 - eps/{lim}",
                            worst_m, 1e-3, worst_m <= 1e-3))
        if label.startswith("BSC"):
            claims.append(claim(f"biso: {label} p=0.5 weak search equals 1 - eps/{lim}",
                                worst_w, 1e-3, worst_w <= 1e-3))
        claims.append(claim(f"biso: {label} p=0.5 near-optimal lattice filters include "
                            "the erasure filter", len(missing), 0, not missing,
                            eps_without_match=missing))

    # strong bracket on an asymmetric prior
    worst = 0.0
    for b in (biso_mod.bsc(0.1, 0.3), biso_mod.bec(0.5, 0.3)):
        lim = rho_m_sq(b.joint)
        for frac in (0.25, 0.5, 0.75):
            eps = frac * lim
            lo, hi = biso_mod.m_eps_bounds(b, eps)
            m = solve(FilterProblem(b.joint, eps, "strong"), grid_cfg).ensr
            worst = max(worst, lo - m, m - hi)
    claims.append(claim("biso: weak closed form <= strong search <= 1 - eps/rho_m^2 (p=0.3)",
                        worst, 1e-6, worst <= 1e-6))

    # error-probability sandwich
    worst, fails = -np.inf, []
    for p in (0.5, 0.6, 0.75):
        for label, b in (("BSC(0.1)", biso_mod.bsc(0.1, p)), ("BEC(0.5)", biso_mod.bec(0.5, p))):
            lim = FilterProblem(b.joint, 0.0, "weak").limit
            curve = p_error_curve(b.joint, np.linspace(0.0, 1.0, 6) * lim, grid_cfg)
            for pt in curve.points:
                lo = pt.extras["sandwich_lower"]
                hi = pt.extras["sandwich_upper"]
                miss = max(lo - pt.value, pt.value - hi)
                worst = max(worst, miss)
                if miss > 1e-6:
                    fails.append(f"{label},p={p},eps={pt.eps:.4g}")
    claims.append(claim("biso: W_eps <= P_error / var(Y) <= 2 W_eps", worst, 1e-6,
                        not fails, failures=fails))
    return claims


# ---------------------------------------------------------------------------
# tensorization


def suite_tensor(seed: int, cfg: SearchConfig, cache=None) -> list:
    claims = []
    base = load_fixture("bsc_0.1_uniform")
    rep = verify_memoryless_filters(base, 0.32, 200, seed=seed, config=cfg)
    claims.append(claim("tensor: memoryless filters on two BSC(0.1) copies never beat "
                        "the single-letter optimum", rep.violations, 0, rep.violations == 0,
                        min_margin=rep.min_margin, single_letter=rep.single_letter))
    claims.append(claim("tensor: the replicated single-letter optimum attains 0.5",
                        abs(rep.replicated - 0.5), 1e-3,
                        abs(rep.replicated - 0.5) <= 1e-3
                        and abs(rep.replicated - rep.single_letter) <= 1e-10,
                        replicated=rep.replicated))
    claims.append(claim("tensor: rho_m of the product equals the largest component",
                        rep.tensor_max_error, 1e-8, rep.tensor_max_error <= 1e-8))
    claims.append(claim("tensor: sigma_min of the product equals sigma_min^n",
                        rep.sigma_identity_error, 1e-8, rep.sigma_identity_error <= 1e-8))
    claims.append(claim("tensor: weak per-coordinate budgets never beat W_eps",
                        rep.weak_violations, 0, rep.weak_violations == 0,
                        min_margin=rep.weak_min_margin))
    for i, j in enumerate(_random_joints(seed + 7, 2, 2)):
        eps = 0.5 * rho_m_sq(j)
        r = verify_memoryless_filters(j, eps, 50, seed=seed + i, config=cfg)
        claims.append(claim(f"tensor: random 2x2 base {i} passes every product check",
                            r.violations + r.weak_violations, 0, r.passed,
                            report=r.to_dict()))
    return claims


# ---------------------------------------------------------------------------
# Gaussian


def suite_gaussian(seed: int, cfg: SearchConfig, cache=None) -> list:
    claims = []
    gp = gauss.GaussianPair(1.0, 1.0, 0.8)
    expected = {0.16: 3.0, 0.32: 1.0, 0.48: 1.0 / 3.0}
    worst = max(abs(gauss.gamma_eps(gp, e) ** 2 - g2) for e, g2 in expected.items())
    claims.append(claim("gaussian: gamma_eps^2 = var(Y)(rho^2/eps - 1)", worst, 1e-12,
                        worst <= 1e-12))
    rep = gauss.verify_gaussian_curve(gp, sorted(expected))
    dev = max(abs(r.numeric - r.closed_form) for r in rep.rows)
    claims.append(claim("gaussian: quantized additive-noise search equals 1 - eps/rho^2",
                        dev, rep.tolerance, all(r.ok for r in rep.rows),
                        rows=[r.__dict__ for r in rep.rows]))
    excess = max(w["numeric"] - w["gaussian_value"] for w in rep.worst_case)
    claims.append(claim("gaussian: non-Gaussian Y with matched rho_m does no worse than "
                        "the Gaussian curve", excess, rep.tolerance,
                        all(w["ok"] for w in rep.worst_case), rows=list(rep.worst_case)))
    mono = gauss.check_monotonicity(gp)
    claims.append(claim("gaussian: leakage decreases and mmse increases with gamma",
                        max(mono.max_rho_increase, mono.max_mmse_decrease), 1e-3,
                        mono.max_rho_increase < 1e-3 and mono.max_mmse_decrease < 1e-3))
    claims.append(claim("gaussian: quantized mmse(Y|Z) = var(Y) g^2/(var(Y)+g^2)",
                        mono.max_mmse_error, 1e-3, mono.max_mmse_error <= 1e-3))
    sandwich = gauss.verify_pearson_sandwich(gauss.laplace_reference(1.0), (0.1, 0.2))
    worst = max(max(r.lower - r.numeric, r.numeric - r.upper - sandwich.tolerance)
                for r in sandwich.rows)
    claims.append(claim("gaussian: Laplace-perturbed X lies between 1-eps/rho^2 and "
                        "1-eps/rho_m^2 (+0.02)", worst, 0.0, sandwich.passed,
                        rho_sq=sandwich.rho_sq, rho_m_sq=sandwich.rho_m_sq,
                        rows=[r.__dict__ for r in sandwich.rows]))
    return claims


_SUITE_FUNCS = {
    "bounds": suite_bounds,
    "convexity": suite_convexity,
    "biso": suite_biso,
    "tensor": suite_tensor,
    "gaussian": suite_gaussian,
}


def run_suite(suite: str, seed: int = 0, config: SearchConfig | None = None) -> dict:
    """Run one suite (or ``"all"``) and return the JSON-ready report."""
    names = SUITES if suite == "all" else (suite,)
    for n in names:
        if n not in _SUITE_FUNCS:
            raise InputError(f"unknown suite {n!r}; choose from {SUITES + ('all',)}")
    cfg = config or SearchConfig(seed=seed)
    cache: dict = {}
    claims = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClampWarning)
        for n in names:
            for c in _SUITE_FUNCS[n](seed, cfg, cache):
                c["suite"] = n
                claims.append(c)
    failed = [c["claim"] for c in claims if not c["passed"]]
    return round_floats({"suite": suite, "seed": seed, "passed": not failed,
                         "failed_claims": failed, "claims": claims})


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
