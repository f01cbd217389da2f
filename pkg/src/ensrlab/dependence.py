"""Maximal correlation and related spectral dependence measures.

For finite alphabets the maximal correlation of ``(U, V)`` is the second
singular value of the normalized joint matrix
``Q[u, v] = P(u, v) / sqrt(P(u) P(v))``, whose top singular value is always
1 with singular vectors ``sqrt(P(u))`` and ``sqrt(P(v))``.  The singular
vectors of the second singular value, rescaled by ``1 / sqrt(P)``, are the
optimal zero-mean unit-variance functions ``f(U)`` and ``g(V)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, DimensionError, ResourceError
from .linalg import jacobi_svd, svd
from .prob import Channel, JointDistribution, compose, output_joint, product

TIE_TOL = 1e-9
WEAK_INDEPENDENCE_TOL = 1e-9
PRODUCT_CAP = 4096


@dataclass(frozen=True, eq=False)
class SpectralReport:
    """Spectrum of the normalized joint matrix and the optimal function pair.

    ``sigma_min`` is the smallest of the ``|V|`` singular values of the
    operator ``g -> E[g(V) | U]`` (zeros padded when ``|V| > |U|``), so it
    vanishes exactly when the conditional pmfs ``P(. | v)`` are linearly
    dependent.  ``optimal_f``/``optimal_g`` are indexed by the full
    alphabets; zero-mass symbols get the value 0.
    """

    singular_values: tuple
    rho_m: float
    sigma_min: float
    optimal_f: np.ndarray
    optimal_g: np.ndarray
    multiplicity: int
    degenerate: bool

    @property
    def rho_m_sq(self) -> float:
        return self.rho_m ** 2

    def to_dict(self) -> dict:
        return {
            "rho_m": self.rho_m,
            "rho_m_sq": self.rho_m_sq,
            "sigma_min": self.sigma_min,
            "singular_values": list(self.singular_values),
            "multiplicity": self.multiplicity,
            "degenerate": self.degenerate,
            "optimal_f": self.optimal_f.tolist(),
            "optimal_g": self.optimal_g.tolist(),
        }


def _orthogonal_unit(v: np.ndarray) -> np.ndarray:
    """A unit vector orthogonal to the unit vector ``v`` (needs ``len(v) >= 2``)."""
    e = np.zeros_like(v)
    e[int(np.argmin(np.abs(v)))] = 1.0
    r = e - np.dot(v, e) * v
    return r / np.linalg.norm(r)


def normalized_matrix(j: JointDistribution):
    """``Q`` restricted to positive-mass symbols, with the kept index masks."""
    pu, pv = j.marginal_u, j.marginal_v
    keep_u, keep_v = pu > 0, pv > 0
    p = j.p[np.ix_(keep_u, keep_v)]
    q = p / np.sqrt(pu[keep_u])[:, None] / np.sqrt(pv[keep_v])[None, :]
    return q, keep_u, keep_v


def maximal_correlation(j: JointDistribution, method: str = "auto") -> SpectralReport:
    """Hirschfeld-Gebelein-Renyi maximal correlation of ``(U, V)``.

    Parameters
    ----------
    j : JointDistribution
    method : {"auto", "jacobi", "lapack"}
        SVD backend, see :func:`ensrlab.linalg.svd`.
    """
    q, keep_u, keep_v = normalized_matrix(j)
    nu, nv = q.shape
    full_f = np.zeros(j.shape[0])
    full_g = np.zeros(j.shape[1])
    if nu == 1 or nv == 1:
        full_f.flags.writeable = False
        full_g.flags.writeable = False
        sigma_min = 1.0 if nv == 1 else 0.0
        return SpectralReport((1.0,), 0.0, sigma_min, full_f, full_g, 1, True)

    _, s, _ = svd(q, method)
    s = np.clip(s, 0.0, None)
    sigma_min = float(s[-1]) if nv <= nu else 0.0

    pu = j.marginal_u[keep_u]
    pv = j.marginal_v[keep_v]
    su, sv = np.sqrt(pu), np.sqrt(pv)
    # Vectors come from the deflated matrix: its range is orthogonal to the
    # constant functions even when the top singular value 1 is repeated.
    ud, sd, vtd = svd(q - np.outer(su, sv), method)
    rho = float(min(1.0, sd[0]))
    multiplicity = int(np.sum(np.abs(sd - sd[0]) <= TIE_TOL))
    if sd[0] > 1e-13:
        a, b = ud[:, 0], vtd[0]
    else:
        a, b = _orthogonal_unit(su), _orthogonal_unit(sv)
    f = a / su
    g = b / sv
    # deterministic sign: largest-magnitude entry of f is positive
    if f[np.argmax(np.abs(f))] < 0:
        f, g = -f, -g
    full_f[keep_u] = f
    full_g[keep_v] = g
    full_f.flags.writeable = False
    full_g.flags.writeable = False
    return SpectralReport(tuple(float(x) for x in s), rho, sigma_min, full_f, full_g,
                          multiplicity, False)


def rho_m_sq(j: JointDistribution, method: str = "auto") -> float:
    return maximal_correlation(j, method).rho_m_sq


def _centered(j: JointDistribution, f):
    f = np.asarray(f, dtype=float)
    if f.shape != (j.shape[0],):
        raise DimensionError(f"function has shape {f.shape}, expected ({j.shape[0]},)")
    pu = j.marginal_u
    fc = f - np.dot(pu, f)
    var = float(np.dot(pu, fc * fc))
    if var <= 1e-15 * max(1.0, float(np.dot(pu, f * f))):
        raise DegenerateError("f(U) is almost surely constant")
    return fc, var


def renyi_value(j: JointDistribution, f) -> float:
    """``E[E[f(U)|V]^2] / var(f(U))`` after centering ``f``.

    The supremum over ``f`` equals the squared maximal correlation.
    """
    fc, var = _centered(j, f)
    pv = j.marginal_v
    a = fc @ j.p
    live = pv > 0
    return float(np.sum(a[live] ** 2 / pv[live]) / var)


def normalized_mmse(j: JointDistribution, f) -> float:
    """``mmse(f(U) | V) / var(f(U))`` by direct conditional-variance sums."""
    fc, var = _centered(j, f)
    pv = j.marginal_v
    total = 0.0
    for col in range(j.shape[1]):
        if pv[col] <= 0:
            continue
        w = j.p[:, col] / pv[col]
        m = np.dot(w, fc)
        total += pv[col] * np.dot(w, (fc - m) ** 2)
    return float(total / var)


def min_normalized_mmse(j: JointDistribution, method: str = "auto"):
    """Smallest ``mmse(f(U)|V)/var(f(U))`` over non-constant ``f``.

    Returns ``(value, f)`` where ``f`` is the optimal function of the
    maximal-correlation report; the value is ``1 - rho_m^2``.
    """
    rep = maximal_correlation(j, method)
    if rep.degenerate:
        raise DegenerateError("a constant variable admits no non-constant f")
    return normalized_mmse(j, rep.optimal_f), rep.optimal_f


@dataclass(frozen=True)
class WeakIndependence:
    weakly_independent: bool
    sigma_min: float
    rank: int


def weak_independence_test(channel_x_given_y: Channel, pmf_y,
                           tol: float = WEAK_INDEPENDENCE_TOL) -> WeakIndependence:
    """Is the family ``{P_{X|Y}(.|y)}`` linearly dependent?

    ``channel_x_given_y`` has input alphabet ``Y`` and output alphabet ``X``.
    """
    pmf_y = np.asarray(pmf_y, dtype=float)
    if pmf_y.shape != (len(channel_x_given_y.input),):
        raise DimensionError("pmf_y does not match the channel input alphabet")
    j = JointDistribution.from_conditional(channel_x_given_y.output, channel_x_given_y.input,
                                           pmf_y, channel_x_given_y.k)
    rep = maximal_correlation(j)
    _, s, _ = jacobi_svd(channel_x_given_y.k)
    rank = int(np.sum(s > tol * max(s[0], 1.0)))
    return WeakIndependence(rep.sigma_min <= tol, rep.sigma_min, rank)


@dataclass(frozen=True)
class SdpiCheck:
    lhs: float
    rhs: float
    holds: bool


def verify_sdpi(j_xy: JointDistribution, filt: Channel, slack: float = 1e-8) -> SdpiCheck:
    """Check ``rho_m^2(X;Z) <= rho_m^2(X;Y) rho_m^2(Y;Z)`` for ``X - Y - Z``."""
    lhs = rho_m_sq(compose(j_xy, filt))
    j_yz = output_joint(j_xy.marginal_v, j_xy.alphabet_v, filt)
    rhs = rho_m_sq(j_xy) * rho_m_sq(j_yz)
    return SdpiCheck(lhs, rhs, lhs <= rhs + slack)


def tensor_rho_m(j1: JointDistribution, j2: JointDistribution, cap: int = PRODUCT_CAP):
    """Maximal correlation of two independent pairs taken jointly.

    Returns ``(rho_product, max_components)``; the two agree by tensorization.
    """
    rows = j1.shape[0] * j2.shape[0]
    cols = j1.shape[1] * j2.shape[1]
    if max(rows, cols) > cap:
        raise ResourceError(f"product joint {rows}x{cols} exceeds the cap {cap}")
    rho_product = maximal_correlation(product(j1, j2)).rho_m
    return rho_product, max(maximal_correlation(j1).rho_m, maximal_correlation(j2).rho_m)
