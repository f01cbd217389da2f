"""Binary-input symmetric-output (BISO) channels from ``Y`` to ``X``.

``Y ~ Bernoulli(p)`` on ``{0, 1}`` and ``P(x | 1) = P(-x | 0)`` over a real
alphabet symmetric about 0.  For such pairs the weak privacy curve is affine
in ``eps`` and the MMSE of ``Y`` given any filter output is an affine
function of the MMSE of ``X``, with coefficients fixed by
``m = E[X | Y = 1]`` and ``var(X | Y = 1)``.

A symbol at 0 is split into two labels that share the value 0 and each get
half of its mass, so that the label set has even size ``2k``.  All moments
are unchanged by the split and computations use the merged alphabet.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dependence import maximal_correlation
from .errors import (ClampWarning, DegenerateError, DimensionError, InfeasibleError,
                     InputError, NotBisoError, ScopeError)
from .prob import Alphabet, Channel, JointDistribution, compose, mmse, output_joint

SYMMETRY_TOL = 1e-12
Y_ALPHABET = Alphabet([0.0, 1.0])


@dataclass(frozen=True, eq=False)
class BisoChannel:
    """A validated BISO pair.

    Attributes
    ----------
    k : int
        Half the number of labels after zero-splitting.
    p : float
        ``Pr(Y = 1)``.
    labels : tuple of int
        ``(-k, ..., -1, 1, ..., k)``.
    values : ndarray
        Numeric value of each label; the two labels of a split zero both
        carry 0.
    trans : ndarray, shape (2, 2k)
        ``P(label | y)`` with rows ``y = 0, 1``.
    x_alphabet : Alphabet
        The distinct numeric values (the merged alphabet).
    merged_trans : ndarray, shape (2, |x_alphabet|)
    """

    k: int
    p: float
    labels: tuple
    values: np.ndarray
    trans: np.ndarray
    x_alphabet: Alphabet
    merged_trans: np.ndarray

    @property
    def joint(self) -> JointDistribution:
        """Joint pmf of ``(X, Y)`` over the merged numeric alphabet."""
        return JointDistribution.from_conditional(self.x_alphabet, Y_ALPHABET,
                                                  [1.0 - self.p, self.p],
                                                  self.merged_trans)

    @property
    def channel(self) -> Channel:
        """``P_{X|Y}`` as a channel over the merged alphabet."""
        return Channel(Y_ALPHABET, self.x_alphabet, self.merged_trans)


def build_biso(p: float, trans, x_values=None) -> BisoChannel:
    """Validate and normalize a BISO channel.

    Parameters
    ----------
    p : float
        ``Pr(Y = 1)`` in ``(0, 1)``.
    trans : array_like, shape (2, n)
        ``P(x | y)``; row 0 is ``y = 0``, row 1 is ``y = 1``.
    x_values : array_like, optional
        Strictly increasing values symmetric about 0.  Defaults to
        ``-k..-1, 1..k`` for even ``n`` and ``-k..k`` for odd ``n``.

    Raises
    ------
    NotBisoError
        If the alphabet is not symmetric or ``P(x|1) != P(-x|0)`` beyond
        ``1e-12``.
    """
    p = float(p)
    if not 0.0 < p < 1.0:
        raise InputError(f"p must lie in (0, 1), got {p}")
    t = np.array(trans, dtype=float)
    if t.ndim != 2 or t.shape[0] != 2:
        raise DimensionError(f"trans must have two rows, got shape {t.shape}")
    n = t.shape[1]
    if x_values is None:
        half = n // 2
        if n % 2:
            vals = np.arange(-half, half + 1, dtype=float)
        else:
            vals = np.concatenate([np.arange(-half, 0), np.arange(1, half + 1)]).astype(float)
    else:
        vals = np.array(x_values, dtype=float).ravel()
    if vals.shape != (n,):
        raise DimensionError(f"{vals.size} x values for {n} trans columns")
    if np.any(np.diff(vals) <= 0):
        raise InputError("x values must be strictly increasing")
    if not np.allclose(vals, -vals[::-1], rtol=0.0, atol=SYMMETRY_TOL):
        raise NotBisoError("X alphabet is not symmetric about 0")
    if np.any(t < -SYMMETRY_TOL) or np.any(np.abs(t.sum(axis=1) - 1.0) > SYMMETRY_TOL * n):
        raise InputError("trans rows must be probability vectors")
    t = np.clip(t, 0.0, None)
    gap = float(np.max(np.abs(t[1] - t[0][::-1])))
    if gap > SYMMETRY_TOL:
        raise NotBisoError(f"P(x|1) differs from P(-x|0) by {gap:.3g}")
    # symmetrize exactly
    t[1] = t[0][::-1]
    merged = t.copy()

    has_zero = n % 2 == 1
    if has_zero:
        mid = n // 2
        zero = t[:, mid:mid + 1] / 2.0
        split = np.hstack([t[:, :mid], zero, zero, t[:, mid + 1:]])
        values = np.concatenate([vals[:mid], [0.0, 0.0], vals[mid + 1:]])
    else:
        split = t
        values = vals
    k = split.shape[1] // 2
    labels = tuple(range(-k, 0)) + tuple(range(1, k + 1))
    split.flags.writeable = False
    values.flags.writeable = False
    merged.flags.writeable = False
    return BisoChannel(k, p, labels, values, split, Alphabet(vals), merged)


def bsc(alpha: float, p: float = 0.5) -> BisoChannel:
    """Binary symmetric channel with crossover ``alpha`` onto ``{-1, +1}``."""
    if not 0.0 <= alpha <= 1.0:
        raise InputError("alpha must lie in [0, 1]")
    return build_biso(p, [[1.0 - alpha, alpha], [alpha, 1.0 - alpha]], [-1.0, 1.0])


def bec(delta: float, p: float = 0.5) -> BisoChannel:
    """Binary erasure channel onto ``{-1, 0, +1}`` with erasure probability ``delta``."""
    if not 0.0 <= delta <= 1.0:
        raise InputError("delta must lie in [0, 1]")
    return build_biso(p, [[1.0 - delta, delta, 0.0], [0.0, delta, 1.0 - delta]],
                      [-1.0, 0.0, 1.0])


def flip_y(b: BisoChannel) -> BisoChannel:
    """Relabel ``Y -> 1 - Y`` (and ``X -> -X`` to keep the orientation)."""
    return build_biso(1.0 - b.p, b.merged_trans, b.x_alphabet.points)


@dataclass(frozen=True)
class BisoReport:
    ex_given_y1: float
    var_x: float
    var_y: float
    var_x_given_y1: float
    rho_m_sq: float

    @property
    def var_cond_mean(self) -> float:
        """``var(E[X|Y]) = 4 var(Y) E[X|Y=1]^2``."""
        return 4.0 * self.var_y * self.ex_given_y1 ** 2


def report(b: BisoChannel) -> BisoReport:
    x = b.x_alphabet.points
    row = b.merged_trans[1]
    m = float(row @ x)
    var_x1 = float(row @ (x - m) ** 2)
    pmf_x = (1.0 - b.p) * b.merged_trans[0] + b.p * row
    mx = float(pmf_x @ x)
    var_x = float(pmf_x @ (x - mx) ** 2)
    rho2 = maximal_correlation(b.joint).rho_m_sq
    return BisoReport(m, var_x, b.p * (1.0 - b.p), var_x1, rho2)


def _nondegenerate(rep: BisoReport) -> None:
    if abs(rep.ex_given_y1) <= 1e-15:
        raise DegenerateError("E[X|Y=1] = 0: X carries no linear information about Y")


def _check_eps(eps: float, limit: float) -> float:
    eps = float(eps)
    if eps < 0:
        raise InfeasibleError(f"privacy level eps={eps} is negative")
    if eps > limit:
        warnings.warn(f"eps={eps:.6g} clamped to rho_m^2(X;Y)={limit:.6g}", ClampWarning,
                      stacklevel=3)
        eps = limit
    return eps


def w_eps_closed(b: BisoChannel, eps: float) -> float:
    """Weak privacy curve ``1 - eps var(X) / (4 var(Y) E[X|Y=1]^2)``.

    Past ``eps = eta_Y^2(X)`` the formula goes negative; the value is then
    clamped to 0 with a :class:`ClampWarning`.
    """
    rep = report(b)
    _nondegenerate(rep)
    eps = _check_eps(eps, rep.rho_m_sq)
    w = 1.0 - eps * rep.var_x / (4.0 * rep.var_y * rep.ex_given_y1 ** 2)
    if w < 0.0:
        warnings.warn(f"affine weak curve is negative ({w:.3g}) at eps={eps:.6g}; clamped to 0",
                      ClampWarning, stacklevel=2)
        w = 0.0
    return float(min(w, 1.0))


def m_eps_bounds(b: BisoChannel, eps: float):
    """``(lower, upper)`` bracket of the strong privacy curve.

    ``lower`` is the weak curve, ``upper = 1 - eps / rho_m^2(X;Y)``.
    """
    rep = report(b)
    _nondegenerate(rep)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClampWarning)
        eps_c = _check_eps(eps, rep.rho_m_sq)
    if eps_c != float(eps):
        warnings.warn(f"eps={eps:.6g} clamped to rho_m^2(X;Y)={rep.rho_m_sq:.6g}",
                      ClampWarning, stacklevel=2)
    lower = w_eps_closed(b, eps_c)
    upper = 1.0 - eps_c / rep.rho_m_sq
    return lower, float(max(upper, lower))


def mmse_linear_relation(b: BisoChannel, filt: Channel):
    """``(lhs, rhs)`` with ``lhs = mmse(Y|Z)`` and ``rhs`` from ``mmse(X|Z)``.

    ``rhs = (mmse(X|Z) - var(X|Y=1)) / (4 E[X|Y=1]^2)``; the two agree for
    every filter.
    """
    if filt.input != Y_ALPHABET:
        raise DimensionError("filter input alphabet must be the Y alphabet {0, 1}")
    rep = report(b)
    _nondegenerate(rep)
    lhs = mmse(output_joint([1.0 - b.p, b.p], Y_ALPHABET, filt))
    mmse_x = mmse(compose(b.joint, filt))
    rhs = (mmse_x - rep.var_x_given_y1) / (4.0 * rep.ex_given_y1 ** 2)
    return float(lhs), float(rhs)


def p_error_bounds(b: BisoChannel, eps: float):
    """Bracket ``[var(Y) W, 2 var(Y) W]`` of the privacy-constrained MAP error.

    The upper end is capped at ``1 - p``, the error of always guessing 1.
    Needs ``p >= 1/2``; apply :func:`flip_y` first otherwise.
    """
    if b.p < 0.5:
        raise ScopeError("error-probability bounds need p >= 1/2; relabel Y first")
    w = w_eps_closed(b, eps)
    var_y = b.p * (1.0 - b.p)
    return var_y * w, min(2.0 * var_y * w, 1.0 - b.p)


def initial_efficiency(b: BisoChannel):
    """``(f0, ratio)``: slope of the MMSE decrease at ``eps = 0`` and its per-unit bound.

    ``f0 = var(X) / (4 E[X|Y=1]^2)`` and ``ratio = 1 / (4 E[X|Y=1]^2)``,
    the largest possible value of
    ``(var(Y) - mmse(Y|Z)) / (var(X) - mmse(X|Z))``.
    """
    rep = report(b)
    _nondegenerate(rep)
    ratio = 1.0 / (4.0 * rep.ex_given_y1 ** 2)
    return rep.var_x * ratio, ratio


def from_dict(d: dict) -> BisoChannel:
    """Build from ``{"kind": "bsc"|"bec"|"custom", "p": ..., ...}``."""
    if not isinstance(d, dict):
        raise InputError("BISO description must be a JSON object")
    kind = d.get("kind", "bsc")
    p = d.get("p", 0.5)
    try:
        if kind == "bsc":
            return bsc(float(d["alpha"]), p)
        if kind == "bec":
            return bec(float(d["delta"]), p)
        if kind == "custom":
            return build_biso(p, d["trans"], d.get("x_values"))
    except KeyError as exc:
        raise InputError(f"BISO description lacks field {exc}") from None
    except TypeError as exc:
        raise InputError(f"malformed BISO description: {exc}") from None
    raise InputError(f"unknown BISO kind {kind!r}")
