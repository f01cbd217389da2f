"""Exact finite-alphabet probability machinery.

Joint distributions are stored as dense matrices ``p[u, v]`` over two
real-valued alphabets.  Channels are row-stochastic matrices ``k[y, z]``.
All objects are immutable after construction: the arrays they hold are
flagged read-only, so instances can be shared freely between threads.

Conditioning on a zero-probability symbol is never an error.  Such a symbol
contributes nothing to expectations over the conditioning variable, and its
conditional moments are reported as 0 with a flag in
:class:`ConditionalStats`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateError, DimensionError, InputError

PROB_TOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Alphabet:
    """Ordered set of distinct real values."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).ravel()
        if pts.size == 0:
            raise InputError("alphabet must contain at least one point")
        if not np.all(np.isfinite(pts)):
            raise InputError("alphabet points must be finite")
        if np.any(np.diff(pts) <= 0):
            raise InputError("alphabet points must be strictly increasing")
        object.__setattr__(self, "points", _readonly(pts))

    @classmethod
    def range(cls, n: int) -> "Alphabet":
        """The index alphabet ``{0, 1, ..., n-1}``."""
        return cls(np.arange(n, dtype=float))

    def __len__(self) -> int:
        return self.points.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Alphabet):
            return NotImplemented
        return bool(np.array_equal(self.points, other.points))

    __hash__ = None

    def __repr__(self) -> str:
        return f"Alphabet({self.points.tolist()})"


def _as_alphabet(a) -> Alphabet:
    return a if isinstance(a, Alphabet) else Alphabet(a)


def _check_pmf_entries(p: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(p)):
        raise InputError(f"{what} contains non-finite entries")
    if np.any(p < -PROB_TOL):
        raise InputError(f"{what} has negative entries")
    return np.clip(p, 0.0, None)


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Joint pmf of ``(U, V)`` with ``p[i, j] = P(U = u_i, V = v_j)``.

    The matrix is checked to sum to one within ``PROB_TOL`` and then
    renormalized once, so pmfs read from text files with rounding noise are
    accepted and stored exactly normalized.
    """

    alphabet_u: Alphabet
    alphabet_v: Alphabet
    p: np.ndarray

    def __post_init__(self):
        au = _as_alphabet(self.alphabet_u)
        av = _as_alphabet(self.alphabet_v)
        p = np.array(self.p, dtype=float)
        if p.shape != (len(au), len(av)):
            raise DimensionError(
                f"pmf shape {p.shape} does not match alphabets ({len(au)}, {len(av)})")
        p = _check_pmf_entries(p, "joint pmf")
        total = p.sum()
        if abs(total - 1.0) > PROB_TOL * max(1, p.size):
            raise InputError(f"joint pmf sums to {total!r}, not 1")
        p = p / total
        object.__setattr__(self, "alphabet_u", au)
        object.__setattr__(self, "alphabet_v", av)
        object.__setattr__(self, "p", _readonly(p))

    @classmethod
    def from_conditional(cls, alphabet_u, alphabet_v, pmf_v, cond) -> "JointDistribution":
        """Build ``P(u, v) = P(v) P(u | v)`` from ``cond[v, u] = P(u | v)``."""
        pmf_v = np.asarray(pmf_v, dtype=float)
        cond = np.asarray(cond, dtype=float)
        return cls(alphabet_u, alphabet_v, (pmf_v[:, None] * cond).T)

    @property
    def shape(self) -> tuple[int, int]:
        return self.p.shape

    @property
    def marginal_u(self) -> np.ndarray:
        return self.p.sum(axis=1)

    @property
    def marginal_v(self) -> np.ndarray:
        return self.p.sum(axis=0)

    def transpose(self) -> "JointDistribution":
        """The same law viewed as a joint of ``(V, U)``."""
        return JointDistribution(self.alphabet_v, self.alphabet_u, self.p.T)

    def to_dict(self) -> dict:
        return {
            "x_alphabet": self.alphabet_u.points.tolist(),
            "y_alphabet": self.alphabet_v.points.tolist(),
            "pmf": self.p.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JointDistribution":
        try:
            return cls(d["x_alphabet"], d["y_alphabet"], d["pmf"])
        except KeyError as exc:
            raise InputError(f"joint file is missing key {exc}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"malformed joint file: {exc}") from None

    @classmethod
    def load(cls, path) -> "JointDistribution":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read joint file {path}: {exc}") from None
        if not isinstance(d, dict):
            raise InputError("joint file must hold a JSON object")
        return cls.from_dict(d)


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic transition matrix ``k[y, z] = P(Z = z | Y = y)``."""

    input: Alphabet
    output: Alphabet
    k: np.ndarray

    def __post_init__(self):
        ai = _as_alphabet(self.input)
        ao = _as_alphabet(self.output)
        k = np.array(self.k, dtype=float)
        if k.shape != (len(ai), len(ao)):
            raise DimensionError(
                f"channel shape {k.shape} does not match alphabets ({len(ai)}, {len(ao)})")
        k = _check_pmf_entries(k, "channel")
        rows = k.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > PROB_TOL * max(1, k.shape[1])):
            raise InputError("every channel row must sum to 1")
        k = k / rows[:, None]
        object.__setattr__(self, "input", ai)
        object.__setattr__(self, "output", ao)
        object.__setattr__(self, "k", _readonly(k))

    @classmethod
    def identity(cls, alphabet, extra_outputs: int = 0) -> "Channel":
        """Noiseless channel, optionally padded with never-used output symbols."""
        a = _as_alphabet(alphabet)
        n = len(a)
        k = np.zeros((n, n + extra_outputs))
        k[:, :n] = np.eye(n)
        return cls(a, Alphabet.range(n + extra_outputs), k)

    @classmethod
    def constant(cls, alphabet, n_outputs: int = 1, output_pmf=None) -> "Channel":
        a = _as_alphabet(alphabet)
        if output_pmf is None:
            output_pmf = np.eye(n_outputs)[0]
        row = np.asarray(output_pmf, dtype=float)
        return cls(a, Alphabet.range(row.size), np.tile(row, (len(a), 1)))

    @classmethod
    def erasure(cls, alphabet, delta: float) -> "Channel":
        """Pass the input w.p. ``1 - delta``, emit the last output symbol otherwise."""
        if not 0.0 <= delta <= 1.0:
            raise InputError(f"erasure probability {delta} outside [0, 1]")
        a = _as_alphabet(alphabet)
        n = len(a)
        k = np.zeros((n, n + 1))
        k[:, :n] = (1.0 - delta) * np.eye(n)
        k[:, n] = delta
        return cls(a, Alphabet.range(n + 1), k)

    def to_dict(self) -> dict:
        return {
            "input_alphabet": self.input.points.tolist(),
            "output_alphabet": self.output.points.tolist(),
            "matrix": self.k.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Channel":
        try:
            return cls(d["input_alphabet"], d["output_alphabet"], d["matrix"])
        except KeyError as exc:
            raise InputError(f"channel file is missing key {exc}") from None


@dataclass(frozen=True, eq=False)
class ConditionalStats:
    """Per-symbol conditional moments of ``U`` given ``V``.

    ``undefined[j]`` is true where ``P(V = v_j) = 0``; the corresponding
    ``cond_mean`` and ``cond_var`` entries are 0 by convention.
    """

    cond_mean: np.ndarray
    cond_var: np.ndarray
    marginal_v: np.ndarray
    undefined: np.ndarray


def marginals(j: JointDistribution) -> tuple[np.ndarray, np.ndarray]:
    return j.marginal_u, j.marginal_v


def compose(j_xy: JointDistribution, filt: Channel) -> JointDistribution:
    """Joint of ``(X, Z)`` for the Markov chain ``X - Y - Z``."""
    if filt.input != j_xy.alphabet_v:
        raise DimensionError("filter input alphabet differs from the joint's second alphabet")
    return JointDistribution(j_xy.alphabet_u, filt.output, j_xy.p @ filt.k)


def output_joint(pmf_y, alphabet_y, filt: Channel) -> JointDistribution:
    """Joint of ``(Y, Z)`` when ``Y ~ pmf_y`` drives ``filt``."""
    if filt.input != _as_alphabet(alphabet_y):
        raise DimensionError("filter input alphabet differs from the source alphabet")
    return JointDistribution(alphabet_y, filt.output, np.asarray(pmf_y)[:, None] * filt.k)


def mean(pmf, values) -> float:
    return float(np.dot(pmf, values))


def variance(pmf, values) -> float:
    """Variance of a random variable taking ``values`` with probabilities ``pmf``."""
    pmf = np.asarray(pmf, dtype=float)
    values = np.asarray(values, dtype=float)
    m = np.dot(pmf, values)
    return float(np.dot(pmf, (values - m) ** 2))


def conditional_stats(j: JointDistribution) -> ConditionalStats:
    u = j.alphabet_u.points
    pv = j.marginal_v
    undefined = pv <= 0
    safe = np.where(undefined, 1.0, pv)
    cmean = np.where(undefined, 0.0, (u @ j.p) / safe)
    # centred second moment; E[U^2|v] - E[U|v]^2 cancels badly
    cvar = np.where(undefined, 0.0,
                    (((u[:, None] - cmean[None, :]) ** 2) * j.p).sum(axis=0) / safe)
    return ConditionalStats(_readonly(cmean), _readonly(cvar), _readonly(pv.copy()),
                            _readonly(undefined))


def mmse(j: JointDistribution) -> float:
    """Minimum mean-squared error of estimating ``U`` from ``V``: ``E[var(U|V)]``."""
    cs = conditional_stats(j)
    return float(np.dot(cs.marginal_v, cs.cond_var))


def correlation_ratio_sq(j: JointDistribution) -> float:
    """Squared correlation ratio ``var(E[U|V]) / var(U)``."""
    u = j.alphabet_u.points
    var_u = variance(j.marginal_u, u)
    if var_u <= 0:
        raise DegenerateError("U is constant; its correlation ratio is undefined")
    cs = conditional_stats(j)
    explained = variance(cs.marginal_v, cs.cond_mean)
    return min(1.0, max(0.0, explained / var_u))


def product(j1: JointDistribution, j2: JointDistribution) -> JointDistribution:
    """Joint of two independent pairs, ``((U1,U2), (V1,V2))``, on index alphabets.

    Symbol ``(a, b)`` of the product alphabet has index ``a * |U2| + b``
    (lexicographic order), matching ``numpy.kron``.
    """
    p = np.kron(j1.p, j2.p)
    return JointDistribution(Alphabet.range(p.shape[0]), Alphabet.range(p.shape[1]), p)


def random_joint(rng: np.random.Generator, nu: int, nv: int,
                 u_values: Sequence[float] | None = None,
                 v_values: Sequence[float] | None = None) -> JointDistribution:
    """A Dirichlet(1) joint on ``nu x nv`` cells with strictly positive marginals."""
    p = rng.dirichlet(np.ones(nu * nv)).reshape(nu, nv)
    au = Alphabet(u_values) if u_values is not None else Alphabet.range(nu)
    av = Alphabet(v_values) if v_values is not None else Alphabet.range(nv)
    return JointDistribution(au, av, p)


def random_channel(rng: np.random.Generator, input_alphabet, n_outputs: int) -> Channel:
    a = _as_alphabet(input_alphabet)
    k = rng.dirichlet(np.ones(n_outputs), size=len(a))
    return Channel(a, Alphabet.range(n_outputs), k)
