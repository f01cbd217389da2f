"""Numerical search for optimal privacy filters.

Given a joint pmf of a private ``X`` and a useful ``Y``, a privacy filter is
a channel ``P_{Z|Y}``.  The search minimizes the estimation noise-to-signal
ratio ``mmse(Y|Z)/var(Y)`` (or the MAP error probability of guessing ``Y``)
subject to a leakage constraint on ``X``:

* ``kind="strong"``: ``rho_m^2(X;Z) <= eps`` (every function of ``X`` is
  protected);
* ``kind="weak"``: ``eta_Z^2(X) <= eps`` (only ``X`` itself is protected).

Two engines are available.  For binary ``Y`` with three output symbols the
stochastic matrices are enumerated on a lattice of resolution ``h`` and the
best lattice points are refined locally.  Otherwise a multi-start projected
gradient descent on a quadratic-penalty objective is run from Dirichlet
restarts plus the erasure filter.  Every candidate is finally made exactly
feasible (see ``_repair``), re-evaluated, and the best one is returned, so a
reported value is always an achievable upper bound on the infimum.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .dependence import maximal_correlation
from .errors import ClampWarning, DegenerateError, InfeasibleError, InputError, ScopeError
from .linalg import jacobi_batch, project_simplex
from .prob import (Alphabet, Channel, JointDistribution, compose, correlation_ratio_sq,
                   mmse, output_joint, variance)

KINDS = ("strong", "weak")
OBJECTIVES = ("ensr", "bayes")
FEAS_TOL = 1e-12
TIE_TOL = 1e-12
GRID_CHUNK = 1 << 17


def max_threads() -> int:
    """Worker cap: ``ENSRLAB_THREADS`` if set, else the CPU count."""
    cap = os.environ.get("ENSRLAB_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


@dataclass(frozen=True)
class SearchConfig:
    seed: int = 0
    resolution: float = 0.02
    restarts: int = 32
    tolerance: float = 1e-6
    use_grid: bool = True
    include_erasure: bool = True
    refine_top: int = 8
    mu0: float = 10.0
    rounds: int = 5
    max_iter: int = 150
    gradient: str = "analytic"
    fd_step: float = 1e-6
    threads: int | None = None

    def __post_init__(self):
        if not 0 < self.resolution <= 0.5:
            raise InputError("grid resolution must lie in (0, 0.5]")
        if self.restarts < 0:
            raise InputError("restarts must be non-negative")
        if self.gradient not in ("analytic", "fd"):
            raise InputError(f"unknown gradient mode {self.gradient!r}")


@dataclass(frozen=True, eq=False)
class FilterProblem:
    """One instance of the privacy-constrained estimation problem.

    ``eps`` is clamped into ``[0, limit]`` where ``limit`` is
    ``rho_m^2(X;Y)`` for strong privacy and ``eta_Y^2(X)`` for weak privacy;
    larger values are already met by the identity filter.
    """

    joint: JointDistribution
    eps: float
    kind: str = "strong"
    z_size: int | None = None
    requested_eps: float = field(init=False)
    limit: float = field(init=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not math.isfinite(self.eps):
            raise InputError("eps must be finite")
        if self.eps < 0:
            raise InfeasibleError(f"privacy level eps={self.eps} is negative")
        j = self.joint
        if variance(j.marginal_v, j.alphabet_v.points) <= 0:
            raise DegenerateError("Y is constant; the ENSR is undefined")
        ny = j.shape[1]
        z = ny + 1 if self.z_size is None else int(self.z_size)
        if z < 2:
            raise InputError("z_size must be at least 2")
        if self.kind == "strong":
            limit = maximal_correlation(j).rho_m_sq
        else:
            if variance(j.marginal_u, j.alphabet_u.points) <= 0:
                raise DegenerateError("X is constant; weak privacy is undefined")
            limit = correlation_ratio_sq(j)
        eps = float(self.eps)
        if eps > limit:
            if eps - limit > 1e-9 * max(1.0, limit):
                warnings.warn(f"eps={eps:.6g} exceeds the leakage of Y itself ({limit:.6g}); "
                              "clamped", ClampWarning, stacklevel=3)
            eps = limit
        object.__setattr__(self, "requested_eps", float(self.eps))
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "limit", float(limit))
        object.__setattr__(self, "z_size", z)


@dataclass(frozen=True, eq=False)
class FilterSolution:
    filter: Channel
    ensr: float
    privacy_strong: float
    privacy_weak: float
    bayes_error: float
    method: str
    restarts_used: int
    eps: float
    kind: str
    objective: str = "ensr"

    @property
    def value(self) -> float:
        """The optimized quantity: ENSR or MAP error probability."""
        return self.ensr if self.objective == "ensr" else self.bayes_error

    @property
    def slack(self) -> float:
        used = self.privacy_strong if self.kind == "strong" else self.privacy_weak
        return self.eps - used

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "kind": self.kind,
            "objective": self.objective,
            "value": self.value,
            "ensr": self.ensr,
            "privacy_strong": self.privacy_strong,
            "privacy_weak": self.privacy_weak,
            "bayes_error": self.bayes_error,
            "slack": self.slack,
            "method": self.method,
            "restarts_used": self.restarts_used,
            "filter": self.filter.to_dict(),
        }


# ---------------------------------------------------------------------------
# batched evaluation


class _Evaluator:
    """Vectorized objective/constraint values and gradients for one joint.

    Filters are stacks ``K`` of shape ``(B, |Y|, |Z|)``.  Every quantity
    has the form ``sum_z (c . K[:, z])^2 / p_z`` for a vector ``c`` over
    ``Y``, whose gradient is ``2 m_z c_y - m_z^2 p_y`` with
    ``m_z = (c . K[:, z]) / p_z``; on an empty output column the one-sided
    derivative is ``c_y^2 / p_y``.
    """

    def __init__(self, joint: JointDistribution):
        p = joint.p
        px = p.sum(axis=1)
        keep = px > 0
        self.p_xy = p[keep]
        self.p_x = px[keep]
        self.p_y = p.sum(axis=0)
        x = joint.alphabet_u.points[keep]
        y = joint.alphabet_v.points
        xc = x - self.p_x @ x
        yc = y - self.p_y @ y
        self.var_x = float(self.p_x @ xc ** 2)
        self.var_y = float(self.p_y @ yc ** 2)
        self.c_x = xc @ self.p_xy
        self.c_y = yc * self.p_y
        self.sqrt_px = np.sqrt(self.p_x)
        self.w = self.p_xy / self.sqrt_px[:, None]
        self.nx, self.ny = self.p_xy.shape
        self.live_y = self.p_y > 0
        self._null_cache: dict = {}
        self._grid_cache: dict = {}

    # -- building blocks

    def _pz(self, K):
        return np.einsum("y,byz->bz", self.p_y, K)

    def _quad(self, c, K, pz, grad):
        """``sum_z a_z^2 / p_z`` with ``a = c K``; ``c`` has shape (ny,) or (B, ny)."""
        c = np.broadcast_to(c, (K.shape[0], self.ny))
        a = np.einsum("by,byz->bz", c, K)
        live = pz > 1e-300
        m = np.where(live, a / np.where(live, pz, 1.0), 0.0)
        val = np.sum(m * a, axis=1)
        if not grad:
            return val, None
        g = 2.0 * m[:, None, :] * c[:, :, None] - (m * m)[:, None, :] * self.p_y[None, :, None]
        safe_py = np.where(self.live_y, self.p_y, 1.0)
        empty = np.where(self.live_y[None, :], c * c / safe_py[None, :], 0.0)
        g = np.where(live[:, None, :], g, empty[:, :, None])
        return val, g

    def ensr(self, K, grad=False):
        pz = self._pz(K)
        v, g = self._quad(self.c_y, K, pz, grad)
        return 1.0 - v / self.var_y, (None if g is None else -g / self.var_y)

    def eta_x(self, K, grad=False):
        pz = self._pz(K)
        if self.var_x <= 0:
            return np.zeros(K.shape[0]), (np.zeros_like(K) if grad else None)
        v, g = self._quad(self.c_x, K, pz, grad)
        return v / self.var_x, (None if g is None else g / self.var_x)

    def rho_sq(self, K, grad=False):
        B = K.shape[0]
        if self.nx < 2:
            return np.zeros(B), (np.zeros_like(K) if grad else None)
        pz = self._pz(K)
        root = np.sqrt(pz)
        inv = np.where(pz > 1e-300, 1.0 / np.where(pz > 1e-300, root, 1.0), 0.0)
        qt = np.einsum("xy,byz->bzx", self.w, K) * inv[:, :, None]
        qt -= root[:, :, None] * self.sqrt_px[None, None, :]
        if not grad and self.ny == 2:
            # with binary Y the deflated matrix has rank at most one, so its
            # squared spectral norm is its squared Frobenius norm
            return np.minimum(np.einsum("bzx,bzx->b", qt, qt), 1.0), None
        # top eigenpair of the small |X| x |X| Gram matrix; the reported
        # solution is re-evaluated by the Jacobi route in ``dependence``
        gram = np.einsum("bzx,bzw->bxw", qt, qt)
        lam, vec = np.linalg.eigh(gram)
        val = np.clip(lam[:, -1], 0.0, 1.0)
        if not grad:
            return val, None
        d = np.einsum("bx,xy->by", vec[:, :, -1], self.w)
        _, g = self._quad(d, K, pz, True)
        return val, g

    def bayes(self, K, grad=False):
        J = self.p_y[None, :, None] * K
        best = np.argmax(J, axis=1)
        top = np.take_along_axis(J, best[:, None, :], axis=1)[:, 0, :]
        val = 1.0 - top.sum(axis=1)
        if not grad:
            return val, None
        g = np.zeros_like(K)
        b_idx, z_idx = np.meshgrid(np.arange(K.shape[0]), np.arange(K.shape[2]), indexing="ij")
        g[b_idx, best, z_idx] = -self.p_y[best]
        return val, g

    def objective(self, name, K, grad=False):
        return self.ensr(K, grad) if name == "ensr" else self.bayes(K, grad)

    def constraint(self, kind, K, grad=False):
        return self.rho_sq(K, grad) if kind == "strong" else self.eta_x(K, grad)

    # -- penalized objective for the descent

    def penalized(self, K, eps, kind, objective, mu, grad, cfg):
        if grad and cfg.gradient == "fd":
            return self._penalized_fd(K, eps, kind, objective, mu, cfg.fd_step)
        f, gf = self.objective(objective, K, grad)
        c, gc = self.constraint(kind, K, grad)
        viol = np.maximum(c - eps, 0.0)
        val = f + mu * viol * viol
        if not grad:
            return val, None
        return val, gf + (2.0 * mu * viol)[:, None, None] * gc

    def _penalized_fd(self, K, eps, kind, objective, mu, h):
        B, ny, nz = K.shape
        val, _ = self.penalized(K, eps, kind, objective, mu, False, None)
        n = ny * nz
        eye = np.eye(n).reshape(n, ny, nz)
        plus = K[:, None] + h * eye[None]
        minus = np.maximum(K[:, None] - h * eye[None], 0.0)
        width = (plus - minus).reshape(B, n, n)[:, np.arange(n), np.arange(n)]
        stacked = np.concatenate([plus.reshape(-1, ny, nz), minus.reshape(-1, ny, nz)])
        f, _ = self.penalized(stacked, eps, kind, objective, mu, False, None)
        fp, fm = f[: B * n].reshape(B, n), f[B * n:].reshape(B, n)
        return val, ((fp - fm) / width).reshape(B, ny, nz)

    # -- exact feasibility

    def null_basis(self, kind):
        """Orthonormal basis of filter columns that leak nothing about ``X``."""
        if kind not in self._null_cache:
            if kind == "strong":
                d = self.p_xy - np.outer(self.p_x, self.p_y)
            else:
                d = self.c_x[None, :]
            s, _, v, _ = jacobi_batch(d)
            scale = max(float(np.max(np.abs(d))), 1e-300)
            self._null_cache[kind] = v[:, s <= 1e-10 * scale]
        return self._null_cache[kind]

    def repair(self, K, eps, kind):
        """Make every filter in the stack satisfy its constraint exactly.

        For ``eps > 0`` an infeasible filter is mixed with the constant filter
        that has the same output marginal.  That mixture keeps ``p_Z`` and
        scales every leakage measure by ``(1 - t)^2``, so the mixing weight
        is available in closed form.  For ``eps = 0`` the columns are
        projected onto the zero-leakage subspace and then mixed with the
        constant filter just enough to restore non-negativity.
        """
        K = K.copy()
        c, _ = self.constraint(kind, K)
        over = c > eps + FEAS_TOL
        if not np.any(over):
            return K
        pz = self._pz(K)
        if eps > FEAS_TOL:
            t = 1.0 - np.sqrt(eps / c[over]) * (1.0 - 1e-12)
            K[over] = ((1.0 - t)[:, None, None] * K[over]
                       + t[:, None, None] * pz[over][:, None, :])
            return K
        basis = self.null_basis(kind)
        proj = np.einsum("yk,wk,bwz->byz", basis, basis, K[over])
        r = pz[over][:, None, :]
        neg = proj < 0
        ratio = np.where(neg, -proj / np.where(neg, r - proj, 1.0), 0.0)
        t = np.clip(ratio.reshape(ratio.shape[0], -1).max(axis=1), 0.0, 1.0)
        fixed = (1.0 - t)[:, None, None] * proj + t[:, None, None] * r
        fixed = np.maximum(fixed, 0.0)
        fixed /= fixed.sum(axis=2, keepdims=True)
        K[over] = fixed
        c2, _ = self.constraint(kind, K)
        still = c2 > FEAS_TOL
        if np.any(still):
            K[still] = np.broadcast_to(self._pz(K[still])[:, None, :], K[still].shape)
        return K

    # -- lattice enumeration for binary Y

    def grid_table(self, resolution, threads):
        key = round(resolution, 12)
        if key not in self._grid_cache:
            rows = _simplex_lattice(int(round(1.0 / resolution)))
            n1 = rows.shape[0]
            total = n1 * n1
            starts = list(range(0, total, GRID_CHUNK))

            def work(start):
                idx = np.arange(start, min(start + GRID_CHUNK, total))
                K = np.stack([rows[idx // n1], rows[idx % n1]], axis=1)
                return (self.ensr(K)[0], self.eta_x(K)[0], self.rho_sq(K)[0], self.bayes(K)[0])

            if threads > 1 and len(starts) > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    parts = list(pool.map(work, starts))
            else:
                parts = [work(s) for s in starts]
            table = {
                "rows": rows,
                "ensr": np.concatenate([p[0] for p in parts]),
                "weak": np.concatenate([p[1] for p in parts]),
                "strong": np.concatenate([p[2] for p in parts]),
                "bayes": np.concatenate([p[3] for p in parts]),
            }
            self._grid_cache[key] = table
        return self._grid_cache[key]


@lru_cache(maxsize=8)
def _simplex_lattice(n: int) -> np.ndarray:
    pts = [(i, j, n - i - j) for i in range(n + 1) for j in range(n + 1 - i)]
    return np.array(pts, dtype=float) / n


_EVALUATORS: dict = {}
_EVALUATOR_CAP = 16


def _evaluator(joint: JointDistribution) -> _Evaluator:
    """Evaluator for ``joint``, shared between calls so the lattice table is reused."""
    key = (joint.shape, joint.p.tobytes(), joint.alphabet_u.points.tobytes(),
           joint.alphabet_v.points.tobytes())
    ev = _EVALUATORS.get(key)
    if ev is None:
        if len(_EVALUATORS) >= _EVALUATOR_CAP:
            _EVALUATORS.pop(next(iter(_EVALUATORS)))
        ev = _EVALUATORS[key] = _Evaluator(joint)
    return ev


# ---------------------------------------------------------------------------
# descent


def _descend(ev, K, eps, kind, objective, cfg, rounds=None):
    """Projected gradient on ``objective + mu * max(0, leak - eps)^2``.

    ``mu`` starts at ``cfg.mu0`` and grows tenfold per round.  Step sizes
    are chosen per restart by backtracking on the proximal sufficient
    decrease condition.
    """
    K = project_simplex(np.array(K, dtype=float))
    B = K.shape[0]
    step = np.full(B, 1.0)
    rounds = cfg.rounds if rounds is None else rounds
    for r in range(rounds):
        mu = cfg.mu0 * 10.0 ** r
        F, G = ev.penalized(K, eps, kind, objective, mu, True, cfg)
        active = np.ones(B, dtype=bool)
        for _ in range(cfg.max_iter):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            t = np.minimum(step[idx] * 2.0, 1e4)
            Kc, Fc, Gc = K[idx], F[idx], G[idx]
            newK = Kc.copy()
            newF = Fc.copy()
            pending = np.ones(idx.size, dtype=bool)
            for _ in range(50):
                p = np.flatnonzero(pending)
                trial = project_simplex(Kc[p] - t[p, None, None] * Gc[p])
                Ft, _ = ev.penalized(trial, eps, kind, objective, mu, False, cfg)
                D = trial - Kc[p]
                bound = (Fc[p] + np.einsum("bij,bij->b", Gc[p], D)
                         + np.einsum("bij,bij->b", D, D) / (2.0 * t[p]))
                ok = Ft <= bound + 1e-14
                newK[p[ok]] = trial[ok]
                newF[p[ok]] = Ft[ok]
                pending[p[ok]] = False
                t[p[~ok]] *= 0.5
                if not pending.any():
                    break
            moved = np.abs(newK - Kc).reshape(idx.size, -1).max(axis=1)
            gain = Fc - newF
            K[idx] = newK
            step[idx] = t
            F[idx] = newF
            done = (moved < 1e-10) | ((gain >= 0) & (gain < 1e-13))
            active[idx[done]] = False
            live = np.flatnonzero(active)
            if live.size:
                F[live], G[live] = ev.penalized(K[live], eps, kind, objective, mu, True, cfg)
    return K


def _identity_filter(ny, nz):
    K = np.zeros((ny, nz))
    K[:, :ny] = np.eye(ny)
    return K


def _erasure_filter(ny, nz, delta):
    K = np.zeros((ny, nz))
    K[:, :ny] = (1.0 - delta) * np.eye(ny)
    K[:, ny] = delta
    return K


def _seed_for(cfg, problem, objective):
    tag = int(round(problem.eps * 1e12))
    return np.random.SeedSequence([cfg.seed & 0xFFFFFFFFFFFFFFFF, KINDS.index(problem.kind),
                                   OBJECTIVES.index(objective), tag, problem.z_size])


def _as_start(K, ny, nz):
    K = np.asarray(K.k if isinstance(K, Channel) else K, dtype=float)
    if K.shape[0] != ny or K.shape[1] > nz:
        raise InputError(f"warm-start filter of shape {K.shape} does not fit ({ny}, {nz})")
    if K.shape[1] < nz:
        K = np.hstack([K, np.zeros((ny, nz - K.shape[1]))])
    return K


def _finalize(problem, K, method, restarts, objective) -> FilterSolution:
    j = problem.joint
    ny, nz = K.shape
    K = np.maximum(K, 0.0)
    K = K / K.sum(axis=1, keepdims=True)
    filt = Channel(j.alphabet_v, Alphabet.range(nz), K)
    j_yz = output_joint(j.marginal_v, j.alphabet_v, filt)
    j_xz = compose(j, filt)
    var_y = variance(j.marginal_v, j.alphabet_v.points)
    ensr = mmse(j_yz) / var_y
    strong = maximal_correlation(j_xz).rho_m_sq
    if variance(j.marginal_u, j.alphabet_u.points) > 0:
        weak = correlation_ratio_sq(j_xz)
    else:
        weak = 0.0
    return FilterSolution(filt, float(ensr), float(strong), float(weak),
                          float(bayes_error(j_yz)), method, restarts, problem.eps,
                          problem.kind, objective)


def solve(problem: FilterProblem, config: SearchConfig | None = None, *,
          candidates=(), objective: str = "ensr") -> FilterSolution:
    """Best filter found for ``problem``.

    Parameters
    ----------
    problem : FilterProblem
    config : SearchConfig, optional
    candidates : sequence of Channel or array
        Extra feasible-or-not starting filters (e.g. solutions at nearby
        ``eps``); they are repaired, refined and compete with the rest.
    objective : {"ensr", "bayes"}
        ``"bayes"`` minimizes the MAP error probability of guessing ``Y``.
    """
    cfg = config or SearchConfig()
    if objective not in OBJECTIVES:
        raise InputError(f"objective must be one of {OBJECTIVES}")
    ev = _evaluator(problem.joint)
    ny, nz = ev.ny, problem.z_size
    eps, kind = problem.eps, problem.kind

    if eps >= problem.limit and nz >= ny:
        return _finalize(problem, _identity_filter(ny, nz), "closed_form", 0, objective)

    rng = np.random.default_rng(_seed_for(cfg, problem, objective))
    fixed, fixed_methods = [], []
    starts, start_methods = [], []
    if cfg.include_erasure and nz >= ny + 1 and problem.limit > 0:
        E = _erasure_filter(ny, nz, 1.0 - eps / problem.limit)
        fixed.append(E)
        fixed_methods.append("erasure")
        starts.append(E)
        start_methods.append("gradient")
    for c in candidates:
        C = _as_start(c, ny, nz)
        fixed.append(C)
        fixed_methods.append("gradient")
        starts.append(C)
        start_methods.append("gradient")

    restarts = 0
    if cfg.use_grid and ny == 2 and nz == 3:
        table = ev.grid_table(cfg.resolution, cfg.threads or max_threads())
        rows = table["rows"]
        n1 = rows.shape[0]
        leak = table[kind]
        score = np.where(leak <= eps + FEAS_TOL, table[objective], np.inf)
        top = max(1, min(cfg.refine_top, score.size))
        part = np.argpartition(score, top - 1)[:top]
        order = part[np.lexsort((part, score[part]))]
        for i in order:
            if not np.isfinite(score[i]):
                break
            G = np.stack([rows[i // n1], rows[i % n1]])
            fixed.append(G)
            fixed_methods.append("grid")
            starts.append(G)
            start_methods.append("grid")
    else:
        restarts = cfg.restarts
        for _ in range(restarts):
            R = rng.dirichlet(np.ones(nz), size=ny)
            starts.append(R)
            start_methods.append("gradient")

    pool = list(fixed)
    methods = list(fixed_methods)
    if starts:
        refined = _descend(ev, np.stack(starts), eps, kind, objective, cfg)
        pool.extend(refined)
        methods.extend(start_methods)
    if not pool:
        pool.append(np.broadcast_to(np.eye(nz)[0], (ny, nz)).copy())
        methods.append("gradient")

    stack = ev.repair(np.stack(pool), eps, kind)
    vals, _ = ev.objective(objective, stack)
    leak, _ = ev.constraint(kind, stack)
    vals = np.where(leak <= eps + FEAS_TOL, vals, np.inf)
    best = int(np.argmin(vals))
    best = int(np.flatnonzero(vals <= vals[best] + TIE_TOL)[0])
    return _finalize(problem, stack[best], methods[best], restarts, objective)


# ---------------------------------------------------------------------------
# closed-form building blocks


def evaluate_filter(joint: JointDistribution, filt: Channel):
    """``(ensr, rho_m^2(X;Z), eta_Z^2(X), eta_Z^2(Y))`` of a given filter."""
    j_xz = compose(joint, filt)
    j_yz = output_joint(joint.marginal_v, joint.alphabet_v, filt)
    eta_yz = correlation_ratio_sq(j_yz)
    eta_xz = correlation_ratio_sq(j_xz)
    return 1.0 - eta_yz, maximal_correlation(j_xz).rho_m_sq, eta_xz, eta_yz


def erasure_filter(joint: JointDistribution, eps: float, kind: str = "strong") -> FilterSolution:
    """Erasure filter meeting the leakage budget with equality.

    With ``delta = 1 - eps / limit`` the leakage becomes exactly ``eps``
    and the ENSR equals ``delta``.
    """
    problem = FilterProblem(joint, eps, kind)
    ny = joint.shape[1]
    delta = 1.0 - problem.eps / problem.limit if problem.limit > 0 else 1.0
    return _finalize(problem, _erasure_filter(ny, ny + 1, delta), "erasure", 0, "ensr")


def bayes_error(j_yz: JointDistribution) -> float:
    """MAP error probability ``Pr(Y_hat(Z) != Y)``; ties go to the lowest index."""
    return float(max(0.0, 1.0 - j_yz.p.max(axis=0).sum()))


# ---------------------------------------------------------------------------
# curves


@dataclass(frozen=True, eq=False)
class CurvePoint:
    eps: float
    value: float
    solution: FilterSolution
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class PrivacyCurve:
    kind: str
    points: tuple

    def __post_init__(self):
        eps = [p.eps for p in self.points]
        if any(b <= a for a, b in zip(eps, eps[1:])):
            raise InputError("curve eps values must be strictly increasing")

    @property
    def eps(self) -> np.ndarray:
        return np.array([p.eps for p in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    def to_dict(self) -> dict:
        return {"kind": self.kind,
                "points": [dict(p.solution.to_dict(), **p.extras) for p in self.points]}


_CURVE_NAMES = {"strong": "M_eps", "weak": "W_eps"}


def _clamped_grid(eps_grid, limit):
    out = []
    for e in eps_grid:
        e = float(e)
        if e < 0:
            raise InfeasibleError(f"privacy level eps={e} is negative")
        if e > limit:
            if e - limit > 1e-9 * max(1.0, limit):
                warnings.warn(f"eps={e:.6g} clamped to {limit:.6g}", ClampWarning,
                              stacklevel=3)
            e = limit
        out.append(e)
    uniq = sorted(set(out))
    return uniq


def _sweep(joint, eps_values, kind, cfg, objective, seeds=None):
    """Solve along an increasing grid, then once more in reverse.

    Each forward solve is warm-started from the previous solution, which is
    feasible for the larger budget, so the values never increase along the
    grid.  The backward pass offers each point the (repaired) solution of
    its right neighbour.
    """
    seeds = seeds or {}
    sols = []
    prev = None
    for e in eps_values:
        extra = list(seeds.get(e, ()))
        if prev is not None:
            extra.append(prev.filter)
        sol = solve(FilterProblem(joint, e, kind), cfg, candidates=extra, objective=objective)
        sols.append(sol)
        prev = sol
    light = replace(cfg, restarts=0, refine_top=1)
    for i in range(len(sols) - 2, -1, -1):
        e = eps_values[i]
        again = solve(FilterProblem(joint, e, kind), light,
                      candidates=[sols[i + 1].filter, sols[i].filter], objective=objective)
        if again.value < sols[i].value - TIE_TOL:
            sols[i] = replace(again, restarts_used=sols[i].restarts_used)
    return sols


def privacy_curve(joint: JointDistribution, eps_grid, kind: str = "strong",
                  config: SearchConfig | None = None, seeds=None) -> PrivacyCurve:
    """Sampled ``eps -> M_eps`` (``kind="strong"``) or ``eps -> W_eps`` (``"weak"``).

    ``seeds`` optionally maps an ``eps`` value to extra candidate filters.
    """
    cfg = config or SearchConfig()
    limit = FilterProblem(joint, 0.0, kind).limit
    eps_values = _clamped_grid(eps_grid, limit)
    sols = _sweep(joint, eps_values, kind, cfg, "ensr", seeds)
    return PrivacyCurve(_CURVE_NAMES[kind],
                        tuple(CurvePoint(s.eps, s.ensr, s) for s in sols))


def p_error_curve(joint: JointDistribution, eps_grid,
                  config: SearchConfig | None = None) -> PrivacyCurve:
    """Privacy-constrained MAP error ``min Pr(Y_hat(Z) != Y)`` over weak-private filters.

    Each point also carries the weak ENSR ``W_eps`` computed over the same
    candidate pool, and the two-sided check ``W_eps <= P / v <= 2 W_eps``
    in ``extras``, where ``v = p (1 - p)`` is the variance of ``Y`` coded
    as 0/1.
    """
    cfg = config or SearchConfig()
    if joint.shape[1] != 2:
        raise ScopeError("the error-probability curve needs a binary Y")
    # the sandwich compares with the variance of the 0/1 indicator of Y; the
    # ENSR itself does not depend on the two numeric labels
    p1 = float(joint.marginal_v[1])
    var_y = p1 * (1.0 - p1)
    limit = FilterProblem(joint, 0.0, "weak").limit
    eps_values = _clamped_grid(eps_grid, limit)
    w_sols = _sweep(joint, eps_values, "weak", cfg, "ensr")
    seeds = {e: [s.filter] for e, s in zip(eps_values, w_sols)}
    p_sols = _sweep(joint, eps_values, "weak", cfg, "bayes", seeds)
    points = []
    for e, ws, ps in zip(eps_values, w_sols, p_sols):
        # both optimizations range over the same feasible set: share candidates
        if ps.ensr < ws.ensr:
            ws = replace(ps, objective="ensr", method=ps.method)
        w = ws.ensr
        lower, upper = w * var_y, 2.0 * w * var_y
        sp = ps.bayes_error
        points.append(CurvePoint(e, sp, ps, {
            "w_eps": w, "sandwich_lower": lower, "sandwich_upper": upper,
            "sandwich_ok": bool(lower - 1e-6 <= sp <= upper + 1e-6)}))
    return PrivacyCurve("P_error", tuple(points))


# ---------------------------------------------------------------------------
# verifiers


@dataclass(frozen=True)
class ConvexityReport:
    max_violation: float
    max_ratio_increase: float
    passed: bool
    tolerance: float


def verify_convexity(curve, tol: float = 1e-3) -> ConvexityReport:
    """Three-point convexity and monotone ``(1 - value)/eps`` along a sampled curve.

    ``curve`` is a :class:`PrivacyCurve` or a pair ``(eps, values)``.
    """
    if isinstance(curve, PrivacyCurve):
        eps, vals = curve.eps, curve.values
    else:
        eps, vals = (np.asarray(a, dtype=float) for a in curve)
    if eps.size < 3:
        raise InputError("convexity needs at least three points")
    viol = 0.0
    for i in range(1, eps.size - 1):
        lam = (eps[i] - eps[i - 1]) / (eps[i + 1] - eps[i - 1])
        chord = lam * vals[i + 1] + (1.0 - lam) * vals[i - 1]
        viol = max(viol, vals[i] - chord)
    pos = eps > 0
    ratio = (1.0 - vals[pos]) / eps[pos]
    rise = float(np.max(np.diff(ratio), initial=0.0))
    return ConvexityReport(float(viol), rise, bool(viol <= tol and rise <= tol), tol)


@dataclass(frozen=True)
class BoundsRow:
    eps: float
    w_eps: float
    m_eps: float
    trivial_upper: float
    erasure_upper: float
    ok: bool


@dataclass(frozen=True)
class BoundsReport:
    rows: tuple
    rho_m_sq: float
    passed: bool
    m_curve: PrivacyCurve = None
    w_curve: PrivacyCurve = None


def verify_bounds(joint: JointDistribution, eps_grid, config: SearchConfig | None = None,
                  slack: float = 1e-6) -> BoundsReport:
    """``0 <= W_eps <= M_eps <= 1 - eps`` and ``M_eps <= 1 - eps/rho_m^2(X;Y)``.

    ``eps`` values above ``rho_m^2(X;Y)`` are clamped.  Strong solutions are
    offered to the weak search (they are weakly private), which is what
    makes the ordering ``W <= M`` hold for the numerical values too.
    """
    cfg = config or SearchConfig()
    rho2 = FilterProblem(joint, 0.0, "strong").limit
    eps_values = _clamped_grid(eps_grid, rho2)
    m_curve = privacy_curve(joint, eps_values, "strong", cfg)
    seeds = {p.eps: [p.solution.filter] for p in m_curve.points}
    w_limit = FilterProblem(joint, 0.0, "weak").limit
    w_eps = [min(e, w_limit) for e in eps_values]
    w_curve_vals = {}
    w_points = privacy_curve(joint, sorted(set(w_eps)), "weak", cfg,
                             seeds={min(e, w_limit): seeds[e] for e in eps_values})
    for p in w_points.points:
        w_curve_vals[p.eps] = p.value
    rows = []
    ok_all = True
    for e, mp in zip(eps_values, m_curve.points):
        w = w_curve_vals[min(e, w_limit)]
        m = mp.value
        erasure_upper = 1.0 - e / rho2 if rho2 > 0 else 1.0
        ok = (-slack <= w <= m + slack and m <= 1.0 - e + slack
              and m <= erasure_upper + slack)
        ok_all &= ok
        rows.append(BoundsRow(e, w, m, 1.0 - e, erasure_upper, bool(ok)))
    return BoundsReport(tuple(rows), rho2, bool(ok_all), m_curve, w_points)


def make_feasible(joint: JointDistribution, filt: Channel, eps: float,
                  kind: str = "strong") -> Channel:
    """Shrink ``filt`` toward a constant filter until its leakage is at most ``eps``.

    Filters that already satisfy the budget are returned unchanged.
    """
    if kind not in KINDS:
        raise InputError(f"kind must be one of {KINDS}")
    if eps < 0:
        raise InfeasibleError(f"privacy level eps={eps} is negative")
    ev = _evaluator(joint)
    K = ev.repair(np.asarray(filt.k, dtype=float)[None], float(eps), kind)[0]
    if np.array_equal(K, filt.k):
        return filt
    return Channel(filt.input, filt.output, np.maximum(K, 0.0))
