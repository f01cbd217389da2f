"""Small dense linear algebra: one-sided Jacobi SVD and simplex projection.

The Jacobi routine works on stacks of matrices.  Column pairs are visited in
round-robin (tournament) order so that every rotation of one round touches a
disjoint pair of columns, which lets a whole round be applied with a handful
of vectorized operations across both the pairs and the batch.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
# Above this many columns the dense LAPACK driver is used by ``svd(..., method="auto")``.
JACOBI_MAX_DIM = 64


@lru_cache(maxsize=None)
def _tournament(n: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Rounds of disjoint column pairs covering every pair exactly once."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        left, right = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                left.append(min(a, b))
                right.append(max(a, b))
        if left:
            rounds.append((np.array(left), np.array(right)))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def jacobi_batch(a, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS,
                 compute_v: bool = True):
    """One-sided Jacobi on a stack of matrices.

    Parameters
    ----------
    a : array_like, shape (..., m, n)
        Matrices whose ``n`` columns are orthogonalized.
    tol : float
        Sweeps stop once the off-diagonal Frobenius norm of ``A^T A``,
        relative to ``||A||_F^2``, drops below ``tol``.
    max_sweeps : int
    compute_v : bool
        Whether to accumulate the right singular vectors.

    Returns
    -------
    s : ndarray, shape (..., n)
        Singular values in descending order (``n - m`` trailing zeros when
        ``n > m``).
    w : ndarray, shape (..., n, m)
        Rotated columns of ``A`` stored as rows, in the same order as ``s``;
        row ``k`` equals ``s[k] * u_k``.
    v : ndarray, shape (..., n, n) or None
        Right singular vectors as columns, ordered like ``s``.
    sweeps : int
    """
    a = np.asarray(a, dtype=float)
    *lead, m, n = a.shape
    batch = int(np.prod(lead)) if lead else 1
    w = np.swapaxes(a.reshape(batch, m, n), 1, 2).copy()
    vt = np.broadcast_to(np.eye(n), (batch, n, n)).copy() if compute_v else None
    scale = np.einsum("bij,bij->b", w, w)
    scale = np.where(scale > 0, scale, 1.0)
    rounds = _tournament(n)
    sweeps = 0
    tiny = np.finfo(float).tiny
    while rounds and sweeps < max_sweeps:
        sweeps += 1
        off = np.zeros(batch)
        for left, right in rounds:
            wi = w[:, left, :]
            wj = w[:, right, :]
            alpha = np.einsum("bkm,bkm->bk", wi, wi)
            beta = np.einsum("bkm,bkm->bk", wj, wj)
            gamma = np.einsum("bkm,bkm->bk", wi, wj)
            off += 2.0 * np.einsum("bk,bk->b", gamma, gamma)
            rotate = np.abs(gamma) > tiny
            g = np.where(rotate, gamma, 1.0)
            zeta = (beta - alpha) / (2.0 * g)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
            t = np.where(rotate, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            c3 = c[:, :, None]
            s3 = s[:, :, None]
            w[:, left, :] = c3 * wi - s3 * wj
            w[:, right, :] = s3 * wi + c3 * wj
            if compute_v:
                vi = vt[:, left, :]
                vj = vt[:, right, :]
                vt[:, left, :] = c3 * vi - s3 * vj
                vt[:, right, :] = s3 * vi + c3 * vj
        if np.all(np.sqrt(off) <= tol * scale):
            break
    sv = np.sqrt(np.einsum("bij,bij->bi", w, w))
    order = np.argsort(-sv, axis=1, kind="stable")
    sv = np.take_along_axis(sv, order, axis=1)
    w = np.take_along_axis(w, order[:, :, None], axis=1)
    v = None
    if compute_v:
        vt = np.take_along_axis(vt, order[:, :, None], axis=1)
        v = np.swapaxes(vt, 1, 2).reshape(*lead, n, n)
    return sv.reshape(*lead, n), w.reshape(*lead, n, m), v, sweeps


def _complete_basis(u: np.ndarray, k: int) -> np.ndarray:
    """Replace columns ``k:`` of ``u`` by an orthonormal completion of ``u[:, :k]``."""
    m, ncols = u.shape
    basis = [u[:, i] for i in range(k)]
    for e in np.eye(m):
        if len(basis) == ncols:
            break
        r = e.copy()
        for _ in range(2):
            for b in basis:
                r -= np.dot(b, r) * b
        norm = np.linalg.norm(r)
        if norm > 1e-8:
            basis.append(r / norm)
    return np.stack(basis, axis=1)


def jacobi_svd(a, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Thin SVD ``a = u @ diag(s) @ vt`` of a 2-D array by one-sided Jacobi.

    Returns ``u`` (m, r), ``s`` (r,), ``vt`` (r, n) with ``r = min(m, n)``.
    Left vectors belonging to (numerically) zero singular values are filled
    in by an orthonormal completion.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("jacobi_svd expects a 2-D array")
    m, n = a.shape
    if n > m:
        u, s, vt = jacobi_svd(a.T, tol, max_sweeps)
        return vt.T, s, u.T
    s, w, v, _ = jacobi_batch(a, tol, max_sweeps, compute_v=True)
    u = w.T.copy()
    cutoff = max(s[0], 1.0) * 1e-13 if s.size else 0.0
    good = int(np.sum(s > cutoff))
    u[:, :good] /= s[:good]
    if good < n:
        u = _complete_basis(u, good)
    return u, s, v.T


def svd(a, method: str = "auto"):
    """Thin SVD with a choice of backend.

    ``method="jacobi"`` always uses :func:`jacobi_svd`; ``"lapack"`` uses
    ``numpy.linalg.svd``; ``"auto"`` picks Jacobi up to ``JACOBI_MAX_DIM``
    columns/rows on the short side and LAPACK beyond.
    """
    a = np.asarray(a, dtype=float)
    if method == "auto":
        method = "jacobi" if min(a.shape) <= JACOBI_MAX_DIM else "lapack"
    if method == "jacobi":
        return jacobi_svd(a)
    if method == "lapack":
        return np.linalg.svd(a, full_matrices=False)
    raise ValueError(f"unknown SVD method {method!r}")


def project_simplex(x) -> np.ndarray:
    """Euclidean projection of each row (last axis) onto the probability simplex."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    u = -np.sort(-x, axis=-1)
    css = np.cumsum(u, axis=-1) - 1.0
    k = np.arange(1, n + 1)
    cond = u - css / k > 0
    rho = n - 1 - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, rho[..., None], axis=-1) / (rho[..., None] + 1)
    return np.maximum(x - theta, 0.0)
