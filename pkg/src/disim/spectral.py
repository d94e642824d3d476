"""Truncated SVD of sparse matrices, plus a dense reference SVD."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .exceptions import ConvergenceError, SizeCapError

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 1000
DEFAULT_OVERSAMPLING = 10
DEFAULT_ORACLE_CAP = 500


@dataclass(frozen=True)
class Embedding:
    """Top singular triplets: ``m @ right[:, k] == sigma[k] * left[:, k]``.

    Attributes
    ----------
    left : ndarray of shape (n_rows, K)
        Left singular vectors ``X_L`` (orthonormal columns).
    right : ndarray of shape (n_cols, K)
        Right singular vectors ``X_R``.
    sigma : ndarray of shape (K,)
        Nonincreasing singular values.
    residuals : ndarray of shape (K,) or None
        ``||m v_k - sigma_k u_k||_2`` at exit, when computed iteratively.
    """

    left: np.ndarray
    right: np.ndarray
    sigma: np.ndarray
    residuals: np.ndarray | None = None
    n_iter: int = 0
    info: dict = field(default_factory=dict)

    @property
    def k(self):
        return self.sigma.shape[0]

    def truncate(self, k):
        return Embedding(self.left[:, :k], self.right[:, :k], self.sigma[:k],
                         None if self.residuals is None else self.residuals[:k],
                         self.n_iter, dict(self.info))


def apply_sign_convention(left, right):
    """Flip singular pairs so each left column's largest-magnitude entry is positive.

    Ties go to the lowest row index. Operates on copies.
    """
    left = np.array(left, dtype=float, copy=True)
    right = np.array(right, dtype=float, copy=True)
    if left.shape[0] == 0:
        return left, right
    pivots = np.argmax(np.abs(left), axis=0)
    signs = np.sign(left[pivots, np.arange(left.shape[1])])
    signs[signs == 0] = 1.0
    return left * signs, right * signs


def _as_operator(m):
    if sp.issparse(m):
        return sp.csr_matrix(m, dtype=float)
    return np.asarray(m, dtype=float)


def truncated_svd(m, k, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, seed=0,
                  oversampling=DEFAULT_OVERSAMPLING):
    """Top-``k`` singular triplets by randomized subspace iteration.

    The iteration is block power iteration on the symmetrized matrix
    ``[[0, m], [m.T, 0]]``: a seeded Gaussian block of width
    ``k + oversampling`` is alternately multiplied by ``m`` and ``m.T`` and
    re-orthonormalized. After every sweep a Rayleigh-Ritz step extracts the
    singular triplets, and iteration stops once every one of the top ``k``
    residuals ``||m v - sigma u||_2`` is at most ``tol * max(1, sigma_1)``.

    Parameters
    ----------
    m : sparse matrix or ndarray of shape (n_rows, n_cols)
    k : int
        Number of triplets, ``1 <= k <= min(n_rows, n_cols)``.
    tol : float
    max_iter : int
        Maximum number of sweeps (one sweep = one product with ``m`` and one
        with ``m.T``).
    seed : int
        Seed of the starting block; results are reproducible for a fixed seed.
    oversampling : int
        Extra block columns beyond ``k``.

    Returns
    -------
    Embedding

    Raises
    ------
    ConvergenceError
        If the residual tolerance is not met within ``max_iter`` sweeps. The
        exception carries the best residuals reached.
    """
    m = _as_operator(m)
    n_rows, n_cols = m.shape
    k = int(k)
    if not 1 <= k <= min(n_rows, n_cols):
        raise ValueError(f"k must lie in [1, {min(n_rows, n_cols)}], got {k}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be positive")
    width = min(k + max(int(oversampling), 0), n_rows, n_cols)
    rng = np.random.default_rng(seed)
    q = rng.standard_normal((n_cols, width))
    q, _ = np.linalg.qr(q)

    best = None
    for sweep in range(1, max_iter + 1):
        u, _ = np.linalg.qr(m @ q)
        q, r = np.linalg.qr(m.T @ u)
        # u.T @ m @ q == r.T, so the Ritz problem needs no extra product
        a, s, bt = np.linalg.svd(r.T)
        left = u @ a[:, :k]
        right = q @ bt[:k].T
        sigma = s[:k]
        residuals = np.linalg.norm(m @ right - left * sigma, axis=0)
        threshold = tol * max(1.0, float(s[0]))
        if best is None or residuals.max() < best[3].max():
            best = (left, right, sigma, residuals)
        if residuals.max() <= threshold:
            left, right = apply_sign_convention(left, right)
            return Embedding(left, right, sigma.copy(), residuals, sweep,
                             {"tol": tol, "width": width, "seed": seed})
        q = q @ bt.T

    raise ConvergenceError(
        f"truncated_svd did not reach tol={tol:g} in {max_iter} sweeps "
        f"(best max residual {best[3].max():.3e})",
        residuals=best[3], n_iter=max_iter)


def dense_svd_oracle(m, cap=DEFAULT_ORACLE_CAP):
    """Full thin SVD by Householder bidiagonalization and implicit-shift QR.

    Backed by LAPACK ``gesvd``; the sign convention of
    :func:`apply_sign_convention` is applied.
    """
    if sp.issparse(m):
        m = m.toarray()
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if min(m.shape) > cap:
        raise SizeCapError(f"min dimension {min(m.shape)} exceeds the oracle cap {cap}")
    u, s, vt = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
    left, right = apply_sign_convention(u, vt.T)
    return Embedding(left, right, s)


def symmetrize(m):
    """Return the symmetric block matrix ``[[0, m], [m.T, 0]]`` in CSR form."""
    m = sp.csr_matrix(m, dtype=float)
    n_rows, n_cols = m.shape
    return sp.bmat([[sp.csr_matrix((n_rows, n_rows)), m],
                    [m.T, sp.csr_matrix((n_cols, n_cols))]], format="csr")


def spectral_norm(m, tol=1e-6, max_iter=10_000, seed=0):
    """Largest singular value by power iteration on the symmetrized matrix.

    On ``S = [[0, m], [m.T, 0]]`` the top eigenvalues come in pairs
    ``+-sigma_1``; any vector in their joint eigenspace satisfies
    ``||S x|| = sigma_1 ||x||``, so ``||S x_t||`` converges to ``sigma_1`` even
    though ``x_t`` itself oscillates. Stops when the relative change of the
    estimate drops below ``tol``.
    """
    s = symmetrize(m) if sp.issparse(m) else None
    if s is None:
        dense = np.asarray(m, dtype=float)
        n_rows, n_cols = dense.shape

        def apply(x):
            return np.concatenate([dense @ x[n_rows:], dense.T @ x[:n_rows]])
        size = n_rows + n_cols
    else:
        apply = s.__matmul__
        size = s.shape[0]
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(size)
    x /= np.linalg.norm(x)
    estimate = 0.0
    for _ in range(max_iter):
        y = apply(x)
        new = float(np.linalg.norm(y))
        if new == 0.0:
            return 0.0
        x = y / new
        if abs(new - estimate) <= tol * new:
            return new
        estimate = new
    return estimate
