"""Misclustering against a known block model, and evaluation of error bounds."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.metrics import adjusted_rand_score

from .laplacian import build_laplacian
from .model import gamma_z, min_leverage, population_objects, sample_adjacency
from .pipeline import UNASSIGNED
from .spectral import spectral_norm

SQRT_384 = 8.0 * math.sqrt(6.0)


def default_constants(alpha=0.0):
    """``(c0, c1)`` obtained by chaining the k-means and subspace inequalities.

    ``alpha`` is the k-means approximation slack (0 for an exact minimizer).
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    base = (2.0 + alpha) ** 2 * SQRT_384 ** 2
    return 8.0 * base, 16.0 * base


def procrustes(X, script_X):
    """Orthogonal ``R`` minimizing ``||X - script_X R||_F``.

    With ``script_X.T @ X = W S Q^T`` the minimizer is ``R = W Q^T``.
    """
    X = np.asarray(X, dtype=float)
    script_X = np.asarray(script_X, dtype=float)
    if X.ndim != 2 or X.shape != script_X.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {script_X.shape}")
    w, _, qt = np.linalg.svd(script_X.T @ X)
    return w @ qt


def subspace_deviation(X, script_X):
    """``||X - script_X R||_F`` at the optimal rotation, and the rotation."""
    R = procrustes(X, script_X)
    return float(np.linalg.norm(X - script_X @ R)), R


def _misclustered_side(centroids, labels, truth, mu_rot):
    """Boolean mask of nodes whose centroid is strictly closer to a wrong block.

    ``mu_rot`` holds one population centroid per true block. Unassigned nodes
    have no centroid and are counted as misclustered.
    """
    n = labels.shape[0]
    bad = np.ones(n, dtype=bool)
    ok = labels != UNASSIGNED
    if not ok.any():
        return bad
    c = centroids[ok]
    d2 = np.sum((c[:, None, :] - mu_rot[None, :, :]) ** 2, axis=2)
    own = d2[np.arange(c.shape[0]), truth[ok]]
    d2[np.arange(c.shape[0]), truth[ok]] = np.inf
    bad[ok] = np.any(d2 < own[:, None], axis=1)
    return bad


def best_match_accuracy(labels, truth):
    """Fraction of nodes correctly labelled under the best cluster matching.

    Solves the assignment problem on the confusion matrix; unassigned labels
    never match.
    """
    labels = np.asarray(labels)
    truth = np.asarray(truth)
    ok = labels != UNASSIGNED
    if not ok.any():
        return 0.0
    conf = np.zeros((labels[ok].max() + 1, truth.max() + 1))
    np.add.at(conf, (labels[ok], truth[ok]), 1)
    r, c = linear_sum_assignment(conf, maximize=True)
    return float(conf[r, c].sum() / labels.shape[0])


@dataclass(frozen=True)
class MisclusterReport:
    """Counts and rates of misclustered row and column nodes.

    Attributes
    ----------
    m_y_count, m_z_count : int
    m_y_rate, m_z_rate : float
        Counts divided by ``N_r`` and ``N_c``.
    rotation_L, rotation_R : ndarray of shape (K, K)
        Procrustes rotations aligning the population vectors to the sample.
    row_misclustered, col_misclustered : ndarray of bool
    row_accuracy, col_accuracy : float
        Best-matching label accuracy (does not need population centroids).
    row_ari, col_ari : float
        Adjusted Rand index against the planted labels.
    """

    m_y_count: int
    m_z_count: int
    m_y_rate: float
    m_z_rate: float
    rotation_L: np.ndarray
    rotation_R: np.ndarray
    row_misclustered: np.ndarray
    col_misclustered: np.ndarray
    row_accuracy: float
    col_accuracy: float
    row_ari: float
    col_ari: float

    def to_dict(self):
        return {
            "m_y_count": self.m_y_count, "m_z_count": self.m_z_count,
            "m_y_rate": self.m_y_rate, "m_z_rate": self.m_z_rate,
            "rotation_L": self.rotation_L.tolist(), "rotation_R": self.rotation_R.tolist(),
            "row_accuracy": self.row_accuracy, "col_accuracy": self.col_accuracy,
            "row_ari": self.row_ari, "col_ari": self.col_ari,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def misclustered(cc, m, po=None):
    """Count nodes whose k-means centroid sits closer to another block's population centroid.

    Population centroids are the rows of the normalized ``U`` (rows) and
    ``V`` (columns), rotated into the sample coordinates by the Procrustes
    fit of ``X_L`` to ``script_XL`` (and ``X_R`` to ``script_XR``). Ties do
    not count as misclustered; unassigned nodes do.

    Parameters
    ----------
    cc : CoClustering
        Must come from a projected run with ``K`` equal to the population rank.
    m : BlockModel
    po : PopulationObjects, optional
        Computed from ``m`` when omitted.
    """
    if po is None:
        po = population_objects(m)
    if not cc.variant.get("projected", True):
        raise ValueError("misclustering is defined for projected (row-normalized) runs")
    X_L, X_R = cc.embedding.left, cc.embedding.right
    if X_L.shape[1] != po.K:
        raise ValueError(f"embedding has K={X_L.shape[1]} columns, population rank is {po.K}")
    if X_L.shape[0] != m.n_rows or X_R.shape[0] != m.n_cols:
        raise ValueError("co-clustering and model sizes differ")
    R_L = procrustes(X_L, po.script_XL)
    R_R = procrustes(X_R, po.script_XR)
    row_bad = _misclustered_side(cc.node_centroids("row"), cc.row_labels, m.y, po.mu_y @ R_L)
    col_bad = _misclustered_side(cc.node_centroids("col"), cc.col_labels, m.z, po.mu_z @ R_R)
    my, mz = int(row_bad.sum()), int(col_bad.sum())
    return MisclusterReport(
        my, mz, my / m.n_rows, mz / m.n_cols, R_L, R_R, row_bad, col_bad,
        best_match_accuracy(cc.row_labels, m.y), best_match_accuracy(cc.col_labels, m.z),
        float(adjusted_rand_score(m.y, cc.row_labels)),
        float(adjusted_rand_score(m.z, cc.col_labels)))


@dataclass(frozen=True)
class BoundReport:
    """Bound values for one population model.

    ``rhs_y_unit`` / ``rhs_z_unit`` are the misclustering-rate bounds with
    the leading constant set to 1; ``rhs_y`` / ``rhs_z`` use ``c0`` / ``c1``.
    Infinite values mean the bound is vacuous (a zero eigengap, leverage,
    column separation or degree).
    """

    rhs_y: float
    rhs_z: float
    rhs_y_unit: float
    rhs_z_unit: float
    laplacian_dev_bound: float
    subspace_bound: float
    filtered_bound: float | None
    degree_condition: bool
    K: int
    lambda_K: float
    m_y: float
    m_z: float
    gamma_z: float
    delta: float
    tau: float
    epsilon: float
    n_rows: int
    n_cols: int
    c0: float
    c1: float
    c2: float
    eta: float | None

    def to_dict(self):
        # JSON has no infinity; encode it as null
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                for k, v in asdict(self).items()}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _ratio(num, den):
    if den <= 0 or not math.isfinite(num):
        return math.inf
    return num / den


def bound_values(K, lambda_K, m_y, m_z, gamma, delta, tau, epsilon, n_rows, n_cols,
                 c0=None, c1=None, c2=1.0, alpha=0.0, eta=None):
    """Evaluate every bound from its scalar inputs; see :func:`theorem_bounds`."""
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    d0, d1 = default_constants(alpha)
    c0 = d0 if c0 is None else float(c0)
    c1 = d1 if c1 is None else float(c1)
    n = n_rows + n_cols
    log_term = math.log(4.0 * n / epsilon)
    dt = delta + tau
    unit_y = _ratio(K * log_term, n_rows * lambda_K ** 2 * m_y ** 2 * dt)
    if math.isinf(gamma) and gamma > 0:
        unit_z = 0.0 if lambda_K > 0 and m_z > 0 and dt > 0 else math.inf
    else:
        unit_z = _ratio(K * log_term, n_cols * lambda_K ** 2 * m_z ** 2 * gamma ** 2 * dt)
    dev = 4.0 * math.sqrt(3.0 * log_term / dt) if dt > 0 else math.inf
    if lambda_K > 0 and dt > 0:
        sub = SQRT_384 / lambda_K * math.sqrt(K * log_term / dt)
    else:
        sub = math.inf
    filt = None
    if eta is not None:
        filt = c2 * _ratio(math.log(n / epsilon), eta ** 2 * dt)
    cond = dt > 3.0 * math.log(n) + 3.0 * math.log(4.0 / epsilon)
    return BoundReport(c0 * unit_y, c1 * unit_z, unit_y, unit_z, dev, sub, filt, bool(cond),
                       int(K), float(lambda_K), float(m_y), float(m_z), float(gamma),
                       float(delta), float(tau), float(epsilon), int(n_rows), int(n_cols),
                       c0, c1, float(c2), None if eta is None else float(eta))


def theorem_bounds(po, epsilon=0.1, c0=None, c1=None, c2=1.0, alpha=0.0, eta=None,
                   gamma_variant="main"):
    """Misclustering, Laplacian-concentration and subspace bounds for a model.

    Parameters
    ----------
    po : PopulationObjects
    epsilon : float in (0, 1)
        Failure probability.
    c0, c1 : float, optional
        Leading constants of the row and column bounds; default to
        :func:`default_constants` at ``alpha``.
    c2 : float, default=1.0
        Constant of the leverage-filtered bound, reported only when ``eta``
        is given.
    gamma_variant : {"main", "shifted"}
        Which column-separation definition to use; see :func:`gamma_z`.
    """
    m_y, m_z = min_leverage(po)
    m = po.model
    return bound_values(po.K, po.lambda_K if po.K else 0.0, m_y, m_z,
                        gamma_z(po, gamma_variant), po.delta, po.tau, epsilon,
                        m.n_rows, m.n_cols, c0, c1, c2, alpha, eta)


@dataclass(frozen=True)
class ConcentrationResult:
    """Monte-Carlo check of the Laplacian concentration bound."""

    exceedance_rate: float
    norms: np.ndarray
    bound: float
    degree_condition: bool
    trials: int
    epsilon: float


def concentration_check(m, trials, epsilon=0.1, seed=0, tol=1e-6):
    """Fraction of sampled graphs with ``||L - script_L|| >`` the concentration bound.

    Each trial draws an adjacency with its own child seed, builds ``L`` at the
    model's ``tau`` and measures the spectral norm of the deviation by power
    iteration on the symmetrized matrix.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    po = population_objects(m)
    script_L = po.script_L()
    report = theorem_bounds(po, epsilon)
    seeds = np.random.SeedSequence(seed).spawn(int(trials))
    norms = np.empty(int(trials))
    for t, child in enumerate(seeds):
        g = sample_adjacency(m, child)
        L = build_laplacian(g, m.tau).matrix
        norms[t] = spectral_norm(L.toarray() - script_L, tol=tol, seed=child)
    rate = float(np.mean(norms > report.laplacian_dev_bound))
    return ConcentrationResult(rate, norms, report.laplacian_dev_bound,
                               report.degree_condition, int(trials), float(epsilon))
