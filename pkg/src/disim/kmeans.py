"""Seeded k-means++ with restarts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from .validation import check_points

DEFAULT_RESTARTS = 10
DEFAULT_MAX_ITER = 100


@dataclass(frozen=True)
class KMeansResult:
    """Outcome of :func:`kmeans`.

    Attributes
    ----------
    labels : ndarray of int, shape (n,)
        Index of the nearest centroid of every point (ties to the lowest index).
    centroids : ndarray of shape (k, d)
    objective : float
        ``sum_i min_g ||u_i - m_g||^2``.
    restarts_run : int
    n_iter : int
        Lloyd iterations of the winning restart.
    empty_clusters : tuple of int
        Cluster indices that own no point (only possible when the data has
        fewer than ``k`` distinct points).
    """

    labels: np.ndarray
    centroids: np.ndarray
    objective: float
    restarts_run: int
    n_iter: int = 0
    empty_clusters: tuple = ()


def squared_distances(points, centroids):
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def kmeans_objective(points, labels, centroids):
    """Sum of squared distances from each point to the centroid of its label."""
    diff = points - centroids[labels]
    return float(np.einsum("nd,nd->", diff, diff))


def kmeans_plusplus(points, k, rng):
    """D^2-weighted seeding; returns indices of the ``k`` chosen points."""
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    closest = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            # inverse-CDF draw; searchsorted keeps the lowest index on ties
            cdf = np.cumsum(closest)
            idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
            idx = min(idx, n - 1)
        chosen.append(idx)
        np.minimum(closest, np.sum((points - points[idx]) ** 2, axis=1), out=closest)
    return np.array(chosen)


def _update_centroids(points, labels, centroids):
    k = centroids.shape[0]
    new = centroids.copy()
    counts = np.bincount(labels, minlength=k)
    sums = np.zeros_like(centroids)
    np.add.at(sums, labels, points)
    filled = counts > 0
    new[filled] = sums[filled] / counts[filled, None]
    empty = np.flatnonzero(~filled)
    if empty.size:
        labels = labels.copy()
        dist = np.sum((points - new[labels]) ** 2, axis=1)
        for g in empty:
            idx = int(np.argmax(dist))
            if dist[idx] <= 0:
                break
            new[g] = points[idx]
            labels[idx] = g
            dist[idx] = 0.0
    return new


def _lloyd(points, centroids, max_iter):
    """Run Lloyd iterations; returns labels, centroids, n_iter, objective history."""
    d2 = squared_distances(points, centroids)
    labels = np.argmin(d2, axis=1)
    history = [float(d2[np.arange(len(labels)), labels].sum())]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        centroids = _update_centroids(points, labels, centroids)
        d2 = squared_distances(points, centroids)
        new_labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(len(new_labels)), new_labels].sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    labels = np.argmin(squared_distances(points, centroids), axis=1)
    return labels, centroids, n_iter, history


def _seed_sequence(seed):
    if isinstance(seed, np.random.SeedSequence):
        # fresh copy: spawning mutates the caller's sequence otherwise
        return np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key)
    return np.random.SeedSequence(seed)


def kmeans(points, k, restarts=DEFAULT_RESTARTS, max_iter=DEFAULT_MAX_ITER, seed=0):
    """Best-of-``restarts`` k-means with k-means++ seeding.

    Each restart draws its own generator from ``SeedSequence(seed).spawn``, so
    the result depends only on ``seed``. The winner is the lowest objective,
    ties broken by restart index.

    Parameters
    ----------
    points : array-like of shape (n, d)
    k : int
        Number of clusters, ``1 <= k <= n``.
    restarts : int
    max_iter : int
        Lloyd iterations per restart.
    seed : int, sequence of int or SeedSequence

    Returns
    -------
    KMeansResult
    """
    points = check_points(points)
    n = points.shape[0]
    k = int(k)
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if n < k:
        raise ValueError(f"need at least k={k} points, got {n}")
    if restarts < 1 or max_iter < 1:
        raise ValueError("restarts and max_iter must be positive")

    best = None
    children = _seed_sequence(seed).spawn(int(restarts))
    for child in children:
        rng = np.random.default_rng(child)
        init = points[kmeans_plusplus(points, k, rng)].copy()
        labels, centroids, n_iter, _ = _lloyd(points, init, max_iter)
        objective = kmeans_objective(points, labels, centroids)
        if best is None or objective < best[0]:
            best = (objective, labels, centroids, n_iter)
    objective, labels, centroids, n_iter = best
    empty = tuple(int(g) for g in np.flatnonzero(np.bincount(labels, minlength=k) == 0))
    return KMeansResult(labels, centroids, objective, int(restarts), n_iter, empty)


class SeededKMeans(ClusterMixin, BaseEstimator):
    """Estimator wrapper around :func:`kmeans`.

    Parameters
    ----------
    n_clusters : int, default=2
    n_init : int, default=10
        Number of k-means++ restarts.
    max_iter : int, default=100
    random_state : int, default=0

    Attributes
    ----------
    labels_ : ndarray of shape (n_samples,)
    cluster_centers_ : ndarray of shape (n_clusters, n_features)
    inertia_ : float
    """

    def __init__(self, n_clusters=2, n_init=DEFAULT_RESTARTS, max_iter=DEFAULT_MAX_ITER,
                 random_state=0):
        self.n_clusters = n_clusters
        self.n_init = n_init
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        result = kmeans(X, self.n_clusters, self.n_init, self.max_iter, self.random_state)
        self.labels_ = result.labels
        self.cluster_centers_ = result.centroids
        self.inertia_ = result.objective
        self.n_iter_ = result.n_iter
        self.n_features_in_ = self.cluster_centers_.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = check_points(X, n_features=self.n_features_in_)
        return np.argmin(squared_distances(X, self.cluster_centers_), axis=1)

    def score(self, X, y=None):
        """Negative k-means objective of ``X`` under the fitted centroids."""
        X = check_points(X, n_features=self.n_features_in_)
        labels = self.predict(X)
        return -kmeans_objective(X, labels, self.cluster_centers_)
