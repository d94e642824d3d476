"""DI-SIM co-clustering and its variants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .graph import BIPARTITE, DIRECTED
from .kmeans import DEFAULT_MAX_ITER, DEFAULT_RESTARTS, kmeans, squared_distances
from .laplacian import build_laplacian
from .spectral import DEFAULT_MAX_ITER as SVD_MAX_ITER
from .spectral import DEFAULT_TOL as SVD_TOL
from .spectral import truncated_svd
from .validation import check_graph, check_positive_int, check_tau

UNASSIGNED = -1
ZERO_ROW_NORM = 1e-12
PROPORTION = "proportion"
MEAN_WEIGHT = "mean-weight"


@dataclass(frozen=True)
class CoClustering:
    """Sending (row) and receiving (column) clusters of one DI-SIM run.

    Labels equal to ``UNASSIGNED`` (-1) mark nodes that were filtered by
    leverage or whose side of the graph has no edges.

    Attributes
    ----------
    row_labels, col_labels : ndarray of int
    row_centroids, col_centroids : ndarray of shape (k, K)
        Identical arrays when ``variant["stacked"]`` is true.
    embedding : Embedding
        Un-projected singular vectors ``X_L``, ``X_R``.
    variant : dict
        ``projected``, ``stacked``, ``leverage_eta``, ``tau``, ``K``,
        ``k_rows``, ``k_cols``, ``seed``, ``restarts``.
    row_zero, col_zero : ndarray of bool
        Nodes whose singular-vector row has (numerically) zero norm.
    row_points, col_points : ndarray
        The (projected, when enabled) rows handed to k-means.
    """

    row_labels: np.ndarray
    col_labels: np.ndarray
    row_centroids: np.ndarray
    col_centroids: np.ndarray
    embedding: object
    variant: dict
    row_zero: np.ndarray = field(repr=False, default=None)
    col_zero: np.ndarray = field(repr=False, default=None)
    row_points: np.ndarray = field(repr=False, default=None)
    col_points: np.ndarray = field(repr=False, default=None)
    kind: str = DIRECTED

    @property
    def K(self):
        return self.variant["K"]

    def node_centroids(self, side="row"):
        """Per-node centroid ``c_i``; NaN rows for unassigned nodes."""
        labels = self.row_labels if side == "row" else self.col_labels
        cents = self.row_centroids if side == "row" else self.col_centroids
        out = np.full((labels.shape[0], cents.shape[1]), np.nan)
        ok = labels != UNASSIGNED
        out[ok] = cents[labels[ok]]
        return out

    def leverage(self, side="row"):
        """Leverage scores: squared row norms ``||[X_L]_i||^2`` (or of ``X_R``)."""
        x = self.embedding.left if side == "row" else self.embedding.right
        return np.einsum("ij,ij->i", x, x)


@dataclass(frozen=True)
class MovementReport:
    scores: np.ndarray
    K: int


@dataclass(frozen=True)
class BlockConnectivity:
    """Estimated block connectivity; NaN where the block pair is empty."""

    matrix: np.ndarray
    counts: np.ndarray
    mode: str


def row_normalize(x):
    """Project rows to unit length; rows with norm below 1e-12 stay zero.

    Returns the projected matrix and the boolean mask of zero rows.
    """
    norms = np.linalg.norm(x, axis=1)
    zero = norms < ZERO_ROW_NORM
    out = np.zeros_like(x)
    out[~zero] = x[~zero] / norms[~zero, None]
    return out, zero


def _side_points(x, project, leverage_eta, K):
    norms = np.linalg.norm(x, axis=1)
    zero = norms < ZERO_ROW_NORM
    points = row_normalize(x)[0] if project else x.copy()
    if leverage_eta is None:
        kept = np.ones(x.shape[0], dtype=bool)
    else:
        kept = norms > leverage_eta * math.sqrt(K / x.shape[0])
    return points, zero, kept


def _finish_labels(points, zero, kept, has_edges, sub_labels, centroids, filtered):
    n = points.shape[0]
    labels = np.full(n, UNASSIGNED, dtype=np.int64)
    active = kept & ~zero
    labels[active] = sub_labels
    if not filtered:
        # zero rows of nodes that do have edges on this side get the nearest centroid
        late = zero & has_edges
        if late.any():
            labels[late] = np.argmin(squared_distances(points[late], centroids), axis=1)
    return labels


def cocluster_embedding(embedding, k_rows, k_cols, project=True, stacked=False,
                        leverage_eta=None, restarts=DEFAULT_RESTARTS, seed=0,
                        max_iter=DEFAULT_MAX_ITER, row_has_edges=None, col_has_edges=None,
                        kind=DIRECTED, tau=None):
    """Steps (3)-(5): optional row projection, leverage filtering and k-means.

    ``row_has_edges`` / ``col_has_edges`` decide whether a node whose singular
    vector row is zero receives a label (nearest centroid) or stays
    unassigned; by default every zero row stays unassigned.
    """
    K = embedding.k
    if leverage_eta is not None and leverage_eta < 0:
        raise ValueError("leverage_eta must be nonnegative")
    if stacked and k_rows != k_cols:
        raise ValueError("stacked clustering requires k_rows == k_cols")
    n_rows, n_cols = embedding.left.shape[0], embedding.right.shape[0]
    if row_has_edges is None:
        row_has_edges = np.zeros(n_rows, dtype=bool)
    if col_has_edges is None:
        col_has_edges = np.zeros(n_cols, dtype=bool)

    r_pts, r_zero, r_kept = _side_points(embedding.left, project, leverage_eta, K)
    c_pts, c_zero, c_kept = _side_points(embedding.right, project, leverage_eta, K)
    r_active = r_kept & ~r_zero
    c_active = c_kept & ~c_zero
    filtered = leverage_eta is not None
    seq = np.random.SeedSequence(seed)
    row_seed, col_seed = seq.spawn(2)

    if stacked:
        stack = np.vstack([r_pts[r_active], c_pts[c_active]])
        if stack.shape[0] < k_rows:
            raise ValueError(f"only {stack.shape[0]} clusterable rows for k={k_rows}")
        res = kmeans(stack, k_rows, restarts, max_iter, row_seed)
        n_r = int(r_active.sum())
        r_cent = c_cent = res.centroids
        r_sub, c_sub = res.labels[:n_r], res.labels[n_r:]
    else:
        if r_active.sum() < k_rows or c_active.sum() < k_cols:
            raise ValueError(
                f"too few clusterable nodes ({int(r_active.sum())} rows, "
                f"{int(c_active.sum())} columns) for k_rows={k_rows}, k_cols={k_cols}")
        r_res = kmeans(r_pts[r_active], k_rows, restarts, max_iter, row_seed)
        c_res = kmeans(c_pts[c_active], k_cols, restarts, max_iter, col_seed)
        r_cent, c_cent = r_res.centroids, c_res.centroids
        r_sub, c_sub = r_res.labels, c_res.labels

    row_labels = _finish_labels(r_pts, r_zero, r_kept, np.asarray(row_has_edges),
                                r_sub, r_cent, filtered)
    col_labels = _finish_labels(c_pts, c_zero, c_kept, np.asarray(col_has_edges),
                                c_sub, c_cent, filtered)
    variant = {
        "projected": bool(project),
        "stacked": bool(stacked),
        "leverage_eta": None if leverage_eta is None else float(leverage_eta),
        "tau": tau,
        "K": K,
        "k_rows": int(k_rows),
        "k_cols": int(k_cols),
        "seed": seed,
        "restarts": int(restarts),
    }
    return CoClustering(row_labels, col_labels, r_cent, c_cent, embedding, variant,
                        r_zero, c_zero, r_pts, c_pts, kind)


def disim(g, k_rows, k_cols=None, tau=None, project=True, stacked=False,
          leverage_eta=None, restarts=DEFAULT_RESTARTS, seed=0,
          max_iter=DEFAULT_MAX_ITER, svd_tol=SVD_TOL, svd_max_iter=SVD_MAX_ITER):
    """Co-cluster a directed or bipartite graph with DI-SIM.

    Builds the regularized Laplacian, takes its top ``K = min(k_rows, k_cols)``
    singular vectors, optionally projects each row onto the unit sphere and
    clusters the rows of ``X_L`` (sending patterns) and ``X_R`` (receiving
    patterns) with k-means.

    Parameters
    ----------
    g : SparseGraph, sparse matrix or ndarray
    k_rows : int
        Number of sending (row) clusters.
    k_cols : int, optional
        Number of receiving (column) clusters; defaults to ``k_rows``.
    tau : float, "auto" or None
        Regularizer; ``None``/``"auto"`` use the average degree.
    project : bool, default=True
        Normalize rows of the singular vectors before k-means.
    stacked : bool, default=False
        Cluster ``X_L`` and ``X_R`` rows together in one k-means run
        (needs ``k_rows == k_cols``); row and column clusters then share
        centroids and are directly comparable.
    leverage_eta : float, optional
        Only rows with ``||[X_L]_i|| > eta * sqrt(K / n)`` are clustered; the
        rest are labelled ``UNASSIGNED``.
    restarts, seed, max_iter :
        k-means settings; ``seed`` also seeds the SVD start block.
    svd_tol, svd_max_iter :
        Passed to :func:`truncated_svd`.

    Returns
    -------
    CoClustering
    """
    g = check_graph(g)
    k_rows = check_positive_int(k_rows, "k_rows")
    k_cols = k_rows if k_cols is None else check_positive_int(k_cols, "k_cols")
    if k_rows > g.n_rows or k_cols > g.n_cols:
        raise ValueError(f"k_rows={k_rows}, k_cols={k_cols} exceed graph shape {g.shape}")
    if stacked and k_rows != k_cols:
        raise ValueError("stacked clustering requires k_rows == k_cols")
    lap = build_laplacian(g, check_tau(tau))
    K = min(k_rows, k_cols)
    emb = truncated_svd(lap.matrix, K, tol=svd_tol, max_iter=svd_max_iter, seed=seed)
    return cocluster_embedding(emb, k_rows, k_cols, project, stacked, leverage_eta,
                               restarts, seed, max_iter,
                               row_has_edges=lap.out_deg > 0, col_has_edges=lap.in_deg > 0,
                               kind=g.kind, tau=lap.tau)


def movement_scores(embedding, K=None, kind=DIRECTED):
    """Distance between each node's rows of ``X_L`` and ``X_R`` over the first K columns."""
    if kind == BIPARTITE:
        raise ValueError("movement scores need a directed graph; rows and columns "
                         "of a bipartite graph index different objects")
    left, right = embedding.left, embedding.right
    if left.shape[0] != right.shape[0]:
        raise ValueError("movement scores need n_rows == n_cols")
    K = embedding.k if K is None else int(K)
    if not 1 <= K <= embedding.k:
        raise ValueError(f"K must lie in [1, {embedding.k}], got {K}")
    scores = np.linalg.norm(left[:, :K] - right[:, :K], axis=1)
    return MovementReport(scores, K)


def block_connectivity(g, cc, mode=PROPORTION):
    """Estimate the block matrix from a co-clustering.

    ``proportion``: fraction of (row-block u, column-block v) node pairs joined
    by an edge. ``mean-weight``: total edge weight over the same pairs divided
    by the pair count. Unassigned nodes are ignored; empty block pairs are NaN
    with a count of 0.
    """
    g = check_graph(g)
    if mode not in (PROPORTION, MEAN_WEIGHT):
        raise ValueError(f"mode must be {PROPORTION!r} or {MEAN_WEIGHT!r}")
    rl, cl = np.asarray(cc.row_labels), np.asarray(cc.col_labels)
    if rl.shape[0] != g.n_rows or cl.shape[0] != g.n_cols:
        raise ValueError("co-clustering does not match the graph shape")
    k_y = max(int(cc.variant.get("k_rows", 0)), int(rl.max()) + 1 if rl.size else 0)
    k_z = max(int(cc.variant.get("k_cols", 0)), int(cl.max()) + 1 if cl.size else 0)
    row_sizes = np.bincount(rl[rl >= 0], minlength=k_y)
    col_sizes = np.bincount(cl[cl >= 0], minlength=k_z)
    pairs = np.outer(row_sizes, col_sizes)

    coo = g.csr.tocoo()
    u, v = rl[coo.row], cl[coo.col]
    ok = (u >= 0) & (v >= 0)
    values = np.ones(ok.sum()) if mode == PROPORTION else coo.data[ok]
    num = np.zeros((k_y, k_z))
    np.add.at(num, (u[ok], v[ok]), values)
    with np.errstate(invalid="ignore", divide="ignore"):
        matrix = np.where(pairs > 0, num / np.maximum(pairs, 1), np.nan)
    return BlockConnectivity(matrix, pairs, mode)


class DiSim(BaseEstimator):
    """Spectral co-clustering of directed and bipartite graphs.

    Parameters
    ----------
    n_row_clusters : int, default=2
        Number of sending clusters ``k_y``.
    n_col_clusters : int or None, default=None
        Number of receiving clusters ``k_z``; ``None`` reuses ``n_row_clusters``.
    tau : "auto" or float, default="auto"
    project : bool, default=True
    stacked : bool, default=False
    leverage_eta : float or None, default=None
    n_init : int, default=10
        k-means++ restarts.
    max_iter : int, default=100
    svd_tol : float, default=1e-8
    svd_max_iter : int, default=1000
    random_state : int, default=0

    Attributes
    ----------
    row_labels_, column_labels_ : ndarray of int
        Sending and receiving cluster of every node (-1 when unassigned).
    embedding_ : Embedding
    singular_values_ : ndarray
    tau_ : float
        Regularizer actually used.
    coclustering_ : CoClustering

    Examples
    --------
    >>> import numpy as np
    >>> A = np.kron(np.eye(2), np.ones((4, 4)))
    >>> model = DiSim(n_row_clusters=2).fit(A)
    >>> sorted(np.bincount(model.row_labels_).tolist())
    [4, 4]
    """

    def __init__(self, n_row_clusters=2, n_col_clusters=None, tau="auto", project=True,
                 stacked=False, leverage_eta=None, n_init=DEFAULT_RESTARTS,
                 max_iter=DEFAULT_MAX_ITER, svd_tol=SVD_TOL, svd_max_iter=SVD_MAX_ITER,
                 random_state=0):
        self.n_row_clusters = n_row_clusters
        self.n_col_clusters = n_col_clusters
        self.tau = tau
        self.project = project
        self.stacked = stacked
        self.leverage_eta = leverage_eta
        self.n_init = n_init
        self.max_iter = max_iter
        self.svd_tol = svd_tol
        self.svd_max_iter = svd_max_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        """Co-cluster the adjacency ``X`` (SparseGraph, sparse matrix or array)."""
        g = check_graph(X)
        cc = disim(g, self.n_row_clusters, self.n_col_clusters, tau=self.tau,
                   project=self.project, stacked=self.stacked,
                   leverage_eta=self.leverage_eta, restarts=self.n_init,
                   seed=self.random_state, max_iter=self.max_iter,
                   svd_tol=self.svd_tol, svd_max_iter=self.svd_max_iter)
        self.coclustering_ = cc
        self.row_labels_ = cc.row_labels
        self.column_labels_ = cc.col_labels
        self.embedding_ = cc.embedding
        self.singular_values_ = cc.embedding.sigma
        self.tau_ = cc.variant["tau"]
        self.kind_ = g.kind
        self.n_features_in_ = g.n_cols
        return self

    def fit_predict(self, X, y=None):
        """Fit and return ``(row_labels, column_labels)``."""
        self.fit(X)
        return self.row_labels_, self.column_labels_

    def movement_scores(self, K=None):
        return movement_scores(self.embedding_, K, self.kind_).scores
