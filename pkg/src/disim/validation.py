"""Input validation helpers shared by the estimators and functional API."""

from __future__ import annotations

import numbers

import numpy as np
import scipy.sparse as sp
from sklearn.utils import check_array

from .graph import SparseGraph


def check_points(X, n_features=None):
    """Validate a dense finite 2-D float array of points."""
    try:
        X = check_array(X, dtype=np.float64, ensure_all_finite=True)
    except TypeError:  # scikit-learn < 1.6
        X = check_array(X, dtype=np.float64, force_all_finite=True)
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"X has {X.shape[1]} features, expected {n_features}")
    return X


def check_graph(X, kind=None):
    """Coerce ``X`` to a :class:`SparseGraph`.

    Accepts a SparseGraph (returned unchanged), a scipy sparse matrix or a
    dense array of nonnegative weights. Square input is treated as directed
    unless ``kind`` says otherwise.
    """
    if isinstance(X, SparseGraph):
        if kind is not None and kind != X.kind:
            raise ValueError(f"expected a {kind} graph, got {X.kind}")
        return X
    if not sp.issparse(X):
        X = np.asarray(X, dtype=float)
    return SparseGraph.from_matrix(X, kind=kind)


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_tau(tau):
    """``None``/``"auto"`` pass through as ``None``; numbers must be finite and >= 0."""
    if tau is None or (isinstance(tau, str) and tau == "auto"):
        return None
    tau = float(tau)
    if not np.isfinite(tau) or tau < 0:
        raise ValueError(f"tau must be 'auto' or a nonnegative number, got {tau}")
    return tau
