"""Regularized graph Laplacian ``L = (O + tau I)^{-1/2} A (P + tau I)^{-1/2}``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import in_degrees, out_degrees


@dataclass(frozen=True)
class Laplacian:
    """Regularized Laplacian together with the degrees it was built from.

    ``matrix`` shares the sparsity pattern of the source adjacency.
    """

    matrix: sp.csr_matrix
    tau: float
    out_deg: np.ndarray
    in_deg: np.ndarray

    @property
    def shape(self):
        return self.matrix.shape


def default_tau(g):
    """Average node degree.

    For directed graphs this is total edge weight over ``n``. For bipartite
    graphs the total weight is divided by ``sqrt(n_rows * n_cols)``, which
    reduces to the directed value when the two sides have equal size.
    """
    total = g.total_weight
    if total == 0:
        return 0.0
    if g.is_directed:
        return total / g.n_rows
    return total / math.sqrt(g.n_rows * g.n_cols)


def scale_rows_cols(csr, row_scale, col_scale):
    """Return ``diag(row_scale) @ csr @ diag(col_scale)`` keeping the pattern."""
    out = csr.copy()
    out.data = np.array(out.data, dtype=float)
    row_of = np.repeat(np.arange(out.shape[0]), np.diff(out.indptr))
    out.data *= row_scale[row_of] * col_scale[out.indices]
    return out


def build_laplacian(g, tau=None):
    """Build the regularized Laplacian of ``g``.

    Parameters
    ----------
    g : SparseGraph
    tau : float or None
        Nonnegative regularizer added to every out- and in-degree. ``None``
        selects :func:`default_tau`.

    Returns
    -------
    Laplacian
    """
    if tau is None:
        tau = default_tau(g)
    tau = float(tau)
    if not math.isfinite(tau) or tau < 0:
        raise ValueError(f"tau must be a finite nonnegative number, got {tau}")
    out_deg = out_degrees(g)
    in_deg = in_degrees(g)
    # zero-degree rows/columns carry no entries; the guard only avoids 1/0 there
    row_scale = np.zeros_like(out_deg)
    col_scale = np.zeros_like(in_deg)
    np.divide(1.0, np.sqrt(out_deg + tau), out=row_scale, where=(out_deg + tau) > 0)
    np.divide(1.0, np.sqrt(in_deg + tau), out=col_scale, where=(in_deg + tau) > 0)
    matrix = scale_rows_cols(g.csr, row_scale, col_scale)
    return Laplacian(matrix, tau, out_deg, in_deg)
