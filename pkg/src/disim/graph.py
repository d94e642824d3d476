"""Sparse directed / bipartite graphs and edge-list I/O."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .exceptions import EdgeListParseError, EmptyGraphError, SizeCapError

DIRECTED = "directed"
BIPARTITE = "bipartite"
GRAPH_KINDS = (DIRECTED, BIPARTITE)

DEFAULT_DENSE_CAP = 25_000_000


@dataclass(frozen=True, eq=False)
class SparseGraph:
    """Immutable weighted adjacency matrix ``A`` of a directed or bipartite graph.

    Use :meth:`from_triplets` or :meth:`from_matrix` rather than the raw
    constructor; both sum duplicate entries and drop zeros.

    Attributes
    ----------
    csr : scipy.sparse.csr_matrix of shape (n_rows, n_cols)
        Row-compressed adjacency. ``csc`` holds the column-compressed view.
    kind : {"directed", "bipartite"}
    row_labels, col_labels : tuple of str or None
        Original node labels, when the graph came from a labelled source.
    """

    csr: sp.csr_matrix
    csc: sp.csc_matrix
    kind: str = DIRECTED
    row_labels: tuple | None = None
    col_labels: tuple | None = None
    _out: np.ndarray = field(default=None, repr=False)
    _in: np.ndarray = field(default=None, repr=False)

    @classmethod
    def from_triplets(cls, rows, cols, weights=None, shape=None, kind=DIRECTED,
                      row_labels=None, col_labels=None):
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        if weights is None:
            weights = np.ones(rows.shape[0])
        weights = np.asarray(weights, dtype=float).ravel()
        if not (rows.shape == cols.shape == weights.shape):
            raise ValueError("rows, cols and weights must have equal length")
        if shape is None:
            n_r = int(rows.max()) + 1 if rows.size else 0
            n_c = int(cols.max()) + 1 if cols.size else 0
            if kind == DIRECTED:
                n_r = n_c = max(n_r, n_c)
            shape = (n_r, n_c)
        n_rows, n_cols = int(shape[0]), int(shape[1])
        if n_rows < 1 or n_cols < 1:
            raise ValueError(f"graph shape must be positive, got {shape}")
        if rows.size and (rows.min() < 0 or rows.max() >= n_rows):
            raise ValueError("row index out of range")
        if cols.size and (cols.min() < 0 or cols.max() >= n_cols):
            raise ValueError("column index out of range")
        if not np.all(np.isfinite(weights)):
            raise ValueError("edge weights must be finite")
        if np.any(weights < 0):
            raise ValueError("edge weights must be nonnegative")
        keep = weights > 0
        coo = sp.coo_matrix((weights[keep], (rows[keep], cols[keep])),
                            shape=(n_rows, n_cols))
        return cls._build(coo.tocsr(), kind, row_labels, col_labels)

    @classmethod
    def from_matrix(cls, matrix, kind=None):
        """Wrap a dense array or scipy sparse matrix of nonnegative weights."""
        if sp.issparse(matrix):
            csr = sp.csr_matrix(matrix, dtype=float, copy=True)
        else:
            csr = sp.csr_matrix(np.asarray(matrix, dtype=float))
        if csr.ndim != 2:
            raise ValueError("adjacency must be two-dimensional")
        if csr.nnz and (not np.all(np.isfinite(csr.data)) or csr.data.min() < 0):
            raise ValueError("adjacency entries must be finite and nonnegative")
        if kind is None:
            kind = DIRECTED if csr.shape[0] == csr.shape[1] else BIPARTITE
        return cls._build(csr, kind, None, None)

    @classmethod
    def _build(cls, csr, kind, row_labels, col_labels):
        if kind not in GRAPH_KINDS:
            raise ValueError(f"kind must be one of {GRAPH_KINDS}, got {kind!r}")
        if kind == DIRECTED and csr.shape[0] != csr.shape[1]:
            raise ValueError("a directed graph needs n_rows == n_cols")
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        csr.data.setflags(write=False)
        csc = csr.tocsc()
        csc.sort_indices()
        out_deg = np.asarray(csr.sum(axis=1)).ravel()
        in_deg = np.asarray(csc.sum(axis=0)).ravel()
        if row_labels is not None:
            row_labels = tuple(row_labels)
            if len(row_labels) != csr.shape[0]:
                raise ValueError("row_labels length does not match n_rows")
        if col_labels is not None:
            col_labels = tuple(col_labels)
            if len(col_labels) != csr.shape[1]:
                raise ValueError("col_labels length does not match n_cols")
        return cls(csr, csc, kind, row_labels, col_labels, out_deg, in_deg)

    @property
    def n_rows(self):
        return self.csr.shape[0]

    @property
    def n_cols(self):
        return self.csr.shape[1]

    @property
    def shape(self):
        return self.csr.shape

    @property
    def nnz(self):
        return self.csr.nnz

    @property
    def is_directed(self):
        return self.kind == DIRECTED

    @property
    def total_weight(self):
        return float(self.csr.data.sum())

    def entries(self):
        """Sorted list of ``(row, col, weight)`` triplets."""
        coo = self.csr.tocoo()
        return sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def toarray(self):
        return self.csr.toarray()

    def node_labels(self, side="row"):
        labels = self.row_labels if side == "row" else self.col_labels
        n = self.n_rows if side == "row" else self.n_cols
        if labels is None:
            return tuple(str(i) for i in range(n))
        return labels

    def permute(self, perm):
        """Relabel the nodes of a directed graph: new node ``k`` is old ``perm[k]``."""
        if not self.is_directed:
            raise ValueError("permute is defined for directed graphs only")
        perm = np.asarray(perm)
        csr = self.csr[perm][:, perm]
        labels = None if self.row_labels is None else [self.row_labels[p] for p in perm]
        return SparseGraph._build(sp.csr_matrix(csr), DIRECTED, labels, labels)


def out_degrees(g):
    """Weighted out-degrees ``O_ii = sum_k A_ik``."""
    return g._out.copy()


def in_degrees(g):
    """Weighted in-degrees ``P_jj = sum_k A_kj``."""
    return g._in.copy()


def _check_dense_cap(n, cap):
    if n * n > cap:
        raise SizeCapError(f"dense {n}x{n} output exceeds the cap of {cap} entries")


def common_parents(g, max_entries=DEFAULT_DENSE_CAP):
    """Dense ``A^T A``: entry (a, b) counts (weighted) nodes sending to both a and b."""
    _check_dense_cap(g.n_cols, max_entries)
    return np.asarray((g.csc.T @ g.csc).toarray())


def common_offspring(g, max_entries=DEFAULT_DENSE_CAP):
    """Dense ``A A^T``: entry (a, b) counts (weighted) nodes both a and b send to."""
    _check_dense_cap(g.n_rows, max_entries)
    return np.asarray((g.csr @ g.csr.T).toarray())


def _split(line, delimiter):
    if delimiter is None:
        return line.split()
    return [f.strip() for f in line.split(delimiter)]


def load_edge_list(path, delimiter=None, weighted=False, kind=DIRECTED, n_nodes=None):
    """Read a text edge list.

    Each non-comment line is ``src<delim>dst`` or ``src<delim>dst<delim>weight``.
    Labels are mapped to dense indices in order of first appearance; for
    bipartite graphs sources and destinations get separate index spaces.
    Lines starting with ``#`` and blank lines are skipped. A weight field, when
    present, must parse as a positive real; with ``weighted=False`` every edge
    counts 1 and duplicate lines accumulate.

    Parameters
    ----------
    path : str or Path
    delimiter : str or None
        Field separator; ``None`` splits on runs of whitespace.
    weighted : bool
    kind : {"directed", "bipartite"}
    n_nodes : int or None
        Declared node count for directed graphs. Nodes beyond those seen in the
        file are isolated and labelled by their index.

    Returns
    -------
    graph : SparseGraph
    labels : list of str or tuple (row_labels, col_labels)
        Index -> label map; a pair of lists for bipartite graphs.
    """
    if kind not in GRAPH_KINDS:
        raise ValueError(f"kind must be one of {GRAPH_KINDS}, got {kind!r}")
    path = Path(path)
    row_index, col_index = {}, {}
    if kind == DIRECTED:
        col_index = row_index
    rows, cols, weights = [], [], []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = _split(line, delimiter)
            if len(fields) not in (2, 3) or not all(fields[:2]):
                raise EdgeListParseError(lineno, f"expected 2 or 3 fields, got {len(fields)}")
            weight = 1.0
            if len(fields) == 3:
                try:
                    weight = float(fields[2])
                except ValueError:
                    raise EdgeListParseError(lineno, f"non-numeric weight {fields[2]!r}") from None
                if not np.isfinite(weight) or weight <= 0:
                    raise EdgeListParseError(lineno, f"weight must be positive, got {fields[2]!r}")
                if not weighted:
                    weight = 1.0
            src, dst = fields[0], fields[1]
            rows.append(row_index.setdefault(src, len(row_index)))
            cols.append(col_index.setdefault(dst, len(col_index)))
            weights.append(weight)
    if not rows:
        raise EmptyGraphError(f"{path}: no edges found")

    if kind == DIRECTED:
        labels = list(row_index)
        if n_nodes is not None:
            if n_nodes < len(labels):
                raise ValueError(f"n_nodes={n_nodes} is smaller than the {len(labels)} labels seen")
            taken = set(labels)
            for idx in range(len(labels), n_nodes):
                name = str(idx)
                while name in taken:
                    name = "_" + name
                labels.append(name)
                taken.add(name)
        n = len(labels)
        g = SparseGraph.from_triplets(rows, cols, weights, (n, n), DIRECTED, labels, labels)
        return g, labels
    row_labels, col_labels = list(row_index), list(col_index)
    g = SparseGraph.from_triplets(rows, cols, weights, (len(row_labels), len(col_labels)),
                                  BIPARTITE, row_labels, col_labels)
    return g, (row_labels, col_labels)


def write_edge_list(g, path, delimiter="\t"):
    """Write ``g`` as an edge list readable by :func:`load_edge_list` (weighted)."""
    row_names = g.node_labels("row")
    col_names = g.node_labels("col")
    with Path(path).open("w", encoding="utf-8") as fh:
        for i, j, w in g.entries():
            fh.write(f"{row_names[i]}{delimiter}{col_names[j]}{delimiter}{w!r}\n")


def write_label_map(labels, path):
    """Write ``index<TAB>label`` lines."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for idx, label in enumerate(labels):
            fh.write(f"{idx}\t{label}\n")
