"""Stochastic co-Blockmodels: samplers and population quantities."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .exceptions import SizeCapError
from .graph import BIPARTITE, DIRECTED, SparseGraph

POPULATION_CAP = 5000
_SUM_TOL = 1e-9
_PROB_TOL = 1e-12
_CHUNK_ROWS = 256


def _labels_check(labels, k, name):
    labels = np.asarray(labels, dtype=np.int64).ravel()
    if labels.size == 0:
        raise ValueError(f"{name} is empty")
    if labels.min() < 0 or labels.max() >= k:
        raise ValueError(f"{name} entries must lie in [0, {k})")
    counts = np.bincount(labels, minlength=k)
    if np.any(counts == 0):
        raise ValueError(f"every block needs at least one node; empty {name} blocks: "
                         f"{np.flatnonzero(counts == 0).tolist()}")
    return labels


def _block_sums(theta, labels, k):
    return np.bincount(labels, weights=theta, minlength=k)


@dataclass(frozen=True, eq=False)
class BlockModel:
    """Degree-corrected Stochastic co-Blockmodel.

    Edge ``i -> j`` appears independently with probability
    ``theta_y[i] * theta_z[j] * B[y[i], z[j]]``. Degree parameters are
    identifiable: they sum to one within every row block and every column
    block, so ``B[s, t]`` is the expected number of edges from row block ``s``
    to column block ``t``. Use :meth:`from_probabilities` to build a model from
    raw propensities; it renormalizes and rescales ``B`` so the edge
    probabilities are unchanged.

    Attributes
    ----------
    B : ndarray of shape (k_y, k_z)
    y : ndarray of int, shape (n_rows,)
        Row-block label of every row node (the rows of ``Y``).
    z : ndarray of int, shape (n_cols,)
    theta_y, theta_z : ndarray
    tau : float
    kind : {"directed", "bipartite"}
    lineage : dict
        Seeds and generator settings, kept for provenance.
    """

    B: np.ndarray
    y: np.ndarray
    z: np.ndarray
    theta_y: np.ndarray
    theta_z: np.ndarray
    tau: float = 0.0
    kind: str = DIRECTED
    lineage: dict = field(default_factory=dict)

    def __post_init__(self):
        B = np.array(self.B, dtype=float)
        if B.ndim != 2 or np.any(B < 0) or not np.all(np.isfinite(B)):
            raise ValueError("B must be a finite nonnegative matrix")
        k_y, k_z = B.shape
        y = _labels_check(self.y, k_y, "y")
        z = _labels_check(self.z, k_z, "z")
        theta_y = np.array(self.theta_y, dtype=float).ravel()
        theta_z = np.array(self.theta_z, dtype=float).ravel()
        if theta_y.shape != y.shape or theta_z.shape != z.shape:
            raise ValueError("theta vectors must match the label vectors")
        if np.any(theta_y <= 0) or np.any(theta_z <= 0):
            raise ValueError("degree parameters must be positive")
        if not (np.allclose(_block_sums(theta_y, y, k_y), 1, atol=_SUM_TOL, rtol=0)
                and np.allclose(_block_sums(theta_z, z, k_z), 1, atol=_SUM_TOL, rtol=0)):
            raise ValueError("degree parameters must sum to 1 within every block; "
                             "use BlockModel.from_probabilities for raw propensities")
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")
        if self.kind not in (DIRECTED, BIPARTITE):
            raise ValueError(f"unknown graph kind {self.kind!r}")
        if self.kind == DIRECTED and y.shape[0] != z.shape[0]:
            raise ValueError("a directed model needs n_rows == n_cols")
        top_y = np.zeros(k_y)
        np.maximum.at(top_y, y, theta_y)
        top_z = np.zeros(k_z)
        np.maximum.at(top_z, z, theta_z)
        pmax = float(np.max(top_y[:, None] * top_z[None, :] * B))
        if pmax > 1 + _PROB_TOL:
            raise ValueError(f"edge probability {pmax:.6g} exceeds 1")
        for name, value in (("B", B), ("y", y), ("z", z), ("theta_y", theta_y),
                            ("theta_z", theta_z)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "tau", float(self.tau))

    @classmethod
    def from_probabilities(cls, B_prob, y, z, theta_y=None, theta_z=None, tau=0.0,
                           kind=DIRECTED, lineage=None):
        """Build from ``P(i -> j) = theta_y[i] theta_z[j] B_prob[y_i, z_j]``.

        ``theta`` defaults to all ones (a plain ScBM). Degree parameters are
        divided by their block sums and ``B_prob`` is multiplied by the same
        sums, leaving every edge probability unchanged.
        """
        B_prob = np.asarray(B_prob, dtype=float)
        k_y, k_z = B_prob.shape
        y = _labels_check(y, k_y, "y")
        z = _labels_check(z, k_z, "z")
        theta_y = np.ones(y.shape[0]) if theta_y is None else np.asarray(theta_y, float)
        theta_z = np.ones(z.shape[0]) if theta_z is None else np.asarray(theta_z, float)
        if np.any(theta_y <= 0) or np.any(theta_z <= 0):
            raise ValueError("degree parameters must be positive")
        sy = _block_sums(theta_y, y, k_y)
        sz = _block_sums(theta_z, z, k_z)
        B = B_prob * sy[:, None] * sz[None, :]
        return cls(B, y, z, theta_y / sy[y], theta_z / sz[z], tau, kind,
                   dict(lineage or {}))

    @property
    def k_y(self):
        return self.B.shape[0]

    @property
    def k_z(self):
        return self.B.shape[1]

    @property
    def n_rows(self):
        return self.y.shape[0]

    @property
    def n_cols(self):
        return self.z.shape[0]

    @property
    def Y(self):
        return np.eye(self.k_y, dtype=np.int64)[self.y]

    @property
    def Z(self):
        return np.eye(self.k_z, dtype=np.int64)[self.z]

    def with_tau(self, tau):
        return BlockModel(self.B, self.y, self.z, self.theta_y, self.theta_z, tau,
                          self.kind, dict(self.lineage))

    def renormalized(self):
        """Re-impose the per-block sum-to-one constraint (a no-op on valid models)."""
        return BlockModel.from_probabilities(self.B, self.y, self.z, self.theta_y,
                                             self.theta_z, self.tau, self.kind, self.lineage)

    def edge_probabilities(self, rows=slice(None)):
        """Dense block of edge probabilities for the given row selection."""
        ty = self.theta_y[rows]
        return ty[:, None] * self.B[self.y[rows]][:, self.z] * self.theta_z[None, :]

    def expected_out_degrees(self):
        return self.theta_y * self.B.sum(axis=1)[self.y]

    def expected_in_degrees(self):
        return self.theta_z * self.B.sum(axis=0)[self.z]

    def to_dict(self):
        return {
            "B": self.B.tolist(),
            "row_blocks": self.y.tolist(),
            "col_blocks": self.z.tolist(),
            "row_block_sizes": np.bincount(self.y, minlength=self.k_y).tolist(),
            "col_block_sizes": np.bincount(self.z, minlength=self.k_z).tolist(),
            "theta_y": self.theta_y.tolist(),
            "theta_z": self.theta_z.tolist(),
            "tau": self.tau,
            "kind": self.kind,
            "lineage": self.lineage,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(np.asarray(data["B"], float), data["row_blocks"], data["col_blocks"],
                   data["theta_y"], data["theta_z"], data.get("tau", 0.0),
                   data.get("kind", DIRECTED), dict(data.get("lineage", {})))

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), sort_keys=True)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_json(cls, source):
        """Load from a JSON string or a path to a JSON file."""
        text = source
        if not str(source).lstrip().startswith("{"):
            with open(source, encoding="utf-8") as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text))


def four_param_B(K, p, r):
    """``B = p I_K + r 1 1^T``."""
    return p * np.eye(K) + r * np.ones((K, K))


def four_param_from_degree(K, s, expected_degree, gap):
    """Invert degree ``d = s p + N r`` and gap ``1 / (K r/p + 1)`` for ``(p, r)``."""
    if not 0 < gap <= 1:
        raise ValueError("gap must lie in (0, 1]")
    ratio = (1.0 / gap - 1.0) / K
    n = K * s
    p = expected_degree / (s + n * ratio)
    return p, ratio * p


def sample_degree_params(n, seed=0):
    """Draw ``sqrt(E + 0.169)`` with ``E ~ Exponential(1)``, i.i.d.; mean is close to 1."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    return np.sqrt(rng.exponential(1.0, size=int(n)) + 0.169)


def build_four_param(K, s, p, r, seed=0, planted="random", degree_corrected=False,
                     tau=0.0, theta=None):
    """Four-parameter ScBM: ``K`` row and column blocks of ``s`` nodes each.

    Same-block edges (``y_i == z_j``) have probability ``p + r`` and all others
    ``r``. With ``planted="random"`` the row and column partitions are drawn
    independently (a uniform permutation cut into ``K`` runs of ``s``); with
    ``"identical"`` the column partition copies the row partition.

    With ``degree_corrected=True`` each node draws one propensity from
    :func:`sample_degree_params` that scales both its sending and receiving
    probabilities; ``theta`` may instead be given explicitly.
    """
    if K < 1 or s < 1:
        raise ValueError("K and s must be positive")
    if not (0 <= p <= 1 and 0 <= r <= 1):
        raise ValueError("p and r must lie in [0, 1]")
    if p + r > 1:
        raise ValueError(f"p + r = {p + r:.6g} exceeds 1")
    if planted not in ("random", "identical"):
        raise ValueError("planted must be 'random' or 'identical'")
    n = K * s
    seq = np.random.SeedSequence(seed)
    part_seed, theta_seed = seq.spawn(2)
    rng = np.random.default_rng(part_seed)
    y = rng.permutation(n) // s
    z = y.copy() if planted == "identical" else rng.permutation(n) // s
    if theta is None and degree_corrected:
        theta = sample_degree_params(n, theta_seed)
    lineage = {"family": "four_param", "K": K, "s": s, "p": p, "r": r, "seed": seed,
               "planted": planted, "degree_corrected": bool(degree_corrected or theta is not None)}
    return BlockModel.from_probabilities(four_param_B(K, p, r), y, z, theta, theta,
                                         tau, DIRECTED, lineage)


def sample_adjacency(m, seed=0):
    """Draw one adjacency matrix with independent Bernoulli edges.

    Uniforms come from a Philox counter-based generator consumed in row-major
    order, so entry ``(i, j)`` always uses draw ``i * n_cols + j`` of the
    stream for ``seed`` regardless of how rows are chunked.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    rows, cols = [], []
    for start in range(0, m.n_rows, _CHUNK_ROWS):
        stop = min(start + _CHUNK_ROWS, m.n_rows)
        probs = m.edge_probabilities(slice(start, stop))
        hit = rng.random(probs.shape) < probs
        r, c = np.nonzero(hit)
        rows.append(r + start)
        cols.append(c)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    csr = sp.csr_matrix((np.ones(rows.shape[0]), (rows, cols)), shape=(m.n_rows, m.n_cols))
    return SparseGraph._build(csr, m.kind, None, None)


@dataclass(frozen=True, eq=False)
class PopulationObjects:
    """Population quantities of a block model at its regularizer ``tau``.

    Everything here is computed from the block structure in ``O(N K)``; the
    dense ``N x N`` matrices are only built on request through
    :meth:`script_A` and :meth:`script_L` (capped at 5000 nodes per side).

    Attributes
    ----------
    model : BlockModel
    O_B, P_B : ndarray
        Block out- and in-degree totals (row / column sums of ``B``).
    B_L : ndarray of shape (k_y, k_z)
        ``O_B^{-1/2} B P_B^{-1/2}``.
    H : ndarray of shape (k_y, k_z)
        ``(Y^T Theta_{Y,tau} Y)^{1/2} B_L (Z^T Theta_{Z,tau} Z)^{1/2}``.
    U, V : ndarray
        Left and right singular vectors of ``H`` for its ``K`` nonzero
        singular values.
    sigma : ndarray of shape (K,)
        ``lambda_1 >= ... >= lambda_K > 0``.
    out_deg, in_deg : ndarray
        Expected degrees (diagonals of the population degree matrices).
    theta_y_tau, theta_z_tau : ndarray
        Diagonals of ``Theta_{Y,tau}``, ``Theta_{Z,tau}``.
    script_XL, script_XR : ndarray
        Population singular vectors.
    delta : float
        Minimum expected row or column degree.
    kappa : float
        ``max_{i,j} ||V_i|| / ||V_j||`` over rows of ``V``.
    rank_deficient : bool
    """

    model: BlockModel
    O_B: np.ndarray
    P_B: np.ndarray
    B_L: np.ndarray
    H: np.ndarray
    U: np.ndarray
    V: np.ndarray
    sigma: np.ndarray
    out_deg: np.ndarray
    in_deg: np.ndarray
    theta_y_tau: np.ndarray
    theta_z_tau: np.ndarray
    script_XL: np.ndarray
    script_XR: np.ndarray
    delta: float
    kappa: float
    rank_deficient: bool = False

    @property
    def tau(self):
        return self.model.tau

    @property
    def K(self):
        return self.sigma.shape[0]

    @property
    def lambda_K(self):
        return float(self.sigma[-1])

    @cached_property
    def mu_y(self):
        """Population row-cluster centroids: rows of ``U`` projected to unit length."""
        return self.U / np.linalg.norm(self.U, axis=1, keepdims=True)

    @cached_property
    def mu_z(self):
        """Population column-cluster centroids ``V*``."""
        return self.V / np.linalg.norm(self.V, axis=1, keepdims=True)

    def _check_cap(self):
        m = self.model
        if max(m.n_rows, m.n_cols) > POPULATION_CAP:
            raise SizeCapError(f"dense population matrices are capped at {POPULATION_CAP} nodes")

    def script_A(self):
        """Dense expected adjacency ``Theta_y Y B Z^T Theta_z``."""
        self._check_cap()
        return self.model.edge_probabilities()

    def script_L(self):
        """Dense population Laplacian via the direct degree normalization."""
        A = self.script_A()
        tau = self.tau
        with np.errstate(divide="ignore"):
            rs = np.where(self.out_deg + tau > 0, 1 / np.sqrt(self.out_deg + tau), 0.0)
            cs = np.where(self.in_deg + tau > 0, 1 / np.sqrt(self.in_deg + tau), 0.0)
        return rs[:, None] * A * cs[None, :]

    def script_L_factored(self):
        """Dense ``Theta_{Y,tau}^{1/2} Y B_L Z^T Theta_{Z,tau}^{1/2}``."""
        self._check_cap()
        m = self.model
        return (np.sqrt(self.theta_y_tau)[:, None] * self.B_L[m.y][:, m.z]
                * np.sqrt(self.theta_z_tau)[None, :])


def _inv_sqrt(x):
    out = np.zeros_like(x, dtype=float)
    np.divide(1.0, np.sqrt(x), out=out, where=x > 0)
    return out


def population_objects(m, rank_tol=1e-10):
    """Compute the population Laplacian's factorization and singular structure."""
    tau = m.tau
    O_B = m.B.sum(axis=1)
    P_B = m.B.sum(axis=0)
    out_deg = m.theta_y * O_B[m.y]
    in_deg = m.theta_z * P_B[m.z]
    with np.errstate(invalid="ignore", divide="ignore"):
        ty_tau = np.where(out_deg + tau > 0, m.theta_y * out_deg / (out_deg + tau), 0.0)
        tz_tau = np.where(in_deg + tau > 0, m.theta_z * in_deg / (in_deg + tau), 0.0)
    B_L = _inv_sqrt(O_B)[:, None] * m.B * _inv_sqrt(P_B)[None, :]
    Dy = _block_sums(ty_tau, m.y, m.k_y)
    Dz = _block_sums(tz_tau, m.z, m.k_z)
    H = np.sqrt(Dy)[:, None] * B_L * np.sqrt(Dz)[None, :]

    u, s, vt = np.linalg.svd(H, full_matrices=False)
    rank = int(np.sum(s > rank_tol * max(s[0], 1e-300))) if s.size and s[0] > 0 else 0
    deficient = rank < min(m.k_y, m.k_z) or m.k_y > m.k_z
    if rank < min(m.k_y, m.k_z):
        warnings.warn(f"H has numerical rank {rank} < min(k_y, k_z) = "
                      f"{min(m.k_y, m.k_z)}; K reduced to the rank", RuntimeWarning,
                      stacklevel=2)
    elif m.k_y > m.k_z:
        warnings.warn("k_y > k_z: the misclustering theory assumes k_y <= k_z",
                      RuntimeWarning, stacklevel=2)
    U = u[:, :rank]
    V = vt[:rank].T
    sigma = s[:rank]

    script_XL = (np.sqrt(ty_tau) * _inv_sqrt(Dy)[m.y])[:, None] * U[m.y]
    script_XR = (np.sqrt(tz_tau) * _inv_sqrt(Dz)[m.z])[:, None] * V[m.z]
    delta = float(min(out_deg.min(), in_deg.min()))
    v_norms = np.linalg.norm(V, axis=1)
    kappa = float(v_norms.max() / v_norms.min()) if rank and v_norms.min() > 0 else math.inf
    return PopulationObjects(m, O_B, P_B, B_L, H, U, V, sigma, out_deg, in_deg,
                             ty_tau, tz_tau, script_XL, script_XR, delta, kappa, deficient)


def gamma_z(po, variant="main"):
    """Minimum distance between distinct columns of ``H``.

    ``variant="shifted"`` adds ``1 - kappa``. Returns ``inf`` when ``k_z == 1``.
    """
    H = po.H
    k_z = H.shape[1]
    if k_z < 2:
        return math.inf
    diff = H[:, :, None] - H[:, None, :]
    dist = np.sqrt(np.einsum("aij,aij->ij", diff, diff))
    base = float(dist[~np.eye(k_z, dtype=bool)].min())
    if variant == "main":
        return base
    if variant == "shifted":
        return base + (1.0 - po.kappa)
    raise ValueError("variant must be 'main' or 'shifted'")


def min_leverage(po):
    """``(m_y, m_z)``: smallest row norms of the population singular vectors."""
    return (float(np.linalg.norm(po.script_XL, axis=1).min()),
            float(np.linalg.norm(po.script_XR, axis=1).min()))
