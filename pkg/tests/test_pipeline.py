import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.metrics import adjusted_rand_score

from disim.graph import SparseGraph
from disim.laplacian import build_laplacian
from disim.model import build_four_param, sample_adjacency
from disim.pipeline import (
    MEAN_WEIGHT,
    UNASSIGNED,
    DiSim,
    block_connectivity,
    cocluster_embedding,
    disim,
    movement_scores,
    row_normalize,
)
from disim.spectral import Embedding, truncated_svd


def _groups(labels):
    return {frozenset(np.flatnonzero(labels == g)) for g in np.unique(labels)}


def test_two_cliques_exact(two_cliques):
    cc = disim(two_cliques, 2, 2)
    truth = {frozenset(range(10)), frozenset(range(10, 20))}
    assert _groups(cc.row_labels) == truth and _groups(cc.col_labels) == truth
    assert cc.variant["tau"] == pytest.approx(9.0)
    assert cc.K == 2


def test_bottleneck_node(bottleneck):
    cc = disim(bottleneck, 2, 2)
    b = 16
    assert cc.row_labels[b] == cc.row_labels[0]
    assert cc.row_labels[b] != cc.row_labels[8]
    assert cc.col_labels[b] == cc.col_labels[8]
    assert cc.col_labels[b] != cc.col_labels[0]
    scores = movement_scores(cc.embedding).scores
    assert np.argmax(scores) == b


def test_movement_examples():
    x = np.random.default_rng(0).standard_normal((5, 3))
    e = Embedding(x, x.copy(), np.ones(3))
    assert np.all(movement_scores(e).scores == 0)
    e = Embedding(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]), np.ones(2))
    assert movement_scores(e, 2).scores[0] == pytest.approx(np.sqrt(2))
    assert movement_scores(e, 1).scores[0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        movement_scores(e, 3)
    with pytest.raises(ValueError):
        movement_scores(e, kind="bipartite")


def _simple_positive_spectrum(L, K, margin=1e-3):
    w = np.linalg.eigvalsh(L)
    order = np.argsort(-np.abs(w))
    top = w[order[:K + 1]]
    return np.all(top[:K] > 0) and np.all(np.abs(np.diff(np.abs(top))) > margin)


def test_movement_zero_on_undirected():
    rng = np.random.default_rng(0)
    checked = 0
    while checked < 10:
        A = np.triu(rng.random((100, 100)) < 0.06, 1).astype(float)
        A = A + A.T
        lap = build_laplacian(SparseGraph.from_matrix(A), 0.0)
        if not _simple_positive_spectrum(lap.matrix.toarray(), 2):
            continue
        e = truncated_svd(lap.matrix, 2, seed=checked)
        assert movement_scores(e).scores.max() < 1e-6
        checked += 1


def test_block_connectivity_examples():
    g = SparseGraph.from_matrix(np.ones((3, 4)), kind="bipartite")
    cc = disim(g, 1, 1)
    bc = block_connectivity(g, cc)
    assert bc.matrix.tolist() == [[1.0]] and bc.counts.tolist() == [[12]]
    A = np.kron(np.eye(2), np.ones((3, 3)))
    g = SparseGraph.from_matrix(A)
    cc = disim(g, 2)
    bc = block_connectivity(g, cc)
    assert np.allclose(np.sort(bc.matrix.ravel()), [0, 0, 1, 1])


def test_block_connectivity_empty_pair_and_mean_weight(two_cliques):
    cc = disim(two_cliques, 2)
    # force an empty third cluster
    from dataclasses import replace
    cc3 = replace(cc, variant=dict(cc.variant, k_rows=3))
    bc = block_connectivity(two_cliques, cc3)
    assert np.all(np.isnan(bc.matrix[2])) and np.all(bc.counts[2] == 0)
    W = SparseGraph.from_matrix(2.5 * two_cliques.toarray())
    bw = block_connectivity(W, cc, MEAN_WEIGHT)
    bp = block_connectivity(W, cc)
    np.testing.assert_allclose(bw.matrix, 2.5 * bp.matrix)


def test_block_connectivity_binomial():
    m = build_four_param(3, 50, 0.3, 0.05, seed=4, planted="random")
    g = sample_adjacency(m, 9)
    cc = disim(g, 3)
    from dataclasses import replace
    planted = replace(cc, row_labels=m.y.copy(), col_labels=m.z.copy())
    bc = block_connectivity(g, planted)
    expected = 0.3 * np.eye(3) + 0.05
    se = np.sqrt(expected * (1 - expected) / bc.counts)
    assert np.all(np.abs(bc.matrix - expected) <= 3 * se)
    assert np.all((bc.matrix >= 0) & (bc.matrix <= 1))


def test_unprojected_variant_and_shared_embedding(bottleneck):
    a = disim(bottleneck, 2, project=False)
    b = disim(bottleneck, 2, project=True)
    assert a.variant["projected"] is False
    np.testing.assert_array_equal(a.embedding.left, b.embedding.left)
    np.testing.assert_array_equal(movement_scores(a.embedding).scores,
                                  movement_scores(b.embedding).scores)
    np.testing.assert_array_equal(a.row_points, a.embedding.left)


def test_stacked(bottleneck):
    cc = disim(bottleneck, 2, 2, stacked=True)
    assert np.array_equal(cc.row_centroids, cc.col_centroids)
    with pytest.raises(ValueError):
        disim(bottleneck, 2, 3, stacked=True)


def test_k_bounds(two_cliques):
    with pytest.raises(ValueError):
        disim(two_cliques, 21)
    with pytest.raises(ValueError):
        disim(two_cliques, 0)


def test_deterministic(rgraph):
    g = rgraph(np.random.default_rng(1), 40, density=0.15)
    a, b = disim(g, 3, seed=5), disim(g, 3, seed=5)
    assert np.array_equal(a.row_labels, b.row_labels)
    assert np.array_equal(a.col_labels, b.col_labels)


def test_permutation_equivariance():
    m = build_four_param(3, 30, 0.3, 0.03, seed=2)
    g = sample_adjacency(m, 2)
    perm = np.random.default_rng(0).permutation(g.n_rows)
    a = disim(g, 3)
    b = disim(g.permute(perm), 3)
    assert adjusted_rand_score(a.row_labels[perm], b.row_labels) == 1.0
    assert adjusted_rand_score(a.col_labels[perm], b.col_labels) == 1.0


def test_leverage_filter(rgraph):
    # node 0 has no out-edges: its X_L row is zero
    A = np.kron(np.eye(2), np.ones((6, 6)))
    A[0] = 0
    g = SparseGraph.from_matrix(A)
    cc = disim(g, 2, leverage_eta=0.0)
    assert cc.row_labels[0] == UNASSIGNED
    assert np.all(cc.row_labels[1:] != UNASSIGNED)
    assert np.all(cc.col_labels != UNASSIGNED)
    strict = disim(g, 2, leverage_eta=0.99)
    lev = np.linalg.norm(strict.embedding.left, axis=1)
    dropped = lev <= 0.99 * np.sqrt(2 / 12)
    assert np.array_equal(strict.row_labels == UNASSIGNED, dropped)
    with pytest.raises(ValueError):
        disim(g, 2, leverage_eta=-1)


def test_zero_rows_without_filter():
    A = np.kron(np.eye(2), np.ones((6, 6)))
    A[0] = 0
    A = np.pad(A, ((0, 1), (0, 1)))  # node 12 fully isolated
    g = SparseGraph.from_matrix(A)
    cc = disim(g, 2)
    assert cc.row_zero[0] and cc.row_labels[0] == UNASSIGNED
    assert cc.row_labels[12] == UNASSIGNED and cc.col_labels[12] == UNASSIGNED
    # node 0 still receives edges, so it gets a receiving cluster
    assert cc.col_labels[0] == cc.col_labels[1]


def test_zero_row_with_edges_gets_nearest_centroid():
    x = np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0], [0.1, 0.9], [0.0, 0.0]])
    e = Embedding(x, x.copy(), np.ones(2))
    has = np.array([True] * 5)
    cc = cocluster_embedding(e, 2, 2, row_has_edges=has, col_has_edges=has)
    assert cc.row_labels[4] != UNASSIGNED
    assert cc.row_zero[4]
    cc = cocluster_embedding(e, 2, 2)
    assert cc.row_labels[4] == UNASSIGNED


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=12), st.integers(0, 2**32 - 1))
def test_projection_perturbation_inequality(v, seed):
    v1 = np.array(v)
    v2 = v1 + np.random.default_rng(seed).standard_normal(v1.shape[0])
    n1, n2 = np.linalg.norm(v1), np.linalg.norm(v2)
    if min(n1, n2) < 1e-9:
        return
    lhs = np.linalg.norm(v1 / n1 - v2 / n2)
    assert lhs <= 2 * np.linalg.norm(v1 - v2) / max(n1, n2) + 1e-12


def test_row_normalize():
    x = np.array([[3.0, 4.0], [0.0, 0.0], [1e-13, 0.0]])
    out, zero = row_normalize(x)
    np.testing.assert_allclose(out[0], [0.6, 0.8])
    assert zero.tolist() == [False, True, True]
    assert not out[1:].any()


def test_estimator(two_cliques):
    est = DiSim(n_row_clusters=2, tau=1.0)
    assert clone(est).get_params() == est.get_params()
    rows, cols = est.fit_predict(two_cliques)
    assert _groups(rows) == _groups(cols) == {frozenset(range(10)), frozenset(range(10, 20))}
    assert est.tau_ == 1.0 and est.singular_values_.shape == (2,)
    assert est.movement_scores().shape == (20,)
    est.set_params(n_col_clusters=2, tau="auto").fit(two_cliques.toarray())
    assert est.tau_ == pytest.approx(9.0)


def test_bipartite_cocluster():
    A = np.kron(np.eye(2), np.ones((5, 3)))
    g = SparseGraph.from_matrix(A)
    assert g.kind == "bipartite"
    cc = disim(g, 2)
    assert _groups(cc.row_labels) == {frozenset(range(5)), frozenset(range(5, 10))}
    assert _groups(cc.col_labels) == {frozenset(range(3)), frozenset(range(3, 6))}
    with pytest.raises(ValueError):
        movement_scores(cc.embedding, kind=g.kind)
