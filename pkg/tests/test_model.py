import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

import disim.model as model_mod
from disim.evaluation import procrustes
from disim.model import (
    BlockModel,
    build_four_param,
    four_param_from_degree,
    gamma_z,
    min_leverage,
    population_objects,
    sample_adjacency,
    sample_degree_params,
)
from disim.spectral import dense_svd_oracle


def random_dc_model(seed, n_max=200, tau=0.0):
    rng = np.random.default_rng(seed)
    k_y = int(rng.integers(1, 5))
    k_z = int(rng.integers(k_y, 6))
    n_r = int(rng.integers(max(k_y, 5), n_max + 1))
    n_c = n_r if rng.random() < 0.5 else int(rng.integers(max(k_z, 5), n_max + 1))
    y = np.concatenate([np.arange(k_y), rng.integers(0, k_y, n_r - k_y)])
    z = np.concatenate([np.arange(k_z), rng.integers(0, k_z, n_c - k_z)])
    theta_y = rng.uniform(0.3, 2.0, n_r)
    theta_z = rng.uniform(0.3, 2.0, n_c)
    B = rng.uniform(0.0, 0.2, (k_y, k_z)) + 0.05
    kind = "directed" if n_r == n_c else "bipartite"
    return BlockModel.from_probabilities(B, y, z, theta_y, theta_z, tau, kind)


def test_four_param_examples():
    m = build_four_param(2, 1, 0.5, 0.2, seed=0)
    np.testing.assert_allclose(m.B, [[0.7, 0.2], [0.2, 0.7]])
    m = build_four_param(1, 7, 0.3, 0.1, seed=0)
    np.testing.assert_allclose(m.edge_probabilities(), 0.4)
    assert m.B.shape == (1, 1)


def test_four_param_structure():
    m = build_four_param(4, 25, 0.2, 0.05, seed=3)
    assert m.n_rows == 100
    assert np.all(m.Y.sum(axis=0) == 25) and np.all(m.Z.sum(axis=0) == 25)
    assert np.all(m.Y.sum(axis=1) == 1)
    assert not np.array_equal(m.y, m.z)
    P = m.edge_probabilities()
    same = m.y[:, None] == m.z[None, :]
    np.testing.assert_allclose(P[same], 0.25)
    np.testing.assert_allclose(P[~same], 0.05)
    ident = build_four_param(4, 25, 0.2, 0.05, seed=3, planted="identical")
    assert np.array_equal(ident.y, ident.z)


def test_four_param_errors():
    with pytest.raises(ValueError):
        build_four_param(2, 3, 0.8, 0.3)
    with pytest.raises(ValueError):
        build_four_param(2, 3, 0.3, 0.1, planted="other")


def test_gap_parameterization():
    p, r = four_param_from_degree(5, 400, 10, 0.5)
    assert p == pytest.approx(5 * r)
    assert 400 * p + 2000 * r == pytest.approx(10)
    m = build_four_param(5, 20, 0.5, 0.1, seed=0)
    assert population_objects(m).lambda_K == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("K", [2, 3, 5])
@pytest.mark.parametrize("ratio", [0.1, 0.2, 1.0])
def test_closed_form_singular_values(K, ratio):
    m = build_four_param(K, 30, 0.3, 0.3 * ratio, seed=K)
    po = population_objects(m)
    assert po.lambda_K == pytest.approx(1 / (K * ratio + 1), abs=1e-10)
    assert po.sigma[0] == pytest.approx(1.0, abs=1e-10)
    assert min_leverage(po)[0] == pytest.approx(math.sqrt(K / m.n_rows), abs=1e-12)


def test_sample_extremes():
    y = np.array([0, 0, 1, 1])
    zero = BlockModel.from_probabilities(np.zeros((2, 2)), y, y)
    assert sample_adjacency(zero, 1).nnz == 0
    full = BlockModel.from_probabilities(np.ones((2, 2)), y, y)
    assert sample_adjacency(full, 1).nnz == 16
    half = BlockModel.from_probabilities(np.eye(2), y, y)
    np.testing.assert_array_equal(sample_adjacency(half, 1).toarray(), np.eye(2)[y][:, y])


def test_sample_block_means():
    m = build_four_param(2, 250, 0.1, 0.05, seed=1, degree_corrected=True)
    P = m.edge_probabilities()
    total = np.zeros_like(P)
    seeds = 50
    for seed in range(seeds):
        total += sample_adjacency(m, seed).toarray()
    for a in range(2):
        for b in range(2):
            mask = (m.y[:, None] == a) & (m.z[None, :] == b)
            mean = total[mask].sum() / (seeds * mask.sum())
            var = (P[mask] * (1 - P[mask])).sum() / (seeds * mask.sum() ** 2)
            assert abs(mean - P[mask].mean()) <= 4 * math.sqrt(var)


def test_sample_independent_of_chunking(monkeypatch):
    m = build_four_param(3, 40, 0.3, 0.05, seed=0)
    a = sample_adjacency(m, 12).toarray()
    monkeypatch.setattr(model_mod, "_CHUNK_ROWS", 7)
    b = sample_adjacency(m, 12).toarray()
    np.testing.assert_array_equal(a, b)
    assert sample_adjacency(m, 12).kind == "directed"


def test_degree_params():
    x = sample_degree_params(10**6, seed=0)
    assert x.min() >= math.sqrt(0.169)
    exact_mean = integrate.quad(lambda e: math.sqrt(e + 0.169) * math.exp(-e), 0, np.inf)[0]
    assert abs(exact_mean - 1) < 0.01
    se = x.std() / 1000
    assert abs(x.mean() - exact_mean) < 5 * se
    assert np.mean(x ** 2) == pytest.approx(1.169, rel=0.01)
    with pytest.raises(ValueError):
        sample_degree_params(0)


def test_identifiability_and_renormalization():
    m = build_four_param(3, 20, 0.2, 0.05, seed=1, degree_corrected=True)
    for labels, theta, k in ((m.y, m.theta_y, 3), (m.z, m.theta_z, 3)):
        np.testing.assert_allclose(np.bincount(labels, theta, k), 1.0, atol=1e-12)
    again = m.renormalized()
    np.testing.assert_allclose(again.B, m.B, rtol=1e-13)
    np.testing.assert_allclose(again.theta_y, m.theta_y, rtol=1e-13)
    with pytest.raises(ValueError):
        BlockModel(m.B, m.y, m.z, 2 * m.theta_y, m.theta_z)


def test_from_probabilities_keeps_probabilities():
    rng = np.random.default_rng(0)
    y = rng.integers(0, 2, 30)
    y[:2] = [0, 1]
    theta = rng.uniform(0.5, 1.5, 30)
    Bp = np.array([[0.3, 0.1], [0.05, 0.4]])
    m = BlockModel.from_probabilities(Bp, y, y, theta, theta)
    expected = theta[:, None] * Bp[y][:, y] * theta[None, :]
    np.testing.assert_allclose(m.edge_probabilities(), expected, rtol=1e-12)
    plain = BlockModel.from_probabilities(Bp, y, y)
    sizes = np.bincount(y)
    np.testing.assert_allclose(plain.theta_y, 1 / sizes[y])
    np.testing.assert_allclose(plain.B, Bp * np.outer(sizes, sizes))


def test_probability_overflow_is_an_error():
    y = np.array([0, 0, 1])
    with pytest.raises(ValueError, match="exceeds 1"):
        BlockModel.from_probabilities(np.full((2, 2), 0.9), y, y, [1, 2, 1], [1, 1, 1])


def test_membership_validation():
    with pytest.raises(ValueError, match="empty"):
        BlockModel.from_probabilities(np.eye(3), [0, 0, 1], [0, 1, 2])
    with pytest.raises(ValueError):
        BlockModel.from_probabilities(np.eye(2), [0, 2], [0, 1])


@pytest.mark.parametrize("seed", range(20))
def test_explicit_laplacian_factored_form(seed):
    tau = (0.0, 1.0, 7.3)[seed % 3]
    m = random_dc_model(seed, tau=tau)
    po = population_objects(m)
    assert np.abs(po.script_L() - po.script_L_factored()).max() < 1e-12


@pytest.mark.parametrize("seed", range(8))
def test_singular_values_match_H(seed):
    m = random_dc_model(100 + seed, n_max=120, tau=float(seed))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        po = population_objects(m)
    dense = dense_svd_oracle(po.script_L()).sigma
    h = dense_svd_oracle(po.H).sigma
    np.testing.assert_allclose(dense[:h.shape[0]], h, atol=1e-10)
    np.testing.assert_allclose(dense[h.shape[0]:], 0, atol=1e-10)
    np.testing.assert_allclose(po.sigma, h[:po.K], atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_population_vectors_block_constant(seed):
    m = random_dc_model(200 + seed, n_max=100, tau=2.0)
    if m.k_y > m.k_z:
        pytest.skip("needs k_y <= k_z")
    po = population_objects(m)
    XL = po.script_XL
    np.testing.assert_allclose(XL.T @ XL, np.eye(po.K), atol=1e-10)
    L = po.script_L()
    np.testing.assert_allclose(L @ po.script_XR, XL * po.sigma, atol=1e-10)
    # normalized rows equal Y U up to a rotation
    dense = dense_svd_oracle(L)
    Xd = dense.left[:, :po.K]
    Xd_star = Xd / np.linalg.norm(Xd, axis=1, keepdims=True)
    R = procrustes(Xd, XL)
    np.testing.assert_allclose(Xd_star, po.mu_y[m.y] @ R, atol=1e-8)


def test_stochastic_equivalence():
    m = build_four_param(3, 10, 0.3, 0.1, seed=0)
    A = model_mod.population_objects(m).script_A()
    for i in range(m.n_rows):
        for j in range(m.n_rows):
            if m.y[i] == m.y[j]:
                np.testing.assert_array_equal(A[i], A[j])
            if m.z[i] == m.z[j]:
                np.testing.assert_array_equal(A[:, i], A[:, j])


def test_expected_degrees_monte_carlo():
    m = build_four_param(2, 50, 0.1, 0.05, seed=2, degree_corrected=True)
    po = population_objects(m)
    P = m.edge_probabilities()
    trials = 200
    out_sum = np.zeros(m.n_rows)
    in_sum = np.zeros(m.n_cols)
    for seed in range(trials):
        g = sample_adjacency(m, seed)
        out_sum += np.asarray(g.csr.sum(axis=1)).ravel()
        in_sum += np.asarray(g.csr.sum(axis=0)).ravel()
    out_se = np.sqrt((P * (1 - P)).sum(axis=1) / trials)
    in_se = np.sqrt((P * (1 - P)).sum(axis=0) / trials)
    assert np.all(np.abs(out_sum / trials - po.out_deg) <= 5 * out_se)
    assert np.all(np.abs(in_sum / trials - po.in_deg) <= 5 * in_se)


def test_gamma_z_cases():
    y = np.repeat(np.arange(2), 5)
    po = population_objects(BlockModel.from_probabilities(np.eye(2) * 0.5, y, y))
    assert gamma_z(po) > 0
    # column blocks 1 and 2 are copies of each other with equal sizes
    B = np.array([[0.5, 0.2, 0.2], [0.1, 0.4, 0.4]])
    z_eq = np.array([0, 0, 0, 0, 1, 1, 1, 2, 2, 2])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        po = population_objects(BlockModel.from_probabilities(B, y, z_eq))
    assert gamma_z(po) == pytest.approx(0.0, abs=1e-12)
    one = population_objects(BlockModel.from_probabilities([[0.3]], np.zeros(4, int),
                                                           np.zeros(4, int)))
    assert gamma_z(one) == math.inf
    assert gamma_z(po, "shifted") == pytest.approx(gamma_z(po) + 1 - po.kappa)
    with pytest.raises(ValueError):
        gamma_z(po, "other")


def test_rank_deficient_warns_and_reduces_K():
    y = np.repeat(np.arange(3), 4)
    B = np.array([[0.3, 0.1, 0.2], [0.3, 0.1, 0.2], [0.1, 0.3, 0.2]])
    m = BlockModel.from_probabilities(B, y, y)
    with pytest.warns(RuntimeWarning, match="rank"):
        po = population_objects(m)
    assert po.K == 2 and po.rank_deficient


def test_population_cap():
    m = build_four_param(1, 5001, 0.001, 0.0, seed=0)
    po = population_objects(m)
    with pytest.raises(ValueError):
        po.script_L()


@given(st.integers(0, 2**32 - 1))
def test_json_roundtrip(seed):
    m = random_dc_model(seed % 10000, n_max=30, tau=1.5)
    text = m.to_json()
    back = BlockModel.from_json(text)
    np.testing.assert_array_equal(back.B, m.B)
    np.testing.assert_array_equal(back.theta_z, m.theta_z)
    np.testing.assert_array_equal(back.y, m.y)
    assert back.tau == m.tau and back.kind == m.kind
    data = json.loads(text)
    assert data["row_block_sizes"] == np.bincount(m.y).tolist()


def test_json_file(tmp_path):
    m = build_four_param(2, 5, 0.1, 0.02, seed=4, degree_corrected=True)
    path = tmp_path / "m.json"
    m.to_json(path)
    back = BlockModel.from_json(path)
    assert back.lineage["seed"] == 4 and back.lineage["degree_corrected"]
