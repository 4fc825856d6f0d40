import math

import numpy as np
import pytest

from lowpass_detect.graph_core import (
    BlockModelParams,
    DensityWarning,
    Graph,
    GraphError,
    block_sizes,
    normalized_laplacian,
    population_normalized_laplacian,
    sbm_sample,
    spectral_decompose,
)
from lowpass_detect.kmeans import kmeans_score, KMeansConfig


def test_params_validation():
    with pytest.raises(GraphError):
        BlockModelParams(10, 2, r=0.5, p=0.2)  # p < r
    with pytest.raises(GraphError):
        BlockModelParams(10, 2, r=0.5, p=0.6)  # p + r > 1
    with pytest.raises(GraphError):
        BlockModelParams(10, 2, r=0.0, p=0.3)
    with pytest.raises(GraphError):
        BlockModelParams(10, 1, r=0.1, p=0.3)


def test_B_when_p_equals_r():
    B = BlockModelParams(10, 2, r=0.2, p=0.2).B
    assert np.allclose(np.diag(B), 0.4)
    assert np.allclose(B[0, 1], 0.2)


def test_block_sizes_uneven():
    assert block_sizes(10, 3) == [4, 3, 3]
    Z = BlockModelParams(10, 3, 0.1, 0.2).Z
    assert np.all(Z.sum(1) == 1)
    assert Z.sum(0).tolist() == [4, 3, 3]


def test_density_flag_for_paper_parameters(paper_params):
    # the experiment parameters sit below the density level; flagged, not rejected
    assert not paper_params.dense_enough
    with pytest.warns(DensityWarning):
        sbm_sample(paper_params, seed=0)
    # (32 log N + 1)/N ~ 0.12 at N=2000
    assert BlockModelParams(2000, 2, 0.5, 0.5).dense_enough


def test_sbm_sample_paper_config(paper_params):
    g = sbm_sample(paper_params, seed=3)
    assert g.N == 150 and g.connected
    assert np.bincount(g.block_labels).tolist() == [0, 50, 50, 50]
    A = g.adjacency
    assert np.array_equal(A, A.T) and np.all(np.diag(A) == 0)
    assert g.degrees.min() >= 1


def test_sbm_same_seed_identical(paper_params):
    a = sbm_sample(paper_params, seed=42).adjacency
    b = sbm_sample(paper_params, seed=42).adjacency
    assert np.array_equal(a, b)


def test_sbm_mean_degree_monte_carlo(paper_params):
    p, r = paper_params.p, paper_params.r
    expected = 49 * (p + r) + 100 * r
    assert np.allclose(paper_params.expected_degrees(), expected)
    degs = [sbm_sample(paper_params, seed=s).degrees.mean() for s in range(100)]
    # std of a single graph's mean degree is about 0.13; 100 graphs -> ~0.013
    assert abs(np.mean(degs) - expected) < 0.1


def test_sbm_retries_exhausted():
    params = BlockModelParams(200, 2, r=1e-4, p=1e-4)
    with pytest.raises(GraphError, match="repeatedly disconnected"):
        sbm_sample(params, seed=0, max_retries=3)


def test_laplacian_single_edge():
    L = normalized_laplacian(Graph(np.array([[0.0, 1], [1, 0]])))
    assert np.allclose(L, [[1, -1], [-1, 1]])
    assert np.allclose(np.linalg.eigvalsh(L), [0, 2])


def test_laplacian_triangle():
    L = normalized_laplacian(Graph(np.ones((3, 3)) - np.eye(3)))
    assert np.allclose(L[~np.eye(3, dtype=bool)], -0.5)
    assert np.allclose(np.linalg.eigvalsh(L), [0, 1.5, 1.5])


def test_laplacian_isolated_node():
    A = np.zeros((3, 3))
    A[0, 1] = A[1, 0] = 1
    with pytest.raises(GraphError, match="zero degree"):
        normalized_laplacian(Graph(A))


def test_laplacian_spectrum_range(sbm_basis):
    g, basis = sbm_basis
    L = normalized_laplacian(g)
    assert np.allclose(np.diag(L), 1)
    assert 0 <= basis.eigenvalues[0] + 1e-12 and basis.eigenvalues[0] <= 1e-8
    assert basis.eigenvalues[-1] <= 2 + 1e-8


def test_population_laplacian_rank():
    params = BlockModelParams(4, 2, r=0.3, p=0.7)
    Lp = population_normalized_laplacian(params)
    assert np.linalg.matrix_rank(np.eye(4) - Lp, tol=1e-10) == 2
    assert np.allclose(Lp, Lp.T)


def test_population_laplacian_block_constant(paper_params):
    Lp = population_normalized_laplacian(paper_params)
    off = Lp - np.diag(np.diag(Lp))
    z = paper_params.labels
    for a in range(3):
        for b in range(3):
            block = off[np.ix_(z == a, z == b)]
            vals = block[~np.eye(*block.shape, dtype=bool)] if a == b else block.ravel()
            assert np.ptp(vals) < 1e-12


def test_population_eigenvectors_piecewise_constant(paper_params):
    basis = spectral_decompose(population_normalized_laplacian(paper_params))
    VK = basis.eigenvectors[:, :3]
    assert np.unique(np.round(VK, 8), axis=0).shape[0] <= 3
    sol = kmeans_score(VK, KMeansConfig(K=3, seed=0))
    assert sol.score <= 1e-8


def test_spectral_decompose_identity():
    b = spectral_decompose(np.eye(4))
    assert np.allclose(b.eigenvalues, 1)
    assert np.allclose(b.eigenvectors, np.eye(4))


def test_spectral_decompose_null_vector(sbm_basis):
    g, basis = sbm_basis
    v = np.sqrt(g.degrees)
    v /= np.linalg.norm(v)
    assert np.allclose(basis.eigenvectors[:, 0], v, atol=1e-8)


def test_spectral_decompose_invariants(rng):
    for _ in range(5):
        X = rng.standard_normal((50, 50))
        S = X + X.T
        b = spectral_decompose(S)
        V, w = b.eigenvectors, b.eigenvalues
        assert np.all(np.diff(w) >= 0)
        assert np.abs(V.T @ V - np.eye(50)).max() <= 1e-10
        assert np.abs((V * w) @ V.T - S).max() <= 1e-8
        assert np.linalg.norm(S @ V - V * w, axis=0).max() <= 1e-8
        lead = np.argmax(np.abs(V), axis=0)
        assert np.all(V[lead, np.arange(50)] >= 0)


def test_spectral_decompose_deterministic_under_sign_flip(rng):
    X = rng.standard_normal((20, 20))
    S = X + X.T
    a = spectral_decompose(S).eigenvectors
    b = spectral_decompose(S.copy()).eigenvectors
    assert np.array_equal(a, b)


def test_spectral_decompose_rejects_nonsymmetric():
    with pytest.raises(GraphError):
        spectral_decompose(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_edgelist_roundtrip(tmp_path, paper_params):
    g = sbm_sample(paper_params, seed=5)
    path = tmp_path / "g.txt"
    g.to_edgelist(path)
    first = path.read_text().splitlines()[1]
    i, j = map(int, first.split())
    assert i < j
    assert np.array_equal(Graph.from_edgelist(path).adjacency, g.adjacency)
