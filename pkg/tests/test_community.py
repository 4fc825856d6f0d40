import itertools

import numpy as np
import pytest

from lowpass_detect.community import adjusted_rand_index, blind_cd, prescreen
from lowpass_detect.filters import HeatDiffusion, PowerLowPass, evaluate_response
from lowpass_detect.kmeans import KMeansConfig, kmeans_score
from lowpass_detect.signals import CorruptionSpec, ObservationMask, corrupt_batch, generate_observed_batch, sample_mask


def _pair_count_ari(a, b):
    # textbook pair-counting form, written independently of the contingency table
    n = len(a)
    pairs = list(itertools.combinations(range(n), 2))
    same_a = np.array([a[i] == a[j] for i, j in pairs])
    same_b = np.array([b[i] == b[j] for i, j in pairs])
    index = np.sum(same_a & same_b)
    expected = same_a.sum() * same_b.sum() / len(pairs)
    max_index = (same_a.sum() + same_b.sum()) / 2
    return (index - expected) / (max_index - expected)


def test_ari_hand_cases():
    assert adjusted_rand_index([1, 1, 2, 2, 3], [1, 1, 2, 2, 3]) == 1.0
    assert adjusted_rand_index([1, 1, 2, 2, 3], [3, 3, 1, 1, 2]) == 1.0
    assert adjusted_rand_index([1, 1, 2, 2], [1, 2, 1, 2]) == pytest.approx(-0.5)
    with pytest.raises(ValueError):
        adjusted_rand_index([1, 2], [1, 2, 3])


def test_ari_against_pair_counting(rng):
    for _ in range(100):
        n = int(rng.integers(4, 20))
        a = rng.integers(1, 4, n)
        b = rng.integers(1, 4, n)
        if len(set(a)) == 1 and len(set(b)) == 1:
            continue
        ref = _pair_count_ari(a, b)
        assert adjusted_rand_index(a, b) == pytest.approx(ref, abs=1e-12)
        assert adjusted_rand_index(b, a) == pytest.approx(ref, abs=1e-12)


def test_blind_cd_matches_graph_aware_clustering(sbm_basis):
    # with a sharp filter and many samples, clustering the covariance
    # eigenvectors should agree with clustering the true Laplacian eigenvectors
    _, basis = sbm_basis
    sp = evaluate_response(HeatDiffusion(5.0), basis)
    mask = ObservationMask.full(150)
    batch = generate_observed_batch(basis, sp, mask, 0.0, 10_000, seed=3)
    res = blind_cd(batch, 3, KMeansConfig(K=3, seed=0))
    assert set(np.unique(res.labels)) <= {1, 2, 3}
    oracle = kmeans_score(basis.eigenvectors[:, :3], KMeansConfig(K=3, restarts=50)).labels
    assert adjusted_rand_index(oracle, res.labels) >= 0.97


def _power_batch(g, basis, M=1000, n=100, seed=0):
    sp = evaluate_response(PowerLowPass(0.5, 3), basis)
    mask = sample_mask(150, n, seed=seed)
    return generate_observed_batch(basis, sp, mask, 1e-2, M, seed=seed), g.block_labels[mask.observed]


def test_prescreen_accept_all_matches_blind_cd(sbm_basis):
    g, basis = sbm_basis
    batch, _ = _power_batch(g, basis)
    cfg = KMeansConfig(K=3, seed=5)
    res = prescreen(batch, 50, 3, 1e9, cfg)
    assert len(res.batch_verdicts) == 20
    assert not res.all_rejected
    np.testing.assert_array_equal(res.retained_sample_indices, np.arange(1000))
    np.testing.assert_array_equal(res.retained_batch.data, batch.data)
    assert np.array_equal(blind_cd(res.retained_batch, 3, cfg).labels, blind_cd(batch, 3, cfg).labels)


def test_prescreen_reject_all(sbm_basis):
    g, basis = sbm_basis
    batch, _ = _power_batch(g, basis)
    res = prescreen(batch, 50, 3, 1e-12)
    assert res.all_rejected
    assert res.retained_batch.M == 0 and res.retained_batch.n == batch.n
    d = res.to_dict()
    assert d["retained_batches"] == 0 and d["all_rejected"] and len(d["batches"]) == 20


def test_prescreen_partial_window_dropped(sbm_basis):
    g, basis = sbm_basis
    batch, _ = _power_batch(g, basis, M=130)
    res = prescreen(batch, 50, 3, 1e9)
    assert len(res.batch_verdicts) == 2
    assert res.retained_sample_indices.max() == 99
    with pytest.raises(ValueError):
        prescreen(batch, 200, 3, 0.5)


def test_corrupted_windows_score_higher(sbm_basis):
    g, basis = sbm_basis
    batch, _ = _power_batch(g, basis)
    # five bursts of 50 aligned with the windows keeps the comparison clean
    bad = corrupt_batch(batch, CorruptionSpec(0.25, 50, 1.0), seed=1)
    starts = bad.provenance["corruption"]["burst_starts"]
    res = prescreen(bad, 50, 3, 0.5)
    hit = {b for b, _ in res.batch_verdicts if any(s < (b + 1) * 50 and s + 50 > b * 50 for s in starts)}
    clean_scores = [v.score for b, v in res.batch_verdicts if b not in hit]
    dirty_scores = [v.score for b, v in res.batch_verdicts if b in hit]
    assert np.median(dirty_scores) > np.median(clean_scores)
