"""K-means scores: best-of-restarts Lloyd plus exact enumeration and 1-D DP oracles."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

MAX_EXACT_ROWS = 12


@dataclass(frozen=True)
class KMeansConfig:
    K: int
    restarts: int = 20
    max_iterations: int = 300
    tolerance: float = 1e-9
    seed: int | None = 0
    seeding: Literal["careful", "uniform"] = "careful"

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be positive, got {self.K}")
        if self.restarts < 1 or self.max_iterations < 1:
            raise ValueError("restarts and max_iterations must be positive")
        if self.tolerance < 0:
            raise ValueError("tolerance must be non-negative")
        if self.seeding not in ("careful", "uniform"):
            raise ValueError(f"unknown seeding {self.seeding!r}")


@dataclass
class KMeansSolution:
    score: float
    labels: np.ndarray  # cluster index per row, 0..K-1
    centroids: np.ndarray

    @property
    def partition(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.labels == k) for k in range(self.centroids.shape[0])]


def partition_cost(X: np.ndarray, labels: np.ndarray) -> float:
    """Within-cluster sum of squared distances to cluster means."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    total = 0.0
    for k in np.unique(labels):
        pts = X[labels == k]
        total += float(((pts - pts.mean(axis=0)) ** 2).sum())
    return total


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d = (X**2).sum(1)[:, None] - 2 * X @ C.T + (C**2).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _seed_centroids(X, K, rng, seeding):
    m = X.shape[0]
    if seeding == "uniform":
        idx = rng.choice(m, size=K, replace=m < K)
        return X[idx].copy()
    centroids = [X[rng.integers(m)]]
    closest = ((X - centroids[0]) ** 2).sum(1)
    for _ in range(1, K):
        total = closest.sum()
        if total <= 0:
            i = rng.integers(m)
        else:
            i = rng.choice(m, p=closest / total)
        centroids.append(X[i])
        closest = np.minimum(closest, ((X - X[i]) ** 2).sum(1))
    return np.array(centroids)


def _lloyd(X, C, max_iterations, tolerance):
    K = C.shape[0]
    prev = np.inf
    labels = None
    for _ in range(max_iterations):
        new_labels = np.argmin(_sq_dists(X, C), axis=1)
        for k in range(K):
            members = new_labels == k
            if members.any():
                C[k] = X[members].mean(axis=0)
        score = partition_cost(X, new_labels)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        if np.isfinite(prev) and prev - score <= tolerance * prev:
            break
        prev = score
    labels = np.argmin(_sq_dists(X, C), axis=1) if labels is None else labels
    return partition_cost(X, labels), labels, C


def _hartigan(X, labels, K, max_moves):
    """Single-point moves that lower the cost once centroids are re-fit.

    Lloyd only moves a point to its nearest centroid; a move can still pay off
    after the two affected means shift. Applies the best move until none
    helps, so the cost never increases.
    """
    labels = labels.copy()
    m = X.shape[0]
    rows = np.arange(m)
    counts = np.bincount(labels, minlength=K).astype(float)
    sums = np.zeros((K, X.shape[1]))
    np.add.at(sums, labels, X)
    for _ in range(max_moves):
        nz = counts > 0
        C = np.zeros_like(sums)
        C[nz] = sums[nz] / counts[nz, None]
        D = _sq_dists(X, C)
        own = counts[labels]
        # a singleton cannot leave without emptying its cluster
        with np.errstate(divide="ignore", invalid="ignore"):
            remove = np.where(own > 1, own / (own - 1) * D[rows, labels], 0.0)
        add = np.where(nz, counts / (counts + 1), 0.0)[None, :] * D
        add[rows, labels] = np.inf
        target = np.argmin(add, axis=1)
        gain = remove - add[rows, target]
        i = int(np.argmax(gain))
        # relative margin stops round-off from cycling a point back and forth
        if not gain[i] > 1e-12 * remove[i]:
            break
        a, b = labels[i], target[i]
        labels[i] = b
        counts[a] -= 1
        counts[b] += 1
        sums[a] -= X[i]
        sums[b] += X[i]
    nz = counts > 0
    C = np.zeros_like(sums)
    C[nz] = sums[nz] / counts[nz, None]
    return partition_cost(X, labels), labels, C


def kmeans_score(X: np.ndarray, cfg: KMeansConfig) -> KMeansSolution:
    """Best-of-``cfg.restarts`` Lloyd on the rows of ``X``; deterministic given ``cfg.seed``.

    Each restart's Lloyd fixed point is polished by single-point Hartigan moves.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 1:
        raise ValueError("need at least one row")
    rng = np.random.default_rng(cfg.seed)
    best = None
    for _ in range(cfg.restarts):
        C = _seed_centroids(X, cfg.K, rng, cfg.seeding)
        _, labels, C = _lloyd(X, C, cfg.max_iterations, cfg.tolerance)
        score, labels, C = _hartigan(X, labels, cfg.K, cfg.max_iterations)
        # strict < keeps the earliest restart among equal scores
        if best is None or score < best[0]:
            best = (score, labels, C)
    return KMeansSolution(*best)


@lru_cache(maxsize=64)
def _restricted_growth_strings(m: int, K: int) -> np.ndarray:
    """All labelings of m items into at most K unlabeled cells, one row per partition."""
    rows: list[list[int]] = []

    def rec(prefix, top):
        if len(prefix) == m:
            rows.append(prefix.copy())
            return
        for c in range(min(top + 2, K)):
            prefix.append(c)
            rec(prefix, max(top, c))
            prefix.pop()

    rec([0], 0) if m > 0 else rows.append([])
    out = np.array(rows, dtype=np.int64).reshape(len(rows), m)
    out.setflags(write=False)
    return out


def kmeans_exact(X: np.ndarray, K: int) -> KMeansSolution:
    """Exact K-means by enumerating every partition of the rows into at most K cells."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    m = X.shape[0]
    if m > MAX_EXACT_ROWS:
        raise ValueError(f"exact enumeration supports at most {MAX_EXACT_ROWS} rows, got {m}")
    if K < 1:
        raise ValueError("K must be positive")
    L = _restricted_growth_strings(m, K)
    sq = float((X**2).sum())
    between = np.zeros(L.shape[0])
    for k in range(K):
        onehot = (L == k).astype(float)
        counts = onehot.sum(1)
        sums = onehot @ X
        with np.errstate(divide="ignore", invalid="ignore"):
            between += np.where(counts > 0, (sums**2).sum(1) / counts, 0.0)
    approx = sq - between
    # re-score near-optimal candidates directly to avoid cancellation error
    cand = np.flatnonzero(approx <= approx.min() + 1e-9 * max(1.0, sq))
    costs = [partition_cost(X, L[c]) for c in cand]
    j = int(np.argmin(costs))
    labels = np.asarray(L[cand[j]]).copy()
    C = np.zeros((K, X.shape[1]))
    for k in range(K):
        if np.any(labels == k):
            C[k] = X[labels == k].mean(0)
    return KMeansSolution(float(costs[j]), labels, C)


def kmeans_score_exact(X: np.ndarray, K: int) -> float:
    return kmeans_exact(X, K).score


def kmeans_score_1d_exact(v, K: int) -> float:
    """Exact 1-D K-means via dynamic programming over sorted values."""
    x = np.sort(np.asarray(v, dtype=float).ravel())
    m = x.size
    if m < K:
        raise ValueError(f"need at least K={K} values, got {m}")
    x = x - x.mean()
    s1 = np.concatenate([[0.0], np.cumsum(x)])
    s2 = np.concatenate([[0.0], np.cumsum(x * x)])
    # seg[i, j]: cost of the sorted run x[i:j]; +inf where j <= i
    i = np.arange(m + 1)[:, None]
    j = np.arange(m + 1)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        seg = s2[j] - s2[i] - (s1[j] - s1[i]) ** 2 / (j - i)
    seg[j <= i] = np.inf
    # D[j]: best cost of x[:j] using the current number of clusters
    D = seg[0].copy()
    for _ in range(2, K + 1):
        D = np.min(D[:, None] + seg, axis=0)
    return float(max(D[m], 0.0))
