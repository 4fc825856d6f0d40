"""Blind community detection from observed signals and detector-based pre-screening."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import comb

from .detector import DetectorVerdict, covariance_top_k, detect
from .kmeans import KMeansConfig, kmeans_score
from .signals import SignalBatch


@dataclass
class CommunityAssignment:
    labels: np.ndarray  # 1..K, one per observed node
    K: int
    source: str = "blind-cd"


def blind_cd(batch: SignalBatch, K: int, cfg: KMeansConfig | None = None) -> CommunityAssignment:
    """Cluster the rows of the top-K sample-covariance eigenvectors."""
    if batch.M < K:
        raise ValueError(f"need at least K={K} samples, got M={batch.M}")
    cfg = cfg or KMeansConfig(K=K)
    _, Q = covariance_top_k(batch, K)
    sol = kmeans_score(Q, cfg)
    return CommunityAssignment(sol.labels + 1, K)


@dataclass
class PrescreenResult:
    batch_verdicts: list[tuple[int, DetectorVerdict]]
    retained_sample_indices: np.ndarray
    retained_batch: SignalBatch

    @property
    def all_rejected(self) -> bool:
        return self.retained_sample_indices.size == 0

    def to_dict(self) -> dict:
        return {
            "batches": [
                {"batch": b, "verdict": v.verdict.value, "score": v.score} for b, v in self.batch_verdicts
            ],
            "retained_batches": sum(v.low_pass for _, v in self.batch_verdicts),
            "retained_samples": int(self.retained_sample_indices.size),
            "all_rejected": self.all_rejected,
        }


def prescreen(
    batch: SignalBatch, M_batch: int, K: int, delta: float, cfg: KMeansConfig | None = None
) -> PrescreenResult:
    """Run the detector on consecutive windows of ``M_batch`` samples and keep the low-pass ones.

    A trailing partial window is dropped. If every window is rejected the
    retained batch has zero columns.
    """
    if M_batch < 1 or batch.M < M_batch:
        raise ValueError(f"need 1 <= M_batch <= M, got M_batch={M_batch}, M={batch.M}")
    verdicts = []
    keep = []
    for b in range(batch.M // M_batch):
        idx = np.arange(b * M_batch, (b + 1) * M_batch)
        v = detect(batch.columns(idx), K, delta, cfg)
        verdicts.append((b, v))
        if v.low_pass:
            keep.append(idx)
    retained = np.concatenate(keep) if keep else np.zeros(0, dtype=int)
    if keep:
        retained_batch = batch.columns(retained)
    else:
        retained_batch = replace(batch, data=np.zeros((batch.n, 0)), corruption_log=[])
    return PrescreenResult(verdicts, retained, retained_batch)


def adjusted_rand_index(a, b) -> float:
    """Adjusted Rand index from the pair-counting contingency table."""
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.size != b.size:
        raise ValueError(f"label vectors differ in length ({a.size} vs {b.size})")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max(initial=-1) + 1, bi.max(initial=-1) + 1))
    np.add.at(table, (ai, bi), 1)
    sum_cells = comb(table, 2).sum()
    sum_a = comb(table.sum(1), 2).sum()
    sum_b = comb(table.sum(0), 2).sum()
    total = comb(a.size, 2)
    if total == 0:
        return 1.0
    expected = sum_a * sum_b / total
    max_index = (sum_a + sum_b) / 2
    if max_index == expected:
        # both labelings trivial (all one cluster or all singletons)
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))
