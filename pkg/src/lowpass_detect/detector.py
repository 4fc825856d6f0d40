"""K-means score detector for low-pass graph signals and its AUROC evaluation."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .graph_core import fix_signs
from .kmeans import KMeansConfig, kmeans_score
from .signals import SignalBatch, sample_covariance


class Hypothesis(str, Enum):
    T0 = "T0"  # K-low-pass
    T1 = "T1"  # not K-low-pass


@dataclass
class DetectorVerdict:
    score: float
    threshold: float
    verdict: Hypothesis
    top_k_eigenvalues: np.ndarray
    n: int
    M: int
    K: int

    @property
    def low_pass(self) -> bool:
        return self.verdict is Hypothesis.T0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = self.verdict.value
        d["top_k_eigenvalues"] = self.top_k_eigenvalues.tolist()
        return d


def top_eigenvectors(C: np.ndarray, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and sign-fixed eigenvectors of the K largest eigenvalues."""
    w, V = np.linalg.eigh(C)
    order = np.argsort(-w, kind="stable")[:K]
    return w[order], fix_signs(V[:, order])


def covariance_top_k(batch: SignalBatch, K: int) -> tuple[np.ndarray, np.ndarray]:
    if batch.n < K:
        raise ValueError(f"fewer observed nodes than clusters (n={batch.n}, K={K})")
    return top_eigenvectors(sample_covariance(batch), K)


def detect(batch: SignalBatch, K: int, delta: float, cfg: KMeansConfig | None = None) -> DetectorVerdict:
    """Declare T0 when the K-means score of the top-K sample-covariance eigenvectors is below delta."""
    if K < 2:
        raise ValueError("the K-means score detector needs K >= 2")
    if batch.M < K:
        raise ValueError(f"need at least K={K} samples, got M={batch.M}")
    if not delta > 0:
        raise ValueError(f"threshold must be positive, got {delta}")
    cfg = cfg or KMeansConfig(K=K)
    if cfg.K != K:
        raise ValueError(f"KMeansConfig.K={cfg.K} does not match K={K}")
    w, Q = covariance_top_k(batch, K)
    score = kmeans_score(Q, cfg).score
    verdict = Hypothesis.T0 if score < delta else Hypothesis.T1
    return DetectorVerdict(score, float(delta), verdict, w, batch.n, batch.M, K)


def auroc(scores_T1, scores_T0) -> float:
    """P(score_T1 > score_T0) over all pairs, ties counting one half."""
    a = np.asarray(scores_T1, dtype=float).ravel()
    b = np.asarray(scores_T0, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("both score lists must be non-empty")
    b = np.sort(b)
    below = np.searchsorted(b, a, side="left")
    ties = np.searchsorted(b, a, side="right") - below
    return float((below + 0.5 * ties).sum() / (a.size * b.size))
