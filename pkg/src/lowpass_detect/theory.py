"""Diagnostic quantities of the detector's finite-sample guarantee and empirical lemma checks.

All bounds here are evaluated numerically; nothing is proved.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .filters import FilterSpectrum
from .graph_core import SpectralBasis
from .kmeans import KMeansConfig, kmeans_score, kmeans_score_1d_exact
from .signals import ObservationMask


class DegenerateSamplingError(ValueError):
    pass


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


@dataclass
class QRMisalignment:
    R_K: np.ndarray
    norm: float
    Q_K: np.ndarray


def observed_leading_vectors(basis: SpectralBasis, spectrum: FilterSpectrum, mask: ObservationMask, K: int):
    """``U_{o,K}``: observed rows of the K eigenvectors with the largest response magnitudes."""
    return basis.eigenvectors[np.ix_(mask.observed, spectrum.order[:K])]


def qr_misalignment(
    basis: SpectralBasis, spectrum: FilterSpectrum, mask: ObservationMask, K: int
) -> QRMisalignment:
    """Factor ``U_{o,K} = c0 Q_K R_K`` with ``c0 = sqrt(n/N)`` and report ``||I - R_K||_2``."""
    n, N = mask.n, basis.N
    if n < K:
        raise DegenerateSamplingError(f"need n >= K, got n={n}, K={K}")
    U = observed_leading_vectors(basis, spectrum, mask, K)
    Q, R = np.linalg.qr(U)
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    R = s[:, None] * R
    d = np.abs(np.diag(R))
    if d.min() <= 1e-10 * max(d.max(), 1.0):
        raise DegenerateSamplingError("degenerate sampling: observed eigenvector block is rank deficient")
    R_K = R / math.sqrt(n / N)
    return QRMisalignment(R_K, float(np.linalg.norm(np.eye(K) - R_K, 2)), Q * s)


def spectral_gap_rho(C_bar_o: np.ndarray, C_hat_o: np.ndarray, K: int) -> float:
    """Gap between the K-th and (K+1)-th largest eigenvalues of ``C_bar_o`` minus ``||C_hat_o - C_bar_o||_2``."""
    if C_bar_o.shape != C_hat_o.shape:
        raise ValueError("covariance matrices differ in shape")
    n = C_bar_o.shape[0]
    if not n > K:
        raise ValueError(f"need n > K, got n={n}, K={K}")
    lam = np.linalg.eigvalsh(C_bar_o)  # ascending
    gap = lam[n - K] - lam[n - K - 1]
    return float(gap - np.linalg.norm(C_hat_o - C_bar_o, 2))


def required_samples(sigma_tilde: float, c1: float, trace_noiseless: float) -> int | None:
    """Smallest integer M >= 2 with ``sqrt(M / log M) >= sqrt(2) c1 tr / sigma_tilde``."""
    if not sigma_tilde > 0:
        return None
    target = math.sqrt(2) * c1 * trace_noiseless / sigma_tilde

    def ok(M):
        return math.sqrt(M / math.log(M)) >= target

    # M / log M dips between 2 and 3 and is increasing from 3 on
    if ok(2):
        return 2
    lo, hi = 3, 4
    if ok(lo):
        return lo
    while not ok(hi):
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class TheoremReport:
    rho_gap: float
    delta_min_tilde: float
    sigma_tilde: float
    required_M: int | str
    c1: float
    c_sbm_estimate: float
    r_k_norm: float
    trace_noiseless: float
    eta: float
    gamma: float
    feasible: bool

    def to_dict(self) -> dict:
        return {k: _jsonable(v) for k, v in asdict(self).items()}


def lemma1_bound(N: int, K: int, p: float) -> float:
    """``2450 K^3 log N / (p (N - K))``."""
    return 2450 * K**3 * math.log(N) / (p * (N - K))


def lemma3_bound(N: int, K: int, p: float) -> float:
    """``1225 K^3 log N / (p (N - K))``."""
    return 1225 * K**3 * math.log(N) / (p * (N - K))


def lemma4_bound(N: int, K: int, p: float) -> float:
    """``35 sqrt(K^3 log N) / sqrt(p (N - K))``."""
    return 35 * math.sqrt(K**3 * math.log(N)) / math.sqrt(p * (N - K))


def theorem_report(
    delta: float,
    N: int,
    n: int,
    K: int,
    p: float,
    c_sbm: float,
    rho_gap: float,
    r_k_norm: float,
    gamma: float,
    eta: float,
    noise_var: float,
    c1: float,
    trace_noiseless: float,
) -> TheoremReport:
    if p <= 0 or K <= 0 or N - K <= 0:
        raise ValueError(f"need p > 0, K > 0 and N > K; got p={p}, K={K}, N={N}")
    if c1 <= 0:
        raise ValueError(f"c1 must be positive, got {c1}")
    scale = math.sqrt(N / n)
    upper = delta - scale * math.sqrt(lemma3_bound(N, K, p))
    radicand = c_sbm - lemma1_bound(N, K, p)
    lower = scale * math.sqrt(radicand) - delta if radicand >= 0 else -math.inf
    delta_min = min(upper, lower)
    sqrtK = math.sqrt(K)
    if math.isfinite(delta_min):
        sigma_tilde = rho_gap * (delta_min - sqrtK * (r_k_norm + 6 * gamma * eta)) / (2 * sqrtK) - noise_var
    else:
        sigma_tilde = -math.inf
    feasible = delta_min > 0 and sigma_tilde > 0
    M_req = required_samples(sigma_tilde, c1, trace_noiseless) if feasible else None
    return TheoremReport(
        rho_gap=rho_gap,
        delta_min_tilde=delta_min,
        sigma_tilde=sigma_tilde,
        required_M=M_req if M_req is not None else "infeasible",
        c1=c1,
        c_sbm_estimate=c_sbm,
        r_k_norm=r_k_norm,
        trace_noiseless=trace_noiseless,
        eta=eta,
        gamma=gamma,
        feasible=feasible,
    )


def bulk_scores(basis: SpectralBasis, K: int) -> np.ndarray:
    """Exact 1-D K-means score of every bulk eigenvector ``v_{K+1}, ..., v_N``."""
    V = basis.eigenvectors
    return np.array([kmeans_score_1d_exact(V[:, l], K) for l in range(K, basis.N)])


def estimate_c_sbm(basis: SpectralBasis, K: int) -> float:
    if not basis.N > K:
        raise ValueError(f"need N > K, got N={basis.N}, K={K}")
    return float(bulk_scores(basis, K).min())


@dataclass
class MisalignmentReport:
    procrustes_distance: float
    lemma4_bound: float
    holds: bool
    O_K: np.ndarray

    def to_dict(self) -> dict:
        return {k: _jsonable(v) for k, v in asdict(self).items()}


def procrustes_misalignment(V_K: np.ndarray, V_pop_K: np.ndarray, p: float | None = None) -> MisalignmentReport:
    """``min_O ||V_K - V_pop_K O||_F`` over orthogonal O, via the SVD of ``V_pop_K^T V_K``."""
    V_K = np.asarray(V_K, dtype=float)
    V_pop_K = np.asarray(V_pop_K, dtype=float)
    if V_K.shape != V_pop_K.shape:
        raise ValueError(f"shape mismatch: {V_K.shape} vs {V_pop_K.shape}")
    U, _, Wt = np.linalg.svd(V_pop_K.T @ V_K)
    O = U @ Wt
    dist = float(np.linalg.norm(V_K - V_pop_K @ O))
    N, K = V_K.shape
    bound = lemma4_bound(N, K, p) if p is not None else math.inf
    return MisalignmentReport(dist, bound, dist <= bound, O)


@dataclass
class LemmaCheck:
    lhs: float
    bound: float
    holds: bool


def lemma1_check(
    basis: SpectralBasis,
    spectrum: FilterSpectrum,
    mask: ObservationMask,
    K: int,
    p: float,
    cfg: KMeansConfig | None = None,
) -> LemmaCheck:
    """``|K*(U_{o,K}) - K*(U_K)|`` (heuristic scores) against ``2450 K^3 log N / (p (N-K))``."""
    cfg = cfg or KMeansConfig(K=K, restarts=50)
    if cfg.restarts < 50:
        raise ValueError("lemma checks use at least 50 restarts")
    U_K = basis.eigenvectors[:, spectrum.order[:K]]
    U_oK = U_K[mask.observed]
    if mask.n == basis.N and np.array_equal(mask.observed, np.arange(basis.N)):
        lhs = 0.0
    else:
        lhs = abs(kmeans_score(U_oK, cfg).score - kmeans_score(U_K, cfg).score)
    bound = lemma1_bound(basis.N, K, p)
    return LemmaCheck(lhs, bound, lhs <= bound)


def lemma3_check(basis: SpectralBasis, K: int, p: float, cfg: KMeansConfig | None = None) -> LemmaCheck:
    """K-means score of the K bottom eigenvectors against ``1225 K^3 log N / (p (N-K))``.

    The heuristic score upper-bounds the exact one, so ``holds`` is conservative.
    """
    cfg = cfg or KMeansConfig(K=K, restarts=50)
    lhs = kmeans_score(basis.eigenvectors[:, :K], cfg).score
    bound = lemma3_bound(basis.N, K, p)
    return LemmaCheck(lhs, bound, lhs <= bound)
