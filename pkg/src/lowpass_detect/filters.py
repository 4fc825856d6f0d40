"""Graph filter frequency responses and low-pass metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .graph_core import SpectralBasis

# magnitudes closer than this (relative to the largest one) count as tied
TIE_RTOL = 1e-12


class FilterError(ValueError):
    pass


@dataclass(frozen=True)
class Polynomial:
    coefficients: tuple[float, ...]

    def __post_init__(self):
        if len(self.coefficients) == 0:
            raise FilterError("polynomial needs at least one coefficient")
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))

    def __call__(self, lam):
        # Horner
        lam = np.asarray(lam, dtype=float)
        out = np.zeros_like(lam)
        for c in reversed(self.coefficients):
            out = out * lam + c
        return out

    def describe(self) -> dict[str, Any]:
        return {"kind": "poly", "coefficients": list(self.coefficients)}


@dataclass(frozen=True)
class HeatDiffusion:
    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise FilterError(f"tau must be positive, got {self.tau}")

    def __call__(self, lam):
        return np.exp(-self.tau * np.asarray(lam, dtype=float))

    def describe(self) -> dict[str, Any]:
        return {"kind": "heat", "tau": self.tau}


@dataclass(frozen=True)
class InverseHeat:
    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise FilterError(f"tau must be positive, got {self.tau}")

    def __call__(self, lam):
        return np.exp(self.tau * np.asarray(lam, dtype=float))

    def describe(self) -> dict[str, Any]:
        return {"kind": "inverse_heat", "tau": self.tau}


@dataclass(frozen=True)
class PowerLowPass:
    """``(1 - a*lam)^T``, e.g. ``(I - 0.5 L)^3`` for a=0.5, T=3."""

    a: float
    T: int

    def __post_init__(self):
        if self.T < 1:
            raise FilterError(f"T must be a positive integer, got {self.T}")

    def __call__(self, lam):
        return (1.0 - self.a * np.asarray(lam, dtype=float)) ** self.T

    def describe(self) -> dict[str, Any]:
        return {"kind": "power", "a": self.a, "T": self.T}


FrequencyResponse = Polynomial | HeatDiffusion | InverseHeat | PowerLowPass


def response_from_config(cfg: dict[str, Any]) -> FrequencyResponse:
    """Build a response from ``{"kind": "heat"|"inverse_heat"|"poly"|"power", ...}``."""
    params = dict(cfg)
    kind = params.pop("kind", None)
    try:
        if kind == "heat":
            return HeatDiffusion(float(params["tau"]))
        if kind == "inverse_heat":
            return InverseHeat(float(params["tau"]))
        if kind == "poly":
            return Polynomial(tuple(params["coefficients"]))
        if kind == "power":
            return PowerLowPass(float(params["a"]), int(params["T"]))
    except KeyError as exc:
        raise FilterError(f"filter kind {kind!r} is missing parameter {exc.args[0]!r}") from None
    raise FilterError(f"unknown filter kind {kind!r}")


@dataclass
class FilterSpectrum:
    responses: np.ndarray  # h(lambda_i), ascending eigenvalue order
    order: np.ndarray  # pi (0-based): responses[order] has non-increasing magnitude
    distinct: bool

    @property
    def sorted_responses(self) -> np.ndarray:
        """``h_1, ..., h_N`` in descending magnitude."""
        return self.responses[self.order]


def magnitude_order(responses: np.ndarray) -> np.ndarray:
    mag = np.abs(responses)
    # stable sort: equal magnitudes keep ascending eigenvalue index
    return np.argsort(-mag, kind="stable")


def _all_distinct(responses: np.ndarray) -> bool:
    mag = np.sort(np.abs(responses))
    if mag.size < 2:
        return True
    scale = max(mag[-1], np.finfo(float).tiny)
    return bool(np.all(np.diff(mag) > TIE_RTOL * scale))


def evaluate_response(fr: FrequencyResponse, basis: SpectralBasis) -> FilterSpectrum:
    h = np.asarray(fr(basis.eigenvalues), dtype=float)
    return FilterSpectrum(h, magnitude_order(h), _all_distinct(h))


def spectrum_from_responses(responses) -> FilterSpectrum:
    h = np.asarray(responses, dtype=float)
    return FilterSpectrum(h, magnitude_order(h), _all_distinct(h))


def filter_matrix(basis: SpectralBasis, spectrum: FilterSpectrum) -> np.ndarray:
    V = basis.eigenvectors
    return (V * spectrum.responses) @ V.T


def apply_filter(basis: SpectralBasis, spectrum: FilterSpectrum, X: np.ndarray) -> np.ndarray:
    """Compute ``V diag(h) V^T X``."""
    V = basis.eigenvectors
    X = np.asarray(X, dtype=float)
    if X.shape[0] != V.shape[0] or spectrum.responses.size != V.shape[1]:
        raise FilterError(
            f"dimension mismatch: basis is {V.shape}, responses {spectrum.responses.size}, "
            f"signal {X.shape}"
        )
    if X.ndim == 1:
        return V @ (spectrum.responses * (V.T @ X))
    return V @ (spectrum.responses[:, None] * (V.T @ X))


def apply_polynomial(S: np.ndarray, coefficients, X: np.ndarray) -> np.ndarray:
    """``sum_t h_t S^t X`` by Horner's rule, without any eigendecomposition."""
    X = np.asarray(X, dtype=float)
    out = np.zeros_like(X)
    for c in reversed(list(coefficients)):
        out = S @ out + c * X
    return out


@dataclass(frozen=True)
class LowPassMetrics:
    eta_K: float
    eta: float
    gamma: float
    is_K_low_pass: bool


def low_pass_metrics(spectrum: FilterSpectrum, K: int) -> LowPassMetrics:
    """Sharpness ``eta_K`` (eigenvalue-aligned), ``eta`` and flatness ``gamma`` (magnitude-sorted)."""
    h = spectrum.responses
    N = h.size
    if not 1 <= K < N:
        raise FilterError(f"need 1 <= K < N, got K={K}, N={N}")
    if not spectrum.distinct:
        raise FilterError("ambiguous ordering: frequency response magnitudes are not distinct")
    mag = np.abs(h)
    with np.errstate(divide="ignore"):
        eta_K = float(mag[K:].max() / mag[:K].min())
        hs = np.abs(spectrum.sorted_responses)
        eta = float(hs[K:].max() / hs[:K].min())
        gamma = float(hs[:K].max() ** 2 / hs[:K].min() ** 2)
    return LowPassMetrics(eta_K, eta, gamma, eta_K < 1)
