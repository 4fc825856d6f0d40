"""Filtered graph signals, partial observation, burst corruption and covariances."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .filters import FilterSpectrum
from .graph_core import SpectralBasis


class SignalError(ValueError):
    pass


@dataclass(frozen=True)
class ObservationMask:
    observed: np.ndarray  # sorted 0-based node indices
    N: int

    def __post_init__(self):
        obs = np.asarray(self.observed, dtype=int)
        if obs.ndim != 1 or obs.size == 0:
            raise SignalError("mask must observe at least one node")
        if np.unique(obs).size != obs.size:
            raise SignalError("mask contains duplicate nodes")
        if obs.min() < 0 or obs.max() >= self.N:
            raise SignalError(f"mask indices out of range for N={self.N}")
        object.__setattr__(self, "observed", obs)

    @property
    def n(self) -> int:
        return self.observed.size

    @classmethod
    def full(cls, N: int) -> "ObservationMask":
        return cls(np.arange(N), N)


def sample_mask(N: int, n: int, seed=None) -> ObservationMask:
    if not 1 <= n <= N:
        raise SignalError(f"need 1 <= n <= N, got n={n}, N={N}")
    rng = np.random.default_rng(seed)
    return ObservationMask(np.sort(rng.choice(N, size=n, replace=False)), N)


@dataclass
class SignalBatch:
    data: np.ndarray  # n x M, column m is y_{o,m}
    mask: ObservationMask
    noise_var: float
    provenance: dict[str, Any] = field(default_factory=dict)
    corruption_log: list[tuple[int, tuple[int, ...]]] = field(default_factory=list)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2 or self.data.shape[0] != self.mask.n:
            raise SignalError(f"data has shape {self.data.shape}, expected {self.mask.n} rows")
        M, n = self.M, self.n
        for m, rows in self.corruption_log:
            if not 0 <= m < M or any(not 0 <= r < n for r in rows):
                raise SignalError(f"corruption log entry ({m}, ...) out of bounds")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def M(self) -> int:
        return self.data.shape[1]

    def columns(self, idx) -> "SignalBatch":
        """Sub-batch of the given sample indices; the corruption log is re-indexed."""
        idx = np.asarray(idx, dtype=int)
        pos = {int(m): k for k, m in enumerate(idx)}
        log = [(pos[m], rows) for m, rows in self.corruption_log if m in pos]
        return replace(self, data=self.data[:, idx], corruption_log=log)

    def metadata(self) -> dict[str, Any]:
        return {
            "N": self.mask.N,
            "mask": self.mask.observed.tolist(),
            "noise_var": self.noise_var,
            "provenance": self.provenance,
            "corruption_log": [[m, list(rows)] for m, rows in self.corruption_log],
        }

    def save(self, path: str | Path) -> None:
        """CSV matrix (row = node, column = sample) plus a ``.meta.json`` sidecar."""
        path = Path(path)
        np.savetxt(path, self.data, delimiter=",", fmt="%.17g")
        Path(str(path) + ".meta.json").write_text(json.dumps(self.metadata(), indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "SignalBatch":
        path = Path(path)
        meta = json.loads(Path(str(path) + ".meta.json").read_text())
        data = np.loadtxt(path, delimiter=",", ndmin=2)
        mask = ObservationMask(np.asarray(meta["mask"], dtype=int), meta["N"])
        log = [(int(m), tuple(int(r) for r in rows)) for m, rows in meta["corruption_log"]]
        return cls(data, mask, meta["noise_var"], meta["provenance"], log)


@dataclass(frozen=True)
class CorruptionSpec:
    corrupt_fraction: float = 0.1
    m_burst: int = 10
    p_s: float = 1.0

    def __post_init__(self):
        if not 0 <= self.corrupt_fraction <= 1:
            raise SignalError(f"corrupt_fraction must lie in [0, 1], got {self.corrupt_fraction}")
        if self.m_burst < 1:
            raise SignalError(f"m_burst must be positive, got {self.m_burst}")
        if not 0 <= self.p_s <= 1:
            raise SignalError(f"p_s must lie in [0, 1], got {self.p_s}")

    def n_bursts(self, M: int) -> int:
        # small epsilon: 0.1 * 1000 / 10 must give 10, not 9
        return int(math.floor(self.corrupt_fraction * M / self.m_burst + 1e-9))


def generate_observed_batch(
    basis: SpectralBasis,
    spectrum: FilterSpectrum,
    mask: ObservationMask,
    noise_var: float,
    M: int,
    seed=None,
    provenance: dict[str, Any] | None = None,
) -> SignalBatch:
    """Draw ``y = H(S) x + w`` for M white excitations and keep the observed rows."""
    if noise_var < 0:
        raise SignalError(f"noise variance must be non-negative, got {noise_var}")
    if M < 1:
        raise SignalError(f"M must be positive, got {M}")
    N = basis.N
    if mask.N != N or spectrum.responses.size != N:
        raise SignalError(f"dimension mismatch: basis N={N}, mask N={mask.N}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((N, M))
    w = rng.standard_normal((N, M)) * math.sqrt(noise_var)
    V = basis.eigenvectors
    y = V @ (spectrum.responses[:, None] * (V.T @ x)) + w
    prov = {"seed": seed if isinstance(seed, (int, type(None))) else str(seed)}
    prov.update(provenance or {})
    return SignalBatch(y[mask.observed], mask, float(noise_var), prov)


def _burst_starts(M: int, n_bursts: int, m_burst: int, rng: np.random.Generator) -> np.ndarray:
    # uniform over non-overlapping placements: choose gaps via a sorted combination
    slots = M - n_bursts * (m_burst - 1)
    if n_bursts == 0:
        return np.zeros(0, dtype=int)
    if slots < n_bursts:
        raise SignalError(
            f"cannot place {n_bursts} non-overlapping bursts of length {m_burst} in {M} samples"
        )
    c = np.sort(rng.choice(slots, size=n_bursts, replace=False))
    return c + np.arange(n_bursts) * (m_burst - 1)


def corrupt_batch(batch: SignalBatch, corruption: CorruptionSpec, seed=None) -> SignalBatch:
    """Replace random observed nodes with N(0, 1) draws during randomly placed bursts.

    Each burst picks one node subset of size ``ceil(p_s * n)`` and corrupts it
    for all of its ``m_burst`` consecutive samples.
    """
    M, n = batch.M, batch.n
    if M < corruption.m_burst:
        raise SignalError(f"M={M} is shorter than one burst ({corruption.m_burst})")
    rng = np.random.default_rng(seed)
    starts = _burst_starts(M, corruption.n_bursts(M), corruption.m_burst, rng)
    k = int(math.ceil(corruption.p_s * n - 1e-9))
    data = batch.data.copy()
    log = list(batch.corruption_log)
    for s in starts:
        rows = np.sort(rng.choice(n, size=k, replace=False))
        cols = np.arange(s, s + corruption.m_burst)
        data[np.ix_(rows, cols)] = rng.standard_normal((k, corruption.m_burst))
        log.extend((int(m), tuple(int(r) for r in rows)) for m in cols)
    prov = dict(batch.provenance)
    prov["corruption"] = {
        "corrupt_fraction": corruption.corrupt_fraction,
        "m_burst": corruption.m_burst,
        "p_s": corruption.p_s,
        "burst_starts": starts.tolist(),
    }
    return replace(batch, data=data, provenance=prov, corruption_log=log)


def sample_covariance(batch: SignalBatch | np.ndarray) -> np.ndarray:
    """Raw second moment ``(1/M) sum_m y_m y_m^T`` (no centering)."""
    Y = batch.data if isinstance(batch, SignalBatch) else np.asarray(batch, dtype=float)
    if Y.shape[1] < 1:
        raise SignalError("need at least one sample")
    C = Y @ Y.T / Y.shape[1]
    return (C + C.T) / 2


@dataclass
class PopulationCovariance:
    C_o: np.ndarray
    C_bar_o: np.ndarray

    @property
    def trace_noiseless(self) -> float:
        return float(np.trace(self.C_bar_o))


def population_observed_covariance(
    basis: SpectralBasis, spectrum: FilterSpectrum, mask: ObservationMask, noise_var: float
) -> PopulationCovariance:
    """``C_o = V_o h^2 V_o^T + sigma^2 I`` and its noiseless part."""
    Vo = basis.eigenvectors[mask.observed]
    C_bar = (Vo * spectrum.responses**2) @ Vo.T
    C_bar = (C_bar + C_bar.T) / 2
    return PopulationCovariance(C_bar + noise_var * np.eye(mask.n), C_bar)
