"""Stochastic block model graphs, normalized Laplacians and spectral bases."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import connected_components


class GraphError(ValueError):
    """Raised for invalid graph parameters or unusable graphs."""


class DensityWarning(UserWarning):
    pass


def block_sizes(N: int, K: int) -> list[int]:
    # first N mod K blocks get one extra node
    base, extra = divmod(N, K)
    return [base + 1 if k < extra else base for k in range(K)]


@dataclass(frozen=True)
class BlockModelParams:
    """Parameters of SBM(N, K, r, p) with connectivity ``B = p I + r 11^T``."""

    N: int
    K: int
    r: float
    p: float

    def __post_init__(self):
        if self.N < 1:
            raise GraphError(f"N must be positive, got {self.N}")
        if self.K < 2:
            raise GraphError(f"K must be at least 2, got {self.K}")
        if self.K > self.N:
            raise GraphError(f"K={self.K} exceeds N={self.N}")
        if not (0 < self.r <= self.p):
            raise GraphError(f"need p >= r > 0, got r={self.r}, p={self.p}")
        if self.p + self.r > 1:
            raise GraphError(f"p + r must not exceed 1, got {self.p + self.r}")

    @classmethod
    def log_scaled(cls, N: int, K: int, r_scale: float, p_scale: float) -> "BlockModelParams":
        """SBM(N, K, r_scale log N / N, p_scale log N / N)."""
        unit = math.log(N) / N
        return cls(N=N, K=K, r=r_scale * unit, p=p_scale * unit)

    @property
    def B(self) -> np.ndarray:
        return self.p * np.eye(self.K) + self.r * np.ones((self.K, self.K))

    @property
    def labels(self) -> np.ndarray:
        """Block index (0-based) of every node."""
        return np.repeat(np.arange(self.K), block_sizes(self.N, self.K))

    @property
    def Z(self) -> np.ndarray:
        Z = np.zeros((self.N, self.K))
        Z[np.arange(self.N), self.labels] = 1.0
        return Z

    @property
    def dense_enough(self) -> bool:
        """Whether ``p/K + r >= (32 log N + 1)/N`` holds."""
        return self.p / self.K + self.r >= (32 * math.log(self.N) + 1) / self.N

    def expected_degrees(self) -> np.ndarray:
        P = self.Z @ self.B @ self.Z.T
        return P.sum(axis=1) - np.diag(P)


@dataclass
class Graph:
    adjacency: np.ndarray
    block_labels: np.ndarray | None = None
    connected: bool = field(init=False)

    def __post_init__(self):
        A = np.asarray(self.adjacency, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise GraphError(f"adjacency must be square, got shape {A.shape}")
        if not np.array_equal(A, A.T):
            raise GraphError("adjacency must be symmetric")
        if np.any(np.diag(A) != 0):
            raise GraphError("adjacency must have a zero diagonal")
        self.adjacency = A
        self.connected = connected_components(A, directed=False)[0] == 1

    @property
    def N(self) -> int:
        return self.adjacency.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def edges(self) -> np.ndarray:
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return np.column_stack([i, j])

    def to_edgelist(self, path: str | Path) -> None:
        """Write one ``i j`` pair per line (0-based, i < j); first line is ``# N``."""
        lines = [f"# {self.N}"] + [f"{i} {j}" for i, j in self.edges()]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_edgelist(cls, path: str | Path, N: int | None = None) -> "Graph":
        pairs = []
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if N is None:
                    N = int(line[1:].split()[0])
                continue
            i, j = (int(t) for t in line.split())
            pairs.append((i, j))
        if N is None:
            N = 1 + max(max(p) for p in pairs) if pairs else 0
        A = np.zeros((N, N))
        for i, j in pairs:
            A[i, j] = A[j, i] = 1.0
        return cls(A)


def sbm_sample(params: BlockModelParams, seed=None, max_retries: int = 100) -> Graph:
    """Sample a connected graph from SBM(N, K, r, p).

    Disconnected draws (which include any draw with an isolated node) are
    rejected and redrawn, up to ``max_retries`` attempts in total.
    """
    if not params.dense_enough:
        warnings.warn(
            f"SBM({params.N}, {params.K}, {params.r:.4g}, {params.p:.4g}) is below the "
            "density level p/K + r >= (32 log N + 1)/N",
            DensityWarning,
            stacklevel=2,
        )
    rng = np.random.default_rng(seed)
    z = params.labels
    P = params.B[z[:, None], z[None, :]]
    iu = np.triu_indices(params.N, 1)
    for _ in range(max_retries):
        upper = rng.random(iu[0].size) < P[iu]
        A = np.zeros((params.N, params.N))
        A[iu] = upper
        A = A + A.T
        g = Graph(A, block_labels=z + 1)
        if g.connected and np.all(g.degrees >= 1):
            return g
    raise GraphError("generation failed: graph repeatedly disconnected")


def normalized_laplacian(g: Graph | np.ndarray) -> np.ndarray:
    """``I - D^{-1/2} A D^{-1/2}``."""
    A = g.adjacency if isinstance(g, Graph) else np.asarray(g, dtype=float)
    d = A.sum(axis=1)
    if np.any(d <= 0):
        raise GraphError(f"isolated node(s) {np.flatnonzero(d <= 0).tolist()} have zero degree")
    s = 1.0 / np.sqrt(d)
    L = np.eye(A.shape[0]) - s[:, None] * A * s[None, :]
    return (L + L.T) / 2


def population_normalized_laplacian(params: BlockModelParams) -> np.ndarray:
    """Normalized Laplacian of the expected adjacency ``Z B Z^T``."""
    Z = params.Z
    return normalized_laplacian(Z @ params.B @ Z.T)


def fix_signs(V: np.ndarray) -> np.ndarray:
    """Flip columns so that each one's largest-magnitude entry is non-negative."""
    V = np.array(V, dtype=float, copy=True)
    if V.size == 0:
        return V
    lead = np.argmax(np.abs(V), axis=0)  # first index wins ties
    signs = np.sign(V[lead, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


@dataclass
class SpectralBasis:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source: str = ""

    @property
    def N(self) -> int:
        return self.eigenvalues.size


def spectral_decompose(S: np.ndarray, source: str = "", atol: float = 1e-10) -> SpectralBasis:
    """Eigendecomposition with ascending eigenvalues and deterministic signs."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise GraphError(f"expected a square matrix, got shape {S.shape}")
    if not np.allclose(S, S.T, rtol=0, atol=atol):
        raise GraphError("matrix is not symmetric")
    w, V = np.linalg.eigh((S + S.T) / 2)
    return SpectralBasis(w, fix_signs(V), source)
