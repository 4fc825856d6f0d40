"""Blind detection of low-pass graph signals from partial observations."""

__version__ = "0.1.0"

from .community import adjusted_rand_index, blind_cd, prescreen
from .detector import DetectorVerdict, Hypothesis, auroc, detect
from .filters import (
    HeatDiffusion,
    InverseHeat,
    Polynomial,
    PowerLowPass,
    apply_filter,
    evaluate_response,
    low_pass_metrics,
)
from .graph_core import (
    BlockModelParams,
    Graph,
    SpectralBasis,
    normalized_laplacian,
    population_normalized_laplacian,
    sbm_sample,
    spectral_decompose,
)
from .kmeans import KMeansConfig, kmeans_score, kmeans_score_1d_exact, kmeans_score_exact
from .signals import (
    CorruptionSpec,
    ObservationMask,
    SignalBatch,
    corrupt_batch,
    generate_observed_batch,
    population_observed_covariance,
    sample_covariance,
    sample_mask,
)
