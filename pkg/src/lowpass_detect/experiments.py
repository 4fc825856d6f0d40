"""Seeded Monte-Carlo experiment runner and result tables."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import __version__
from .community import adjusted_rand_index, blind_cd, prescreen
from .detector import auroc, detect
from .filters import HeatDiffusion, InverseHeat, evaluate_response, low_pass_metrics, response_from_config
from .graph_core import (
    BlockModelParams,
    DensityWarning,
    normalized_laplacian,
    population_normalized_laplacian,
    sbm_sample,
    spectral_decompose,
)
from .kmeans import KMeansConfig
from .signals import (
    CorruptionSpec,
    corrupt_batch,
    generate_observed_batch,
    population_observed_covariance,
    sample_covariance,
    sample_mask,
)
from .theory import (
    estimate_c_sbm,
    lemma1_check,
    lemma3_check,
    procrustes_misalignment,
    qr_misalignment,
    spectral_gap_rho,
    theorem_report,
)

COLUMNS = {
    "detect-lp": ["grid_var", "value", "tau", "trials", "auroc"],
    "blind-cd": ["grid_var", "value", "arm", "ari_mean", "ari_std"],
    "rk-norm": ["K", "n", "norm_mean", "norm_std"],
}
GRID_VARS = {"detect-lp": {"n", "M"}, "blind-cd": {"n", "p_s"}, "rk-norm": {"n"}}
ARMS = ("clean", "corrupted", "prescreened")


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GraphConfig(_Strict):
    N: int = Field(150, ge=2)
    K: int = Field(3, ge=2)
    r: float | None = Field(None, gt=0, le=1)
    p: float | None = Field(None, gt=0, le=1)
    # used when r / p are not given: r = r_scale * log(N) / N
    r_scale: float = Field(1.0, gt=0)
    p_scale: float = Field(4.0, gt=0)

    def params(self, K: int | None = None) -> BlockModelParams:
        unit = math.log(self.N) / self.N
        r = self.r if self.r is not None else self.r_scale * unit
        p = self.p if self.p is not None else self.p_scale * unit
        return BlockModelParams(self.N, K or self.K, r, p)


class DetectorConfig(_Strict):
    delta: float = Field(0.5, gt=0)
    restarts: int = Field(20, ge=1)
    max_iterations: int = Field(300, ge=1)
    tolerance: float = Field(1e-9, ge=0)
    seeding: Literal["careful", "uniform"] = "careful"

    def kmeans(self, K: int, seed: int) -> KMeansConfig:
        return KMeansConfig(K, self.restarts, self.max_iterations, self.tolerance, seed, self.seeding)


class CorruptionConfig(_Strict):
    corrupt_fraction: float = Field(0.1, ge=0, le=1)
    m_burst: int = Field(10, ge=1)
    p_s: float = Field(1.0, ge=0, le=1)


class GridConfig(_Strict):
    var: Literal["n", "M", "p_s"]
    values: list[float] = Field(min_length=1)


class OutputConfig(_Strict):
    path: str = "results.csv"
    format: Literal["csv", "json"] = "csv"


class ExperimentConfig(_Strict):
    kind: Literal["detect-lp", "blind-cd", "rk-norm"]
    graph: GraphConfig = GraphConfig()
    filter: dict[str, Any] | None = None
    taus: list[float] | None = None
    tau_target_eta: float | None = Field(None, gt=0, lt=1)
    tau_graphs: int = Field(50, ge=1)
    noise_var: float = Field(1e-2, ge=0)
    n: int = Field(100, ge=1)
    M: int = Field(100, ge=1)
    grid: GridConfig
    K_grid: list[int] | None = None
    trials: int = Field(100, ge=1)
    master_seed: int = 0
    workers: int = Field(1, ge=1)
    detector: DetectorConfig = DetectorConfig()
    corruption: CorruptionConfig = CorruptionConfig()
    batch_size: int = Field(50, ge=1)
    output: OutputConfig = OutputConfig()

    @field_validator("taus")
    @classmethod
    def _positive_taus(cls, v):
        if v is not None:
            if not v:
                raise ValueError("tau grid must be non-empty")
            if any(t <= 0 for t in v):
                raise ValueError("tau must be positive (tau = 0 makes both filters the identity)")
        return v

    @field_validator("K_grid")
    @classmethod
    def _valid_K_grid(cls, v):
        if v is not None and (not v or any(k < 2 for k in v)):
            raise ValueError("K grid must be non-empty with every K >= 2")
        return v

    @model_validator(mode="after")
    def _check_kind(self):
        if self.grid.var not in GRID_VARS[self.kind]:
            raise ValueError(f"grid.var {self.grid.var!r} is not valid for kind {self.kind!r}")
        if self.kind == "detect-lp" and self.taus is None and self.tau_target_eta is None:
            raise ValueError("detect-lp needs 'taus' or 'tau_target_eta'")
        if self.filter is not None:
            response_from_config(self.filter)
        return self

    def grid_values(self) -> list[int | float]:
        if self.grid.var == "p_s":
            return [float(v) for v in self.grid.values]
        if any(v != int(v) or v < 1 for v in self.grid.values):
            raise ConfigError(f"grid.values: {self.grid.var} values must be positive integers")
        return [int(v) for v in self.grid.values]


def _format_validation_error(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "invalid config:\n  " + "\n  ".join(lines)


def parse_config(data: dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_format_validation_error(err)) from None


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a YAML (or JSON) experiment config."""
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping at top level")
    return parse_config(data)


def trial_seed(master_seed: int, kind: str, point: tuple, trial: int) -> np.random.SeedSequence:
    """Seed for one trial, stable under changes to the rest of the grid."""
    key = json.dumps([kind, [float(x) if isinstance(x, (int, float)) else x for x in point], trial])
    digest = hashlib.blake2b(key.encode(), digest_size=16).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.SeedSequence([master_seed & 0xFFFFFFFF, *words])


def _int_seed(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


def _graph_basis(params: BlockModelParams, seed):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DensityWarning)
        g = sbm_sample(params, seed)
    return g, spectral_decompose(normalized_laplacian(g), source="L_norm")


def tau_for_sharpness(
    params: BlockModelParams, target_eta: float, n_graphs: int = 50, seed: int = 0, tol: float = 1e-6
) -> float:
    """Smallest heat-filter tau whose median measured sharpness over sampled graphs is <= target."""
    ss = np.random.SeedSequence([seed & 0xFFFFFFFF, 0x7A5])
    bases = [_graph_basis(params, s)[1] for s in ss.spawn(n_graphs)]

    def median_eta(tau):
        return float(np.median([low_pass_metrics(evaluate_response(HeatDiffusion(tau), b), params.K).eta for b in bases]))

    lo, hi = 0.0, 1.0
    while median_eta(hi) > target_eta:
        lo, hi = hi, 2 * hi
        if hi > 1e4:
            raise ConfigError("no tau reaches the requested sharpness")
    while hi - lo > tol * hi:
        mid = (lo + hi) / 2
        if median_eta(mid) <= target_eta:
            hi = mid
        else:
            lo = mid
    return hi


# ---- per-trial workers (module level so they pickle) ----


def _detect_lp_trial(args):
    params, tau, n, M, noise_var, det, ss = args
    s_graph, s_mask, s_t0, s_t1, s_km = ss.spawn(5)
    _, basis = _graph_basis(params, s_graph)
    mask = sample_mask(params.N, n, s_mask)
    km = det.kmeans(params.K, _int_seed(s_km))
    scores = []
    for fr, s in ((HeatDiffusion(tau), s_t0), (InverseHeat(tau), s_t1)):
        batch = generate_observed_batch(basis, evaluate_response(fr, basis), mask, noise_var, M, s)
        scores.append(detect(batch, params.K, det.delta, km).score)
    return tuple(scores)


def _blind_cd_trial(args):
    params, response, n, M, noise_var, det, corruption, batch_size, ss = args
    s_graph, s_mask, s_sig, s_cor, s_km = ss.spawn(5)
    g, basis = _graph_basis(params, s_graph)
    mask = sample_mask(params.N, n, s_mask)
    truth = g.block_labels[mask.observed]
    km = det.kmeans(params.K, _int_seed(s_km))
    clean = generate_observed_batch(basis, evaluate_response(response, basis), mask, noise_var, M, s_sig)
    corrupted = corrupt_batch(clean, corruption, s_cor)
    ari_clean = adjusted_rand_index(truth, blind_cd(clean, params.K, km).labels)
    ari_corrupt = adjusted_rand_index(truth, blind_cd(corrupted, params.K, km).labels)
    screened = prescreen(corrupted, batch_size, params.K, det.delta, km)
    if screened.retained_batch.M >= params.K:
        ari_screen = adjusted_rand_index(truth, blind_cd(screened.retained_batch, params.K, km).labels)
    else:
        # nothing retained: no clustering, scored as chance level
        ari_screen = 0.0
    return ari_clean, ari_corrupt, ari_screen


def _rk_norm_trial(args):
    params, response, n, ss = args
    s_graph, s_mask = ss.spawn(2)
    _, basis = _graph_basis(params, s_graph)
    mask = sample_mask(params.N, n, s_mask)
    return qr_misalignment(basis, evaluate_response(response, basis), mask, params.K).norm


def _map(fn, jobs, workers):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


@dataclass
class ResultsTable:
    kind: str
    columns: list[str]
    rows: list[tuple]
    metadata: dict[str, Any] = field(default_factory=dict)

    def records(self) -> list[dict[str, Any]]:
        return [dict(zip(self.columns, r)) for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"columns": self.columns, "rows": self.records(), "metadata": self.metadata}, indent=2)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def _parse_cell(s: str):
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def read_csv(path: str | Path, kind: str | None = None) -> ResultsTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        columns = next(reader)
        rows = [tuple(_parse_cell(c) for c in r) for r in reader]
    if kind is None:
        kind = next((k for k, cols in COLUMNS.items() if cols == columns), "unknown")
    meta_path = Path(str(path) + ".meta.json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    return ResultsTable(kind, columns, rows, meta)


def _r6(x: float) -> float:
    return round(float(x), 6)


def run_experiment(config: ExperimentConfig) -> ResultsTable:
    kind = config.kind
    det = config.detector
    values = config.grid_values()
    meta: dict[str, Any] = {
        "config": config.model_dump(mode="json"),
        "master_seed": config.master_seed,
        "version": __version__,
    }
    rows: list[tuple] = []

    if kind == "detect-lp":
        params = config.graph.params()
        if config.taus is not None:
            taus = list(config.taus)
        else:
            taus = [tau_for_sharpness(params, config.tau_target_eta, config.tau_graphs, config.master_seed)]
            meta["derived_tau"] = taus[0]
        for value in values:
            n = value if config.grid.var == "n" else config.n
            M = value if config.grid.var == "M" else config.M
            if n > params.N:
                raise ConfigError(f"grid.values: n={n} exceeds N={params.N}")
            for tau in taus:
                point = (config.grid.var, value, tau)
                jobs = [
                    (params, tau, n, M, config.noise_var, det, trial_seed(config.master_seed, kind, point, t))
                    for t in range(config.trials)
                ]
                scores = np.array(_map(_detect_lp_trial, jobs, config.workers))
                a = auroc(scores[:, 1], scores[:, 0])
                rows.append((config.grid.var, value, _r6(tau), config.trials, _r6(a)))

    elif kind == "blind-cd":
        params = config.graph.params()
        response = response_from_config(config.filter or {"kind": "power", "a": 0.5, "T": 3})
        for value in values:
            n = value if config.grid.var == "n" else config.n
            p_s = value if config.grid.var == "p_s" else config.corruption.p_s
            corruption = CorruptionSpec(config.corruption.corrupt_fraction, config.corruption.m_burst, p_s)
            point = (config.grid.var, value)
            jobs = [
                (params, response, n, config.M, config.noise_var, det, corruption, config.batch_size,
                 trial_seed(config.master_seed, kind, point, t))
                for t in range(config.trials)
            ]
            aris = np.array(_map(_blind_cd_trial, jobs, config.workers))
            for j, arm in enumerate(ARMS):
                rows.append((config.grid.var, value, arm, _r6(aris[:, j].mean()), _r6(aris[:, j].std())))

    else:
        response = response_from_config(config.filter or {"kind": "heat", "tau": 1.0})
        for K in config.K_grid or [config.graph.K]:
            params = config.graph.params(K)
            for n in values:
                jobs = [
                    (params, response, n, trial_seed(config.master_seed, kind, (K, n), t))
                    for t in range(config.trials)
                ]
                norms = np.array(_map(_rk_norm_trial, jobs, config.workers))
                rows.append((K, n, _r6(norms.mean()), _r6(norms.std())))

    return ResultsTable(kind, COLUMNS[kind], rows, meta)


def emit_results(table: ResultsTable, fmt: Literal["csv", "json"], path: str | Path) -> Path:
    """Write the table; CSV output gets a ``<path>.meta.json`` sidecar with the metadata."""
    if not table.rows:
        raise ValueError("refusing to write an empty results table")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            path.write_text(table.to_csv())
            Path(str(path) + ".meta.json").write_text(json.dumps(table.metadata, indent=2))
        elif fmt == "json":
            path.write_text(table.to_json())
        else:
            raise ValueError(f"unknown format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path


def instance_report(
    graph: GraphConfig,
    n: int,
    M: int,
    tau: float,
    delta: float,
    noise_var: float = 1e-2,
    c1: float = 1.0,
    seed: int = 0,
) -> dict[str, Any]:
    """Sample one graph and signal batch and evaluate every diagnostic on it."""
    params = graph.params()
    K = params.K
    s_graph, s_mask, s_sig = np.random.SeedSequence(seed).spawn(3)
    _, basis = _graph_basis(params, s_graph)
    spectrum = evaluate_response(HeatDiffusion(tau), basis)
    mask = sample_mask(params.N, n, s_mask)
    batch = generate_observed_batch(basis, spectrum, mask, noise_var, M, s_sig)
    pop = population_observed_covariance(basis, spectrum, mask, noise_var)
    metrics = low_pass_metrics(spectrum, K)
    rk = qr_misalignment(basis, spectrum, mask, K)
    report = theorem_report(
        delta=delta, N=params.N, n=n, K=K, p=params.p,
        c_sbm=estimate_c_sbm(basis, K),
        rho_gap=spectral_gap_rho(pop.C_bar_o, sample_covariance(batch), K),
        r_k_norm=rk.norm, gamma=metrics.gamma, eta=metrics.eta,
        noise_var=noise_var, c1=c1, trace_noiseless=pop.trace_noiseless,
    )
    pop_basis = spectral_decompose(population_normalized_laplacian(params))
    misalign = procrustes_misalignment(basis.eigenvectors[:, :K], pop_basis.eigenvectors[:, :K], params.p)
    l1 = lemma1_check(basis, spectrum, mask, K, params.p)
    l3 = lemma3_check(basis, K, params.p)
    verdict = detect(batch, K, delta, KMeansConfig(K=K, seed=seed))
    return {
        "theorem": report.to_dict(),
        "misalignment": misalign.to_dict(),
        "lemma1": {"lhs": l1.lhs, "bound": l1.bound, "holds": l1.holds},
        "lemma3": {"lhs": l3.lhs, "bound": l3.bound, "holds": l3.holds},
        "eta_K": metrics.eta_K,
        "detector": verdict.to_dict(),
        "density_condition": params.dense_enough,
    }
