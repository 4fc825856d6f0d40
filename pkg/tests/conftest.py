import warnings

import numpy as np
import pytest

from lowpass_detect.graph_core import (
    BlockModelParams,
    DensityWarning,
    normalized_laplacian,
    sbm_sample,
    spectral_decompose,
)


@pytest.fixture(autouse=True)
def _quiet_density():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DensityWarning)
        yield


@pytest.fixture
def paper_params():
    return BlockModelParams.log_scaled(150, 3, 1.0, 4.0)


@pytest.fixture
def sbm_basis(paper_params):
    g = sbm_sample(paper_params, seed=11)
    return g, spectral_decompose(normalized_laplacian(g))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record a one-line acceptance verdict; lines are echoed in the terminal summary."""

    def record(number: int, passed: bool, detail: str):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
