import math

import numpy as np
import pytest

from qbb import imaging_model, phase_dephasing_model, planar_model


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_hermitian(rng, n, scale=1.0):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (g + g.conj().T)


def random_state(rng, n, rank=None):
    rank = rank or n
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    r = g @ g.conj().T
    return r / np.trace(r).real


def builtin_models():
    """The three built-in families at the parameter points used throughout the tests."""
    return {
        "imaging": imaging_model(2, 4, math.sqrt(2)),
        "phase-dephasing": phase_dephasing_model(1, math.pi / 2, 5.0),
        "planar": planar_model(math.sqrt(0.5), math.sqrt(0.5), 0.5),
    }


# filled by test_acceptance; echoed once at the end of the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
