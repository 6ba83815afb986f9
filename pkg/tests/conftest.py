import sys

import numpy as np
import pytest
from scipy.stats import unitary_group

SEEDS = range(100)


def haar_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    return unitary_group.rvs(d, random_state=rng)


def random_amps(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_qubit_pair(rng: np.random.Generator) -> tuple[complex, complex]:
    a, b = random_amps(rng, 2)
    return complex(a), complex(b)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
