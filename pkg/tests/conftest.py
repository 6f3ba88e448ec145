import numpy as np
import pytest

from seqcpm.datagen import GeneratorSpec, generate
from seqcpm.model_core import Cohort

# 8 rows, 2 predictors, no separation
SMALL_X = np.array([
    [0.5, 1.2],
    [-1.1, 0.3],
    [0.9, -0.7],
    [1.7, 0.1],
    [-0.4, -1.5],
    [0.2, 0.8],
    [-1.6, 1.9],
    [1.1, -0.2],
])
SMALL_Y = np.array([1, 0, 1, 0, 0, 1, 0, 1], dtype=float)


@pytest.fixture
def small_cohort():
    return Cohort.from_arrays(SMALL_X, SMALL_Y, ("a", "b"))


@pytest.fixture(scope="session")
def aki_like():
    """A seeded synthetic cohort in the default scenario."""
    return generate(GeneratorSpec(n=3000, seed=11))


def noisy_cohort(n, p=6, seed=0, beta=None):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    beta = np.zeros(p) if beta is None else np.asarray(beta, dtype=float)
    risk = 1 / (1 + np.exp(-(-1.5 + X @ beta)))
    y = (rng.random(n) < risk).astype(float)
    return Cohort.from_arrays(X, y)


ACCEPTANCE_LINES = {}


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion."""
    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = ACCEPTANCE_LINES.get(number, ()) + ((ok, line),)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        parts = ACCEPTANCE_LINES[number]
        ok = all(p[0] for p in parts)
        detail = "; ".join(line.split("  ", 1)[1] for _, line in parts)
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
