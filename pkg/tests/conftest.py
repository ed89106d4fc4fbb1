import numpy as np
import pytest

from dyadlab import GridFunction, random_sparse, random_weight


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_positive(depth, rng, log2_range=4.0):
    return GridFunction(2.0 ** rng.uniform(-log2_range, log2_range, 1 << depth))


def random_triple(depth, rng):
    """A sparse family, two independent weights and a positive function."""
    S = random_sparse(depth, seed=rng)
    return S, random_weight(depth, rng), random_weight(depth, rng), random_positive(depth, rng)


ACCEPTANCE_LINES = {}


@pytest.fixture
def report_criterion():
    """Record and print one pass/fail line for an acceptance criterion."""

    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
