import numpy as np
import pytest
from hypothesis import settings

from heave.simulation import ProcessSpec, make_ground_truth
from heave.var import TimeSeriesPanel

settings.register_profile("default", max_examples=60, deadline=None)
settings.register_profile("fast", max_examples=10, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


@pytest.fixture(scope="session")
def small_truth():
    return make_ground_truth(ProcessSpec(8, edge_prob=0.4, t_steps=400, seed=11))


def simulate_var(a, t, rng, burn=100):
    """Plain VAR(1) with unit Gaussian noise, for estimator checks."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    e = rng.standard_normal((t + burn, n))
    y = np.zeros((t + burn, n))
    for k in range(1, t + burn):
        y[k] = a @ y[k - 1] + e[k]
    return TimeSeriesPanel(y[burn:])
