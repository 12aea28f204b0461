import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hawkes_lab import Exponential, HawkesSpec, PriceModelSpec, two_state_chain

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_ergodic(rng, n):
    """Dense transition matrix with strictly positive entries."""
    P = rng.dirichlet(np.ones(n), size=n)
    return P


@pytest.fixture
def reference_model():
    """Symmetric +-1 marks on a lambda=1, Exp(0.5, 1) Hawkes process."""
    return PriceModelSpec(100.0, HawkesSpec(1.0, Exponential(0.5, 1.0)), two_state_chain(0.5, 0.5, 1.0))


_ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance(request):
    """Record a one-line verdict for an acceptance criterion.

    Lines are echoed at the end of the run, so they appear even with
    output capture on.
    """
    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(_ACCEPTANCE_LINES[k])
