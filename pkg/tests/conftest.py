import numpy as np
import pytest

from gjrzv.model import GjrParams
from gjrzv.distributions import ErrorDist

# lines recorded by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def away_from_zero(rng, n, scale=1.0, floor=0.01):
    """Series whose |values| stay above ``floor`` (no kinks in |e|**nu terms)."""
    x = rng.standard_normal(n) * scale
    return np.where(np.abs(x) < floor, np.sign(x + 1e-300) * floor + x, x)


DISTS = {
    "normal": ErrorDist.normal(),
    "t": ErrorDist.student_t(7.0),
    "ged": ErrorDist.ged(1.4),
    "gt": ErrorDist.generalized_t(2.2, 3.0),
}


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


@pytest.fixture(params=list(DISTS))
def kind(request):
    return request.param


def params_for(kind, **kw):
    base = dict(mu=0.02, omega=0.05, alpha=0.05, phi=0.1, beta=0.85)
    base.update(kw)
    return GjrParams(**base, dist=DISTS[kind])
