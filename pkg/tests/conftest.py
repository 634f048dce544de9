import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from critgs.asymptotics import SWEEP_TOL, sweep_row  # noqa: E402
from critgs.domain import ProblemParams  # noqa: E402
from critgs.radial_ode import shoot  # noqa: E402
from critgs.rescale import rescale  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SWEEP_OMEGAS = (10.0, 1e2, 1e3, 1e4)

# filled by test_acceptance, printed at the end of the run
ACCEPTANCE: dict = {}


@pytest.fixture(scope="session")
def gs_521():
    """Ground state for d=5, p=2, ω=1."""
    return shoot(ProblemParams(5, 2.0, 1.0))


@pytest.fixture(scope="session")
def state_521(gs_521):
    return rescale(gs_521)


@pytest.fixture(scope="session")
def sweep_521():
    """(row, rescaled state) for each sweep ω at the sweep tolerance."""
    return {w: sweep_row(ProblemParams(5, 2.0, w), SWEEP_TOL) for w in SWEEP_OMEGAS}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int("".join(c for c in k if c.isdigit())), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}")
