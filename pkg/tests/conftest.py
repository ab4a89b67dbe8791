"""Shared test configuration: a hypothesis profile without per-example
deadlines (numeric cases vary a lot in runtime), a seeded RNG fixture, and
the registry the sign-off tests report through."""
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "numeric",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("numeric")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


# (number, name, passed, detail) tuples appended by test_acceptance; printed
# as a terminal section so the verdict lines survive output capture
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, ok, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(
            f"ACCEPTANCE {num:2d} {name}: {status}  [{detail}]")
