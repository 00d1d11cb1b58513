"""Shared fixtures. The expensive pipeline runs are session-scoped so the
acceptance module and the unit tests reuse the same trajectories."""
import pytest

import squidring as sq

import acceptance_report


@pytest.fixture(scope="session")
def model():
    return sq.default_model()


@pytest.fixture(scope="session")
def ramp_result(model):
    """Default lossless ramp run (978 omega_s^-1, fixed-step RK4)."""
    return sq.run_ramp(sq.RampConfig(), model)


@pytest.fixture(scope="session")
def dissipative_results(model):
    """Default two-rate damped runs, keyed by gamma."""
    return sq.run_dissipative(sq.RampConfig(), model)


@pytest.fixture(scope="session")
def full_sweep():
    """Default 201-point static-flux sweep with region refinement."""
    return sq.run_sweep(sq.SweepConfig())


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = acceptance_report.lines()
    if not lines:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
