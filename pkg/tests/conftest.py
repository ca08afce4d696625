import math

import pytest

from boltzcf import charfn, kernel

ACCEPTANCE_RESULTS = []


def record_acceptance(number, label, passed, detail=""):
    ACCEPTANCE_RESULTS.append((number, label, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, label, passed, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        suffix = f" [{detail}]" if detail else ""
        terminalreporter.write_line(f"criterion {number:>3}: {status} - {label}{suffix}")


@pytest.fixture(scope="session")
def grid():
    return charfn.RadialGrid()


@pytest.fixture(scope="session")
def unit_mass_kernel():
    """Constant kernel normalized so the total mass gamma_2 is exactly 1."""
    return kernel.constant_kernel(1.0 / (4.0 * math.pi))


@pytest.fixture(scope="session")
def singular_kernel():
    """The physical-type endpoint singularity (order 1/4 at the forward peak)."""
    return kernel.endpoint_power_kernel(1.0, 0.25, 0.0)
