import numpy as np
import pytest

from revshell_hydro import elasticity as el
from revshell_hydro.geometry import build_meridian, tank_specs

STEEL = el.MaterialSpec(E=2e11, nu=0.3, rho=7800.0, h=0.01, yield_point=320e6)
RHO_WATER = 1000.0


@pytest.fixture(scope="session")
def tank():
    """Hemisphere, cylinder and cone, filled to z = 4."""
    return build_meridian(tank_specs(), 4.0)


@pytest.fixture(scope="session")
def steel():
    return STEEL


@pytest.fixture(scope="session")
def tank_shell(tank):
    return el.assemble_shell(tank, STEEL, 16, "b")


@pytest.fixture(scope="session")
def tank_modes(tank_shell):
    return el.dry_modes(tank_shell, 10)


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion."""
    def record(number: int, name: str, ok: bool, detail: str) -> bool:
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
