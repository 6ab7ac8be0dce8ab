import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from powerroute.network import generate_grid  # noqa: E402
from powerroute.powertrain import CycleSpeeds, EnergyPrices, builtin_fleet  # noqa: E402

# Acceptance city: 19 x 19 grid, one-mile blocks, low/avg/heavy = 0.3/0.5/0.2.
CITY_ARGS = dict(rows=19, cols=19, spacing=1.0, traffic_weights=(0.3, 0.5, 0.2), seed=7)

ACCEPTANCE_RESULTS: list[str] = []


@pytest.fixture(scope="session")
def fleet():
    return {v.name: v for v in builtin_fleet()}


@pytest.fixture(scope="session")
def prices():
    return EnergyPrices()


@pytest.fixture(scope="session")
def speeds():
    return CycleSpeeds()


@pytest.fixture(scope="session")
def city():
    return generate_grid(**CITY_ARGS)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
