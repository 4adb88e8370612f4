import shutil
from pathlib import Path

import pytest

from nextrelease.features import parse_feature_file
from nextrelease.scenarios import parse_scenario_spec

DATA = Path(__file__).parent / "data"
CORPUS = Path(__file__).parents[1] / "demos" / "smart_charging"

ACCEPTANCE_LINES = []


@pytest.fixture
def charging_text():
    return (DATA / "charging_plan.scn").read_text()


@pytest.fixture
def charging(charging_text):
    return parse_scenario_spec(charging_text)


@pytest.fixture
def umc_spec():
    return parse_feature_file((DATA / "umc.feature").read_text())


@pytest.fixture
def project(tmp_path):
    """Fresh copy of the smart-charging corpus without earlier outputs."""
    dst = tmp_path / "smart_charging"
    shutil.copytree(CORPUS, dst, ignore=shutil.ignore_patterns("out", "*.steps"))
    return dst


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
