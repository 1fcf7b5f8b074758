import numpy as np
import pytest

from etwadc.pipeline import Study
from etwadc.scenario import load_scenario

from helpers import ACCEPTANCE, SCENARIOS


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        tr.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


def _study(tmp_path_factory, name):
    sc = load_scenario(SCENARIOS / f"{name}.yaml")
    study = Study(sc, tmp_path_factory.mktemp(name), recompute=True)
    study.design()
    return study


@pytest.fixture(scope="session")
def two_area(tmp_path_factory):
    """Two-area study with every stage up to the design written."""
    return _study(tmp_path_factory, "two_area")


@pytest.fixture(scope="session")
def ieee39(tmp_path_factory):
    return _study(tmp_path_factory, "ieee39")


@pytest.fixture(scope="session")
def two_area_design(two_area):
    return two_area.load_design()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
