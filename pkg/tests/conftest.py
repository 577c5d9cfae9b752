import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from cqlqg.core.fileio import fixture_path, load_controller, load_plant


@pytest.fixture(scope="session")
def plant8():
    return load_plant(fixture_path("example8.plant"))


@pytest.fixture(scope="session")
def plant9():
    return load_plant(fixture_path("example9.plant"))


@pytest.fixture(scope="session")
def plant10():
    return load_plant(fixture_path("example10.plant"))


@pytest.fixture(scope="session")
def u8(plant8):
    return load_controller(fixture_path("example8_opt.controller"), plant8)


@pytest.fixture(scope="session")
def u9(plant9):
    return load_controller(fixture_path("example9_opt.controller"), plant9)


@pytest.fixture(scope="session")
def u10(plant10):
    return load_controller(fixture_path("example10_opt.controller"), plant10)


@pytest.fixture(scope="session")
def examples(plant8, u8, plant10, u10):
    """The two-mode examples with their optimal controllers"""
    return {"example8": (plant8, u8), "example10": (plant10, u10)}


@pytest.fixture
def rng():
    return np.random.default_rng(20121018)
