"""Shared fixtures: the desk-scale model every closed form is checked on."""

import numpy as np
import pytest

from qdetect import AllToAllModel, SiteWindow, special_state, uniform_state


@pytest.fixture(scope="session")
def window6() -> SiteWindow:
    return SiteWindow(6, 3)


@pytest.fixture(scope="session")
def model6() -> AllToAllModel:
    return AllToAllModel(6, 1.0)


@pytest.fixture(scope="session")
def star6(window6):
    return special_state(window6)


@pytest.fixture(scope="session")
def uniform6():
    return uniform_state(6)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260808)
