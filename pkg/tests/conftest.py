import numpy as np
import pytest

from src.anyon_model import builtin_model


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture(scope="session")
def surface_2d():
    return builtin_model("surface_2d")


@pytest.fixture(scope="session")
def surface_2d_x2():
    return builtin_model("surface_2d_x2")


@pytest.fixture(scope="session")
def levin_wen():
    return builtin_model("levin_wen_3d")


@pytest.fixture(scope="session")
def selfdual_4d():
    return builtin_model("selfdual_surface(4)")


@pytest.fixture(scope="session")
def surface_3d_x3():
    return builtin_model("surface_3d_x3")
