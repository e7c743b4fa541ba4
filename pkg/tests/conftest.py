import numpy as np
import pytest

from ecwitness.model import build_model, make_same_shape_dimer
from ecwitness.vibronic import diagonalize_model, thermal_weights


@pytest.fixture(scope="session")
def monomer():
    return build_model("monomer")


@pytest.fixture(scope="session")
def coherent_dimer():
    return build_model("coherent-dimer")


@pytest.fixture(scope="session")
def incoherent_dimer():
    return build_model("incoherent-dimer")


@pytest.fixture(scope="session")
def same_shape():
    return make_same_shape_dimer()


@pytest.fixture(scope="session")
def monomer_eig():
    return diagonalize_model(build_model("monomer"), n_levels=8)


@pytest.fixture(scope="session")
def cd_eig():
    return diagonalize_model(build_model("coherent-dimer"), n_levels=8)


@pytest.fixture(scope="session")
def same_shape_eig():
    return diagonalize_model(make_same_shape_dimer(), n_levels=6)


@pytest.fixture(scope="session")
def weights_273():
    def make(eig):
        return thermal_weights(eig.ground, 273.0)
    return make


@pytest.fixture(scope="session")
def t_grid_short():
    return np.linspace(0.0, 600.0, 96)
