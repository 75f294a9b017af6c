"""
Shared fixtures: the expensive objects (rho table, meshes, spaces) are built
once per session on coarse resolutions.
"""
import numpy as np
import pytest

from app.config import RunConfig
from app.deformation.coefficients import Deformation
from app.deformation.radius import ConstantRadius, TravelingWaveRadius
from app.deformation.rho import QuadratureProfile
from app.deformation.table_cache import RhoTableCache
from app.geometry.mesh import Resolution, build_reference_mesh
from app.params.models import ModelParams

COARSE = Resolution(2, 8, 1, 1)


@pytest.fixture(scope="session")
def params():
    return ModelParams()


@pytest.fixture(scope="session")
def rho_table(params):
    return RhoTableCache.get_table(params)


@pytest.fixture(scope="session")
def deformation(params, rho_table):
    return Deformation(params, rho_table)


@pytest.fixture(scope="session")
def smooth_deformation(params):
    """Quadrature-backed deformation, smooth enough for finite-difference oracles."""
    return Deformation(params, QuadratureProfile(params))


@pytest.fixture(scope="session")
def wave(params):
    """R = R0 (1 + 0.1 sin(2 pi x1 / L - 2 pi t))."""
    return TravelingWaveRadius(params.R0, 0.1, wavenumber=2.0 * np.pi / params.L,
                               frequency=2.0 * np.pi)


@pytest.fixture(scope="session")
def identity_radius(params):
    return ConstantRadius(params.R0)


@pytest.fixture(scope="session")
def coarse_mesh(params):
    return build_reference_mesh(params, COARSE)


@pytest.fixture(scope="session")
def default_mesh(params):
    return build_reference_mesh(params, Resolution())


@pytest.fixture
def small_config():
    """Two coarse steps of the default model."""
    return RunConfig(resolution="2,8,1,1", T_final=0.1, dt=0.05, gamma=0.1, n_x1=9,
                     rho_n_R=10, rho_n_r=200)


@pytest.fixture
def config_file(tmp_path):
    def write(text: str):
        path = tmp_path / "run.env"
        path.write_text(text, encoding="utf-8")
        return path
    return write
