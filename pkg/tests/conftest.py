"""Session fixtures: reference distributions and shared Monte Carlo batches.

The two 1e5-sample batches and the 64x64 calibrations are expensive, so
they are computed once per session and shared between the unit tests and
the acceptance suite.
"""

import numpy as np
import pytest

from fishnet.dist import GraftedGaussianPower, GraftedWeibullGaussian
from fishnet.mc import RunConfig, run_batch
from fishnet.mesh import FishnetGeometry, build_mesh
from fishnet.models import calibrate_params


@pytest.fixture(scope="session")
def pg():
    return GraftedGaussianPower()


@pytest.fixture(scope="session")
def wg():
    return GraftedWeibullGaussian()


@pytest.fixture(scope="session")
def mesh_16x32():
    return build_mesh(FishnetGeometry(16, 32))


@pytest.fixture(scope="session")
def mesh_64x64():
    return build_mesh(FishnetGeometry(64, 64))


@pytest.fixture(scope="session")
def params_pg_64(mesh_64x64, pg):
    return calibrate_params(mesh_64x64, pg)


@pytest.fixture(scope="session")
def params_wg_64(mesh_64x64, wg):
    return calibrate_params(mesh_64x64, wg)


@pytest.fixture(scope="session")
def params_pg_16x32(mesh_16x32, pg):
    return calibrate_params(mesh_16x32, pg)


@pytest.fixture(scope="session")
def params_wg_16x32(mesh_16x32, wg):
    return calibrate_params(mesh_16x32, wg)


@pytest.fixture(scope="session")
def pg_records_16x32(pg):
    config = RunConfig(geometry=FishnetGeometry(16, 32), dist=pg,
                       sample_count=100_000, master_seed=20260822)
    return run_batch(config)


@pytest.fixture(scope="session")
def wg_records_16x32(wg):
    config = RunConfig(geometry=FishnetGeometry(16, 32), dist=wg,
                       sample_count=100_000, master_seed=515151)
    return run_batch(config)


@pytest.fixture(scope="session")
def peaks_of():
    def _peaks(records):
        return np.array([rec.peak_stress for rec in records])

    return _peaks
