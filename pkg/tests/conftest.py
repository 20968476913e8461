import numpy as np
import pytest

from stopbed.env_convdiff import ConvDiffConfig, ConvDiffEnv, precompute_fields
from stopbed.env_lingauss import LinGaussConfig, LinGaussEnv


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def lingauss():
    return LinGaussEnv(LinGaussConfig(horizon=3, cost=-0.5))


@pytest.fixture(scope="session")
def small_convdiff_cfg():
    # coarse mesh and grid so the cache builds in well under a second
    return ConvDiffConfig(fv_resolution=32, theta_grid=12, sensor_noise_std=0.01, cost=-0.1)


@pytest.fixture(scope="session")
def small_cache(small_convdiff_cfg):
    return precompute_fields(small_convdiff_cfg)


@pytest.fixture
def convdiff(small_convdiff_cfg, small_cache):
    return ConvDiffEnv(small_convdiff_cfg, cache=small_cache)
