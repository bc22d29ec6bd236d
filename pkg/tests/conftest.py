import numpy as np
import pytest

from mcdf.model import ModelConfig, init_random


@pytest.fixture(scope="session")
def tiny_config():
    return ModelConfig(n_layers=2, d_model=16, n_heads=2, d_ff=32, max_len=64)


@pytest.fixture(scope="session")
def tiny_params(tiny_config):
    return init_random(tiny_config, seed=0)


@pytest.fixture(scope="session")
def rng0():
    return np.random.default_rng(0)
