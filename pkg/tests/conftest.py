import numpy as np
import pytest

from sigplusnoise.inference.gibbs import SamplerConfig, sample_posterior
from sigplusnoise.io import load_reference_dataset
from sigplusnoise.model import ModelParams

REFERENCE_SEED = 1


@pytest.fixture(scope="session")
def nao():
    return load_reference_dataset()


@pytest.fixture(scope="session")
def nao_chains(nao):
    return sample_posterior(nao, cfg=SamplerConfig(seed=REFERENCE_SEED))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def exchangeable():
    return ModelParams(mu_x=1.0, mu_y=1.0, beta=1.0, sigma_s=2.0, sigma_eps=3.0, sigma_eta=3.0)


@pytest.fixture(scope="session")
def nao_loo(nao):
    from sigplusnoise.prediction import loo_evaluate
    return loo_evaluate(nao, cfg=SamplerConfig(seed=REFERENCE_SEED))
