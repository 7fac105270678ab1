import numpy as np
import pytest

from apsp.data import Dataset, apply_standardization, fit_standardization
from apsp.mcmc import ChainSpec
from apsp.simulate import ScenarioSpec, generate_scenario


@pytest.fixture
def fast_chain():
    return ChainSpec(n_iter=1200, n_burn=400, thin=1, seed=0)


@pytest.fixture
def tiny_chain():
    return ChainSpec(n_iter=600, n_burn=200, thin=1, seed=0)


def make_dataset(X, y, name="data", role="internal", kinds=None):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if kinds is None:
        kinds = ["continuous"] * X.shape[1]
    cols = tuple((f"x{i+1}", kinds[i]) for i in range(X.shape[1]))
    return Dataset(name, role, cols, X, np.asarray(y, dtype=float))


def standardized_scenario(scenario, n_internal, seed, noise_sd=1.0, n_external=50):
    """Generate and pool-standardize one scenario replicate."""
    spec = ScenarioSpec(scenario, n_internal, n_external, noise_sd, seed=seed)
    ds_ext, ds_int, beta_true = generate_scenario(spec)
    smap = fit_standardization([ds_ext, ds_int])
    return (
        apply_standardization(ds_ext, smap),
        apply_standardization(ds_int, smap),
        beta_true,
        smap,
    )
