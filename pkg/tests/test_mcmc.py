import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apsp.errors import UserInputError
from apsp.mcmc import (
    ChainSpec,
    CoefficientPosterior,
    derive_rng,
    derive_seed,
    effective_sample_size,
    split_rhat,
    summarize,
)


class TestChainSpec:
    def test_retained_count(self):
        assert ChainSpec(6000, 2000, 2, 0).n_retained == 2000

    def test_burn_must_be_smaller(self):
        with pytest.raises(UserInputError):
            ChainSpec(n_iter=100, n_burn=100)

    def test_minimum_retained(self):
        with pytest.raises(UserInputError, match="at least 100"):
            ChainSpec(n_iter=150, n_burn=100, thin=1)

    def test_serialization_roundtrip(self):
        spec = ChainSpec(500, 100, 2, seed=42, mh_step=0.3)
        assert ChainSpec.from_dict(spec.to_dict()) == spec

    def test_unknown_keys_rejected(self):
        with pytest.raises(UserInputError, match="unknown"):
            ChainSpec.from_dict({"n_iter": 500, "n_burn": 0, "bogus": 1})


class TestSummarize:
    def test_constant(self):
        s = summarize([1.0, 1.0, 1.0])
        assert s.mean == 1.0 and s.variance == 0.0 and s.ci95 == (1.0, 1.0)

    def test_two_point(self):
        s = summarize([0.0, 1.0])
        assert s.mean == pytest.approx(0.5)
        assert s.variance == pytest.approx(0.5)

    def test_standard_normal_sample(self):
        draws = np.random.default_rng(123).standard_normal(10_000)
        s = summarize(draws)
        assert abs(s.mean) < 0.05
        assert s.ci95[0] == pytest.approx(-1.96, abs=0.1)
        assert s.ci95[1] == pytest.approx(1.96, abs=0.1)

    def test_quantile_function(self):
        s = summarize(np.arange(101, dtype=float))
        assert s.quantile(0.5) == pytest.approx(50.0)
        assert s.quantile(0.0) == 0.0 and s.quantile(1.0) == 100.0

    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(UserInputError):
            summarize([])
        with pytest.raises(UserInputError):
            summarize([1.0, np.nan])


class TestSplitRhat:
    def test_iid_chain_near_one(self):
        draws = np.random.default_rng(7).standard_normal(4000)
        assert split_rhat(draws) < 1.01

    def test_constant_is_one(self):
        assert split_rhat(np.full(50, 3.3)) == 1.0

    def test_two_regime_large(self):
        draws = np.concatenate([np.zeros(100), np.full(100, 10.0)])
        assert split_rhat(draws) > 1.5

    def test_minimum_length(self):
        with pytest.raises(UserInputError):
            split_rhat([1.0, 2.0, 3.0])


class TestEss:
    def test_iid_close_to_n(self):
        draws = np.random.default_rng(5).standard_normal(4000)
        assert effective_sample_size(draws) > 2500

    def test_never_exceeds_n(self):
        draws = np.random.default_rng(5).standard_normal(500)
        assert effective_sample_size(draws) <= 500

    def test_autocorrelated_much_smaller(self):
        rng = np.random.default_rng(5)
        x = np.zeros(4000)
        for i in range(1, 4000):
            x[i] = 0.95 * x[i - 1] + rng.standard_normal()
        assert effective_sample_size(x) < 600


class TestCoefficientPosterior:
    def test_from_draws_moments(self):
        draws = np.random.default_rng(1).standard_normal(500) * 2 + 1
        c = CoefficientPosterior.from_draws("b", draws, pip=0.7)
        assert c.mean == pytest.approx(np.mean(draws), rel=1e-10)
        assert c.variance == pytest.approx(np.var(draws, ddof=1), rel=1e-10)
        assert c.ci95 == (pytest.approx(np.quantile(draws, 0.025)),
                          pytest.approx(np.quantile(draws, 0.975)))

    def test_validation(self):
        with pytest.raises(ValueError):
            CoefficientPosterior("b", 0.0, -1.0, (0.0, 1.0))
        with pytest.raises(ValueError):
            CoefficientPosterior("b", 0.0, 1.0, (1.0, 0.0))
        with pytest.raises(ValueError):
            CoefficientPosterior("b", 0.0, 1.0, (0.0, 1.0), pip=1.5)

    def test_excludes_zero(self):
        assert CoefficientPosterior("b", 2.0, 0.1, (1.0, 3.0)).excludes_zero()
        assert not CoefficientPosterior("b", 0.5, 0.1, (-0.1, 1.0)).excludes_zero()


class TestSeedDerivation:
    def test_deterministic(self):
        assert derive_seed(7, "a", 1) == derive_seed(7, "a", 1)

    def test_labels_distinguish(self):
        assert derive_seed(7, "a", 1) != derive_seed(7, "a", 2)
        assert derive_seed(7, "a", 1) != derive_seed(8, "a", 1)
        assert derive_seed(7, "a", 11) != derive_seed(7, "a1", 1)

    def test_streams_differ(self):
        a = derive_rng(7, "x").standard_normal(8)
        b = derive_rng(7, "y").standard_normal(8)
        assert not np.allclose(a, b)

    def test_streams_reproducible(self):
        assert np.array_equal(
            derive_rng(7, "x", 3).standard_normal(8),
            derive_rng(7, "x", 3).standard_normal(8),
        )


@given(st.lists(st.floats(-1e4, 1e4), min_size=2, max_size=200))
@settings(max_examples=80, deadline=None)
def test_summarize_matches_numpy(values):
    draws = np.asarray(values)
    s = summarize(draws)
    assert s.mean == pytest.approx(float(np.mean(draws)), rel=1e-9, abs=1e-9)
    assert s.variance == pytest.approx(float(np.var(draws, ddof=1)), rel=1e-9, abs=1e-9)
    lo, hi = np.quantile(draws, [0.025, 0.975])
    assert s.ci95 == (pytest.approx(float(lo)), pytest.approx(float(hi)))
    assert s.ci95[0] <= s.ci95[1]
