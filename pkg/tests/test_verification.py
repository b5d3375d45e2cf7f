import numpy as np
import pytest

from sigplusnoise.inference.gibbs import ChainSet, SamplerConfig, sample_posterior
from sigplusnoise.inference.priors import PriorSpec
from sigplusnoise.model import HindcastDataset, ModelParams, sample_correlation, simulate_hindcast
from sigplusnoise.verification import (correlation_fixed_obs, correlation_new_period,
                                       correlation_population, perfect_model_check,
                                       probability_report, snr_summary)


def point(**kw):
    base = dict(mu_x=0.0, mu_y=0.0, beta=1.0, sigma_s=2.0, sigma_eps=1.0, sigma_eta=1.0)
    base.update(kw)
    return ModelParams(**base)


def test_population_zero_slope():
    ch = ChainSet.collapsed(point(beta=0.0), np.zeros(5), R=10)
    c = correlation_population(ch)
    assert np.all(c.samples == 0) and c.interval_95 == (0.0, 0.0)


def test_new_period_noise_free():
    ch = ChainSet.collapsed(point(sigma_eps=0.0, sigma_eta=0.0), np.zeros(5), R=10, n_draws=50)
    c = correlation_new_period(ch, 20, 10, rng_seed=1)
    np.testing.assert_allclose(c.samples, 1.0, atol=1e-12)


def test_fixed_obs_noise_free_replication():
    rng = np.random.default_rng(4)
    s = rng.normal(size=8)
    data = HindcastDataset.from_arrays(s + rng.normal(size=8), rng.normal(size=(8, 3)))
    ch = ChainSet.collapsed(point(mu_x=2.0, beta=0.7, sigma_eta=0.0), s, R=3)
    c = correlation_fixed_obs(ch, data, rng_seed=0)
    np.testing.assert_allclose(c.samples, sample_correlation(2.0 + 0.7 * s, data.obs), atol=1e-12)


def test_fixed_obs_length_mismatch(nao):
    ch = ChainSet.collapsed(point(), np.zeros(5), R=24)
    with pytest.raises(ValueError):
        correlation_fixed_obs(ch, nao, rng_seed=0)


def test_interval_ordering(nao, nao_chains):
    pop = correlation_population(nao_chains)
    new = correlation_new_period(nao_chains, nao.n_years, nao.n_members, rng_seed=[1, 2])
    fix = correlation_fixed_obs(nao_chains, nao, rng_seed=[1, 3])
    assert pop.width < fix.width < new.width
    for c in (pop, new, fix):
        lo, hi = c.interval_95
        assert lo <= c.median <= hi
        assert np.all(np.abs(c.samples) <= 1)


def test_population_interval(nao_chains):
    c = correlation_population(nao_chains)
    assert c.interval_95[0] == pytest.approx(0.19, abs=0.05)
    assert c.interval_95[1] == pytest.approx(0.68, abs=0.05)
    assert c.mean == pytest.approx(0.42, abs=0.05)


def test_probability_report(nao_chains):
    rep = probability_report(nao_chains)
    expected = {"beta<1": 0.99, "beta>0": 0.99, "snr_obs>snr_mod": 0.99, "mu_x>mu_y": 0.94, "bias>1": 0.83}
    for k, v in expected.items():
        assert rep[k] == pytest.approx(v, abs=0.03), k
        assert 0 < rep.std_errors[k] < 0.01
    assert all(0 <= p <= 1 for p in rep.probabilities.values())


def test_prior_only_probability(nao):
    ch = sample_posterior(nao, cfg=SamplerConfig(chains=4, iterations=20_000, warmup=500, seed=3),
                          likelihood_weight=0.0)
    assert probability_report(ch)["snr_obs>snr_mod"] == pytest.approx(0.5, abs=0.03)


def test_ties_count_as_false():
    ch = ChainSet.collapsed(point(beta=1.0), np.zeros(4), R=5)
    rep = probability_report(ch)
    assert rep["beta<1"] == 0.0 and rep["beta>0"] == 1.0
    assert rep["mu_x>mu_y"] == 0.0 and rep.std_errors["mu_x>mu_y"] == 0.0


def test_negative_slope_is_noted():
    ch = ChainSet.collapsed(point(beta=-0.5), np.zeros(4), R=5)
    assert probability_report(ch).notes


def test_probabilities_stable_across_seeds(nao, nao_chains):
    other = sample_posterior(nao, cfg=SamplerConfig(seed=77))
    a, b = probability_report(nao_chains), probability_report(other)
    for k in a.probabilities:
        se = np.hypot(a.std_errors[k], b.std_errors[k])
        assert abs(a[k] - b[k]) < 3 * se + 1e-12, k


def transformed_prior(prior, a, b):
    """Prior on the parameters of data mapped by v -> a v + b (same law, new units)."""
    return PriorSpec(
        mu_x_prior=(a * prior.mu_x_prior[0] + b, a * prior.mu_x_prior[1]),
        mu_y_prior=(a * prior.mu_y_prior[0] + b, a * prior.mu_y_prior[1]),
        beta_prior=prior.beta_prior,
        sigma2_s_prior=(prior.sigma2_s_prior[0], a * a * prior.sigma2_s_prior[1]),
        sigma2_eps_prior=(prior.sigma2_eps_prior[0], a * a * prior.sigma2_eps_prior[1]),
        sigma2_eta_prior=(prior.sigma2_eta_prior[0], a * a * prior.sigma2_eta_prior[1]),
    )


def test_population_interval_affine_invariant(nao, nao_chains):
    prior = transformed_prior(PriorSpec(), 2.0, 5.0)
    moved = sample_posterior(nao.transformed(2.0, 5.0), prior, SamplerConfig(seed=5))
    a, b = correlation_population(nao_chains), correlation_population(moved)
    np.testing.assert_allclose(a.interval_95, b.interval_95, atol=0.02)


def test_population_interval_shift_invariant(nao, nao_chains):
    moved = sample_posterior(nao.transformed(1.0, 10.0), cfg=SamplerConfig(seed=5))
    a, b = correlation_population(nao_chains), correlation_population(moved)
    np.testing.assert_allclose(a.interval_95, b.interval_95, atol=0.02)


@pytest.mark.xfail(strict=True, reason="priors are in absolute units, so rescaling the data "
                                       "under unchanged priors moves the posterior")
def test_population_interval_rescale_fixed_prior(nao, nao_chains):
    moved = sample_posterior(nao.transformed(2.0, 5.0), cfg=SamplerConfig(seed=5))
    a, b = correlation_population(nao_chains), correlation_population(moved)
    np.testing.assert_allclose(a.interval_95, b.interval_95, atol=0.02)


def test_snr_summary(nao_chains):
    s = snr_summary(nao_chains)
    assert s["prob_snr_obs_gt_snr_mod"] > 0.96
    assert s["rpc"]["mean"] > 1 > s["rpc_perf"]["mean"]


# -- perfect-model check ------------------------------------------------------

FAST = SamplerConfig(chains=4, iterations=3000, warmup=500, seed=0)


def test_perfect_model_exchangeable_system():
    truth = ModelParams(mu_x=0.0, mu_y=0.0, beta=1.0, sigma_s=5.0, sigma_eps=5.0, sigma_eta=5.0)
    rng = np.random.default_rng(99)
    probs = []
    for _ in range(50):
        data, _ = simulate_hindcast(truth, 20, 24, rng)
        probs.append(perfect_model_check(data, 1, cfg=FAST).report["beta<1"])
    assert 0.3 <= np.median(probs) <= 0.7


def test_perfect_model_minimal_and_errors():
    rng = np.random.default_rng(5)
    data, _ = simulate_hindcast(point(), 3, 3, rng)
    res = perfect_model_check(data, 2, cfg=SamplerConfig(chains=2, iterations=400, warmup=100))
    assert set(res.overlap) == {"mu", "sigma_noise"}
    with pytest.raises(ValueError):
        perfect_model_check(data, 4)
    with pytest.raises(ValueError):
        perfect_model_check(HindcastDataset.from_arrays(data.obs, data.ens[:, :2]), 1)


@pytest.fixture(scope="module")
def nao_perfect(nao):
    return perfect_model_check(nao, cfg=SamplerConfig(iterations=8000, warmup=1000, seed=1))


def test_perfect_model_nao_slope(nao_perfect):
    assert nao_perfect.report["beta<1"] == pytest.approx(0.95, abs=0.07)
    assert len(nao_perfect.per_member) == 24


@pytest.mark.xfail(strict=True, reason="reference value comes from the real ensemble; the surrogate only "
                                       "pins ensemble-mean and pooled statistics, not member-level "
                                       "structure, and gives about 0.93")
def test_perfect_model_nao_snr(nao_perfect):
    assert nao_perfect.report["snr_obs>snr_mod"] == pytest.approx(0.85, abs=0.07)
