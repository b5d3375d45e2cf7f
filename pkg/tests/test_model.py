import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, optimize
from scipy import stats as sps

from sigplusnoise.model import (DegenerateModelError, HindcastDataset, ModelParams, SignalPath,
                                conditional_predictive, derived_diagnostics, joint_moments,
                                log_likelihood, population_correlation, sample_correlation,
                                simulate_ensemble_mean, simulate_hindcast)


def P(mu_x=0.0, mu_y=0.0, beta=1.0, sigma_s=1.0, sigma_eps=1.0, sigma_eta=1.0):
    return ModelParams(mu_x, mu_y, beta, sigma_s, sigma_eps, sigma_eta)


sd = st.floats(0.05, 20.0)
params_st = st.builds(P, st.floats(-50, 50), st.floats(-50, 50), st.floats(-3, 3), sd, sd, sd)


# -- joint moments ------------------------------------------------------------

def test_moments_decoupled():
    m = joint_moments(P(beta=0.0, sigma_s=3.0, sigma_eps=2.0, sigma_eta=1.0), R=5)
    assert m.cov_xy == 0 and m.cov_xx == 0
    assert m.var_y == pytest.approx(13.0)


def test_moments_noiseless_ensemble():
    m = joint_moments(P(beta=1.0, sigma_s=2.0, sigma_eta=0.0), R=1)
    assert (m.cov_xx, m.var_xi, m.var_xbar) == pytest.approx((4.0, 4.0, 4.0))


def test_moments_plugin_matches_table_value():
    m = joint_moments(P(beta=0.23, sigma_s=math.sqrt(50.35), sigma_eta=math.sqrt(62.17)), R=24)
    assert m.var_xbar == pytest.approx(5.25, abs=0.01)


def test_moments_bad_R():
    with pytest.raises(ValueError):
        joint_moments(P(), R=0)


@given(params_st, st.integers(1, 100))
def test_cov_signs(p, R):
    m = joint_moments(p, R)
    assert m.cov_xx >= 0
    assert (m.cov_xy < 0) == (p.beta < 0)


# -- likelihood ---------------------------------------------------------------

def test_likelihood_unit_case():
    data = HindcastDataset.from_arrays([0.0], [[0.0]])
    ll = log_likelihood(data, P(), [0.0])
    assert ll == pytest.approx(-math.log(2 * math.pi), rel=1e-12)
    ll2 = log_likelihood(data, P(sigma_eps=2.0), SignalPath([0.0]))
    assert ll2 == pytest.approx(ll - math.log(2), rel=1e-12)


def test_likelihood_dimension_mismatch():
    data = HindcastDataset.from_arrays([0.0, 1.0], [[0.0], [1.0]])
    with pytest.raises(ValueError):
        log_likelihood(data, P(), [0.0])


def test_likelihood_additive_over_years(rng):
    data, sig = simulate_hindcast(P(beta=0.7, sigma_s=2.0), 5, 3, rng)
    p = P(mu_x=0.3, beta=0.5, sigma_eps=1.5, sigma_eta=0.8)
    total = log_likelihood(data, p, sig)
    parts = sum(log_likelihood(HindcastDataset(data.years[[t]], data.obs[[t]], data.ens[[t]]), p, sig.s[[t]])
                for t in range(5))
    assert total == pytest.approx(parts, rel=1e-12)


def marginal_by_quadrature(data, p):
    """log p(y, x | theta) integrating each s_t numerically against N(0, sigma_s^2)."""
    total = 0.0
    for t in range(data.n_years):
        one = HindcastDataset(data.years[[t]], data.obs[[t]], data.ens[[t]])

        def logf(s):
            return log_likelihood(one, p, [s]) + sps.norm.logpdf(s, 0, p.sigma_s)

        # split the infinite range at the integrand's peak and scale by its height
        centre = optimize.minimize_scalar(lambda s: -logf(s)).x
        peak = logf(centre)
        f = lambda s: math.exp(logf(s) - peak)
        val = sum(integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-12, limit=400)[0]
                  for lo, hi in ((-np.inf, centre), (centre, np.inf)))
        total += peak + math.log(val)
    return total


def marginal_by_mvn(data, p):
    """Direct exchangeable multivariate-Normal density of (y_t, x_t1..x_tR)."""
    m = joint_moments(p, data.n_members)
    R = data.n_members
    cov = np.full((R + 1, R + 1), m.cov_xx)
    cov[0, :] = cov[:, 0] = m.cov_xy
    cov[0, 0] = m.var_y
    cov[np.arange(1, R + 1), np.arange(1, R + 1)] = m.var_xi
    mean = np.r_[p.mu_y, np.full(R, p.mu_x)]
    z = np.column_stack([data.obs, data.ens])
    return float(np.sum(sps.multivariate_normal(mean, cov).logpdf(z)))


def random_instance(rng):
    N, R = int(rng.integers(1, 4)), int(rng.integers(1, 5))
    p = P(mu_x=rng.normal(0, 5), mu_y=rng.normal(0, 5), beta=rng.normal(0.5, 1),
          sigma_s=rng.uniform(0.3, 4), sigma_eps=rng.uniform(0.3, 4), sigma_eta=rng.uniform(0.3, 4))
    data, _ = simulate_hindcast(p, N, R, rng)
    return data, p


def test_likelihood_marginal_matches_mvn():
    rng = np.random.default_rng(7)
    for _ in range(20):
        data, p = random_instance(rng)
        a, b = marginal_by_quadrature(data, p), marginal_by_mvn(data, p)
        assert abs(a - b) / abs(b) < 1e-6


def test_likelihood_rejects_zero_noise():
    data = HindcastDataset.from_arrays([0.0], [[0.0]])
    with pytest.raises(DegenerateModelError):
        log_likelihood(data, P(sigma_eps=0.0), [0.0])


# -- correlation and predictive -----------------------------------------------

def test_correlation_limits():
    assert population_correlation(P(beta=0.0), 10) == 0.0
    assert population_correlation(P(beta=1.0, sigma_eps=0.0, sigma_eta=0.0), 10) == pytest.approx(1.0)
    with pytest.raises(DegenerateModelError):
        population_correlation(P(sigma_s=0.0, sigma_eps=0.0), 4)


def test_correlation_plugin_reproduces_sample_r():
    p = P(beta=0.229401, sigma_s=math.sqrt(50.3485), sigma_eps=math.sqrt(16.7715),
          sigma_eta=math.sqrt(62.17))
    assert population_correlation(p, 24) == pytest.approx(0.62, abs=0.01)


@given(params_st, st.integers(1, 200))
def test_correlation_bounded(p, R):
    assert abs(population_correlation(p, R)) <= 1 + 1e-12


@given(params_st, st.integers(1, 100))
def test_correlation_monotone_in_R(p, R):
    p = p.replace(beta=abs(p.beta) + 0.01)
    assert population_correlation(p, R + 1) >= population_correlation(p, R) - 1e-12


def test_conditional_predictive_trivial():
    mean, var = conditional_predictive(P(beta=2.0, sigma_eta=0.0), 4.0, 10)
    assert (mean, var) == pytest.approx((2.0, 1.0))
    p = P(mu_y=3.0, beta=0.0, sigma_s=2.0, sigma_eps=1.5)
    mean, var = conditional_predictive(p, 100.0, 10)
    assert (mean, var) == pytest.approx((3.0, 1.5**2 + 2.0**2))
    with pytest.raises(DegenerateModelError):
        conditional_predictive(P(beta=0.0, sigma_eta=0.0), 1.0, 5)


@given(params_st, st.integers(1, 60), st.floats(-30, 30))
def test_conditional_predictive_is_normal_regression(p, R, xbar):
    m = joint_moments(p, R)
    mean, var = conditional_predictive(p, xbar, R)
    ref_mean = p.mu_y + m.cov_xy / m.var_xbar * (xbar - p.mu_x)
    ref_var = m.var_y - m.cov_xy**2 / m.var_xbar
    assert mean == pytest.approx(ref_mean, rel=1e-9, abs=1e-9)
    assert var == pytest.approx(ref_var, rel=1e-7, abs=1e-9 * m.var_y)


# -- derived diagnostics ------------------------------------------------------

def test_snr_plugin_values():
    p = P(beta=0.229401, sigma_s=math.sqrt(50.3485), sigma_eps=math.sqrt(16.7715),
          sigma_eta=math.sqrt(62.17))
    d = derived_diagnostics(p, 24)
    assert d.snr_obs == pytest.approx(1.73, abs=0.01)
    assert d.snr_mod == pytest.approx(0.21, abs=0.01)


def test_rpc_perf_arithmetic_and_limit():
    d = derived_diagnostics(P(sigma_s=2.0, sigma_eps=2.0), 24)
    assert d.rpc_perf == pytest.approx(24 / 25)
    assert derived_diagnostics(P(), 10**9).rpc_perf == pytest.approx(1.0, abs=1e-8)


def test_infinite_snr_flag():
    d = derived_diagnostics(P(sigma_eps=0.0), 5)
    assert d.infinite_snr and math.isinf(d.snr_obs)
    assert not derived_diagnostics(P(), 5).infinite_snr


@given(params_st, st.floats(0.1, 10), st.floats(-20, 20), st.integers(1, 50))
def test_scale_equivariance(p, a, b, R):
    q = p.replace(mu_x=a * p.mu_x + b, mu_y=a * p.mu_y + b, sigma_s=a * p.sigma_s,
                  sigma_eps=a * p.sigma_eps, sigma_eta=a * p.sigma_eta)
    d1, d2 = derived_diagnostics(p, R), derived_diagnostics(q, R)
    for name in ("rho", "snr_obs", "snr_mod", "pc_obs", "pc_mod", "rpc"):
        assert getattr(d2, name) == pytest.approx(getattr(d1, name), rel=1e-9, abs=1e-12)


@given(st.floats(-10, 10), sd, sd, st.integers(1, 100))
def test_rpc_at_exchangeability(mu, s, noise, R):
    d = derived_diagnostics(P(mu_x=mu, mu_y=mu, beta=1.0, sigma_s=s, sigma_eps=noise, sigma_eta=noise), R)
    assert d.rpc == pytest.approx(d.rpc_perf, rel=1e-9)
    assert d.rpc < 1


@given(params_st, st.integers(1, 50))
def test_pc_mod_range(p, R):
    d = derived_diagnostics(p, R)
    assert 0 < d.pc_mod <= 1 + 1e-12


# -- data container and simulation --------------------------------------------

def test_dataset_validation():
    with pytest.raises(ValueError):
        HindcastDataset.from_arrays([1.0, 2.0], [[1.0]])
    with pytest.raises(ValueError):
        HindcastDataset([2, 1], [1.0, 2.0], [[1.0], [2.0]])
    with pytest.raises(ValueError):
        HindcastDataset.from_arrays([np.nan], [[1.0]])
    d = HindcastDataset.from_arrays([1.0, 2.0], [[1.0, 2.0], [3.0, 4.0]])
    with pytest.raises(ValueError):
        d.require_size()
    with pytest.raises(ValueError):
        d.obs[0] = 5.0


def test_drop_and_transform(rng):
    data, _ = simulate_hindcast(P(), 6, 3, rng)
    assert data.drop_year(2).n_years == 5
    t = data.transformed(2.0, 5.0)
    np.testing.assert_allclose(t.obs, 2 * data.obs + 5)


def test_ensemble_mean_law(rng):
    p = P(mu_x=1.0, beta=0.5, sigma_s=2.0, sigma_eta=3.0)
    _, xbar = simulate_ensemble_mean(p, 200_000, 6, rng)
    m = joint_moments(p, 6)
    assert xbar.mean() == pytest.approx(1.0, abs=0.02)
    assert xbar.var() == pytest.approx(m.var_xbar, rel=0.02)


def test_sample_correlation_edges():
    assert math.isnan(sample_correlation([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]))
    assert sample_correlation([1.0, 2.0, 3.0], [2.0, 4.0, 6.5]) > 0.99
