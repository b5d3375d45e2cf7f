import numpy as np
import pytest

from sigplusnoise.inference.diagnostics import (DiagnosticsWarning, diagnostics,
                                                effective_sample_size, split_rhat)
from sigplusnoise.inference.gibbs import ChainSet, SamplerConfig
from sigplusnoise.inference.priors import PriorSpec
from sigplusnoise.model import PARAM_NAMES, ModelParams


def chainset_from(x):
    C, S = x.shape
    draws = {k: x + i for i, k in enumerate(PARAM_NAMES)}
    draws = {k: (np.abs(v) if k.startswith("sigma") else v) for k, v in draws.items()}
    return ChainSet(draws=draws, signal=np.zeros((C, S, 3)), R=4,
                    config=SamplerConfig(chains=C, iterations=S + 1, warmup=0), prior=PriorSpec())


def test_constant_chains_pass_with_warning():
    ch = ChainSet.collapsed(ModelParams(0.0, 0.0, 1.0, 1.0, 1.0, 1.0), np.zeros(3), R=4, n_draws=50)
    with pytest.warns(DiagnosticsWarning):
        rep = diagnostics(ch)
    assert rep.passed
    assert all(np.isnan(v) for v in rep.rhat.values())
    assert rep.warnings


def test_white_noise_rhat():
    x = np.random.default_rng(0).standard_normal((4, 10_000))
    r = split_rhat(x)
    # split R-hat of exchangeable chains fluctuates around 1 on both sides at the 1e-4 level
    assert 1 - 1e-3 <= r <= 1.01
    ess = effective_sample_size(x)
    assert 0.8 * x.size < ess <= x.size
    assert diagnostics(chainset_from(x)).passed


def test_offset_chain_fails():
    x = np.random.default_rng(1).standard_normal((4, 2000))
    x[2] += 10.0
    assert split_rhat(x) > 1.1
    assert not diagnostics(chainset_from(x)).passed


def test_trend_detected_by_split():
    t = np.linspace(0, 3, 2000)
    x = np.random.default_rng(2).standard_normal((4, 2000)) * 0.3 + t
    assert split_rhat(x) > 1.1


def test_ess_of_autocorrelated_chain_is_small():
    rng = np.random.default_rng(3)
    z = rng.standard_normal((4, 20_000))
    x = np.empty_like(z)
    x[:, 0] = z[:, 0]
    for i in range(1, z.shape[1]):
        x[:, i] = 0.9 * x[:, i - 1] + z[:, i]
    # AR(1) with phi=0.9 has integrated autocorrelation time (1+phi)/(1-phi) = 19
    assert effective_sample_size(x) == pytest.approx(x.size / 19, rel=0.25)


def test_too_few_draws():
    with pytest.raises(ValueError):
        diagnostics(chainset_from(np.zeros((2, 5)) + np.arange(5)))


def test_reference_fit_converges(nao_chains):
    rep = diagnostics(nao_chains)
    assert rep.passed
    assert all(v <= 1.01 for v in rep.rhat.values())
    assert all(v > 1000 for v in rep.ess.values())
    d = rep.to_dict()
    assert set(d["rhat"]) == set(PARAM_NAMES) and d["passed"] is True
