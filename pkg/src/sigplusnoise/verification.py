"""Posterior uncertainty in skill: correlation, signal-to-noise and bias."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats as sps

from .inference.diagnostics import effective_sample_size
from .inference.gibbs import ChainSet, SamplerConfig, sample_posterior
from .inference.priors import PriorSpec
from .model import (DegenerateModelError, HindcastDataset, ModelParams, derived_diagnostics,
                    joint_moments, sample_correlation, simulate_ensemble_mean)
from .summaries import BOX_PERCENTILES, kde_mode, percentile_dict

MODES = ("population", "predictive_new_period", "predictive_fixed_obs")


@dataclass
class CorrelationAnalysis:
    mode: str
    samples: np.ndarray
    interval_95: tuple
    mean: float
    median: float
    mode_estimate: float
    skipped: int = 0

    @classmethod
    def from_samples(cls, mode: str, samples, skipped: int = 0) -> "CorrelationAnalysis":
        x = np.asarray(samples, dtype=float)
        lo, med, hi = np.percentile(x, [2.5, 50, 97.5])
        return cls(mode, x, (float(lo), float(hi)), float(x.mean()), float(med), kde_mode(x), skipped)

    @property
    def width(self) -> float:
        return self.interval_95[1] - self.interval_95[0]

    def percentiles(self) -> dict:
        return percentile_dict(self.samples)

    def summary(self) -> dict:
        return {
            "mode": self.mode,
            "n": int(self.samples.size),
            "skipped": self.skipped,
            "interval_95": list(self.interval_95),
            "mean": self.mean,
            "median": self.median,
            "mode_estimate": self.mode_estimate,
            "percentiles": self.percentiles(),
        }


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def correlation_population(chains: ChainSet, R: Optional[int] = None) -> CorrelationAnalysis:
    """Posterior of the population correlation of the R-member mean (default: fitted R)."""
    R = chains.R if R is None else R
    p = chains.params()
    m = joint_moments(p, R)
    denom = m.var_xbar * m.var_y
    ok = denom > 0
    if not np.any(ok):
        raise DegenerateModelError("every draw has a degenerate correlation")
    rho = m.cov_xy[ok] / np.sqrt(denom[ok])
    return CorrelationAnalysis.from_samples("population", rho, int(np.sum(~ok)))


def correlation_new_period(chains: ChainSet, N: int, R: int, rng_seed) -> CorrelationAnalysis:
    """Posterior predictive sample correlation over a fresh N-year, R-member hindcast."""
    p = chains.params()
    y, xbar = simulate_ensemble_mean(p, N, R, _rng(rng_seed))
    r = sample_correlation(xbar, y)
    ok = np.isfinite(r)
    return CorrelationAnalysis.from_samples("predictive_new_period", r[ok], int(np.sum(~ok)))


def correlation_fixed_obs(chains: ChainSet, data: HindcastDataset, rng_seed,
                          R: Optional[int] = None) -> CorrelationAnalysis:
    """Correlation of replicated ensembles (from sampled signal paths) with the actual observations."""
    if chains.N != data.n_years:
        raise ValueError(f"signal length {chains.N} does not match dataset N={data.n_years}")
    R = data.n_members if R is None else R
    p = chains.params()
    _, xbar = simulate_ensemble_mean(p, data.n_years, R, _rng(rng_seed), signal=chains.flat("signal"))
    r = sample_correlation(xbar, data.obs[None, :])
    ok = np.isfinite(r)
    return CorrelationAnalysis.from_samples("predictive_fixed_obs", r[ok], int(np.sum(~ok)))


@dataclass
class ProbabilityReport:
    """Named posterior event probabilities with Monte-Carlo standard errors.

    Standard errors use ``sqrt(p (1 - p) / n_eff)`` with ``n_eff`` the
    effective sample size of the event indicator.
    """

    probabilities: dict
    std_errors: dict
    n_draws: int
    notes: list = field(default_factory=list)

    def __getitem__(self, key):
        return self.probabilities[key]

    def to_dict(self) -> dict:
        return {
            "probabilities": {k: float(v) for k, v in self.probabilities.items()},
            "std_errors": {k: float(v) for k, v in self.std_errors.items()},
            "n_draws": self.n_draws,
            "notes": list(self.notes),
        }


def _event_report(events: dict, shape) -> ProbabilityReport:
    probs, ses = {}, {}
    n = int(np.prod(shape))
    for name, ind in events.items():
        ind = np.asarray(ind, dtype=float).reshape(shape)
        p = float(ind.mean())
        if 0 < p < 1 and shape[0] >= 2 and shape[1] >= 4:
            n_eff = effective_sample_size(ind)
        else:
            n_eff = n
        probs[name] = p
        ses[name] = math.sqrt(p * (1 - p) / n_eff)
    return ProbabilityReport(probs, ses, n)


def probability_report(chains: ChainSet, bias_threshold: float = 1.0) -> ProbabilityReport:
    """Posterior probabilities of the skill / reliability events.

    All events use strict inequalities, so ties count as false.
    """
    p = chains.params()
    shape = (chains.n_chains, chains.n_draws)
    d = derived_diagnostics(p, chains.R)
    events = {
        "beta<1": p.beta < 1,
        "beta>0": p.beta > 0,
        "snr_obs>snr_mod": d.snr_obs > d.snr_mod,
        "mu_x>mu_y": p.mu_x > p.mu_y,
        f"bias>{bias_threshold:g}": (p.mu_x - p.mu_y) > bias_threshold,
        "sigma_eta>sigma_eps": p.sigma_eta > p.sigma_eps,
    }
    rep = _event_report(events, shape)
    neg = float(np.mean(p.beta < 0))
    if neg > 0:
        rep.notes.append(f"posterior mass {neg:.4f} at beta < 0; predictive formulas applied as written")
    return rep


def snr_summary(chains: ChainSet) -> dict:
    """Posterior summaries of SNRs, RPC and the perfect-model RPC."""
    d = derived_diagnostics(chains.params(), chains.R)
    out = {}
    for name in ("snr_obs", "snr_mod", "rpc", "rpc_perf", "pc_obs", "pc_mod"):
        x = np.asarray(getattr(d, name), dtype=float)
        x = x[np.isfinite(x)]
        out[name] = {
            "mean": float(x.mean()),
            "sd": float(x.std()),
            "percentiles": percentile_dict(x),
        }
    out["prob_snr_obs_gt_snr_mod"] = float(np.mean(d.snr_obs > d.snr_mod))
    return out


def excess_kurtosis(chains: ChainSet) -> dict:
    """Sample excess kurtosis of each location parameter's posterior (reported, not tested)."""
    return {k: float(sps.kurtosis(chains.flat(k))) for k in ("mu_x", "mu_y")}


def _overlap(a, b, bins: int = 200) -> float:
    """Overlap coefficient of two sample distributions (shared histogram mass)."""
    lo, hi = min(a.min(), b.min()), max(a.max(), b.max())
    if hi == lo:
        return 1.0
    ha, edges = np.histogram(a, bins=bins, range=(lo, hi))
    hb, _ = np.histogram(b, bins=edges)
    return float(np.minimum(ha / a.size, hb / b.size).sum())


@dataclass
class PerfectModelResult:
    report: ProbabilityReport
    per_member: list
    overlap: dict

    def to_dict(self) -> dict:
        return {
            "averaged": self.report.to_dict(),
            "per_member": [r.to_dict() for r in self.per_member],
            "overlap": self.overlap,
        }


def perfect_model_check(data: HindcastDataset, member_index=None, prior: Optional[PriorSpec] = None,
                        cfg: Optional[SamplerConfig] = None) -> PerfectModelResult:
    """Refit with one ensemble member standing in for the observation.

    ``member_index`` is 1-based; ``None`` averages the event probabilities
    over every choice of member.  For a model that treats members as
    exchangeable, the pseudo-observation should look exchangeable too.
    """
    R = data.n_members
    if R < 3:
        raise ValueError("perfect-model check needs R >= 3")
    if member_index is None:
        members = list(range(1, R + 1))
    else:
        members = [member_index] if np.isscalar(member_index) else list(member_index)
    for m in members:
        if not 1 <= int(m) <= R:
            raise ValueError(f"member index {m} outside 1..{R}")
    cfg = SamplerConfig() if cfg is None else cfg
    reports, overlaps = [], {"mu": [], "sigma_noise": []}
    for m in members:
        keep = np.arange(R) != (m - 1)
        pseudo = HindcastDataset(data.years, data.ens[:, m - 1], data.ens[:, keep])
        ch = sample_posterior(pseudo, prior, cfg)
        p = ch.params()
        d = derived_diagnostics(p, ch.R)
        reports.append(_event_report({
            "beta<1": p.beta < 1,
            "snr_obs>snr_mod": d.snr_obs > d.snr_mod,
            "mu_x>mu_y": p.mu_x > p.mu_y,
        }, (ch.n_chains, ch.n_draws)))
        overlaps["mu"].append(_overlap(p.mu_x, p.mu_y))
        overlaps["sigma_noise"].append(_overlap(p.sigma_eps, p.sigma_eta))
    names = reports[0].probabilities.keys()
    k = len(reports)
    avg = ProbabilityReport(
        {n: float(np.mean([r.probabilities[n] for r in reports])) for n in names},
        {n: float(math.sqrt(sum(r.std_errors[n] ** 2 for r in reports)) / k) for n in names},
        sum(r.n_draws for r in reports),
    )
    return PerfectModelResult(avg, reports, {k_: float(np.mean(v)) for k_, v in overlaps.items()})
