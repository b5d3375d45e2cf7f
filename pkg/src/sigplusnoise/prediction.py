"""Recalibrated predictive distributions and their evaluation by the Ignorance score."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import optimize, special
from scipy import stats as sps

from .inference.diagnostics import diagnostics
from .inference.gibbs import ChainSet, SamplerConfig, sample_posterior
from .inference.priors import PriorSpec
from .model import PARAM_NAMES, DegenerateModelError, HindcastDataset, ModelParams
from .moments import summarize

MAX_IGNORANCE = 60.0
METHODS = ("climatology", "regression", "posterior_predictive")


@dataclass
class PredictiveDistribution:
    """Equal-weight mixture of Normal components.

    A single component is an ordinary Normal forecast.
    """

    means: np.ndarray
    variances: np.ndarray
    target_year: Optional[int] = None

    def __post_init__(self):
        self.means = np.atleast_1d(np.asarray(self.means, dtype=float))
        self.variances = np.atleast_1d(np.asarray(self.variances, dtype=float))
        if self.means.shape != self.variances.shape or self.means.size == 0:
            raise ValueError("need matching, non-empty component means and variances")
        if np.any(self.variances <= 0) or not np.all(np.isfinite(self.variances)):
            raise DegenerateModelError("component variances must be positive and finite")

    @classmethod
    def normal(cls, mean: float, var: float, target_year=None) -> "PredictiveDistribution":
        return cls(np.array([mean]), np.array([var]), target_year)

    @property
    def n_components(self) -> int:
        return self.means.size

    @property
    def mean(self) -> float:
        return float(self.means.mean())

    @property
    def var(self) -> float:
        return float(self.variances.mean() + self.means.var())

    @property
    def sd(self) -> float:
        return math.sqrt(self.var)

    def logpdf(self, y):
        y = np.asarray(y, dtype=float)
        z = (y[..., None] - self.means) ** 2 / self.variances
        comp = -0.5 * (np.log(2 * np.pi * self.variances) + z)
        return special.logsumexp(comp, axis=-1) - math.log(self.n_components)

    def pdf(self, y):
        return np.exp(self.logpdf(y))

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        return sps.norm.cdf((y[..., None] - self.means) / np.sqrt(self.variances)).mean(axis=-1)

    def quantile(self, q: float) -> float:
        if not 0 < q < 1:
            raise ValueError("quantile level must be in (0, 1)")
        sd = np.sqrt(self.variances)
        # every component quantile brackets the mixture quantile
        zq = sps.norm.ppf(q)
        lo = float(np.min(self.means + zq * sd)) - 1e-9
        hi = float(np.max(self.means + zq * sd)) + 1e-9
        if hi - lo < 1e-9:
            return float(self.means[0] + zq * sd[0])
        return float(optimize.brentq(lambda v: self.cdf(v) - q, lo, hi, xtol=1e-12, rtol=1e-14))

    def grid(self, n: int = 401, width: float = 5.0):
        """Density on an evenly spaced grid covering +-width predictive sds."""
        y = np.linspace(self.mean - width * self.sd, self.mean + width * self.sd, n)
        return y, self.pdf(y)


def ignorance(dist: PredictiveDistribution, y: float, max_score: float = MAX_IGNORANCE,
              return_flag: bool = False):
    """``-log2`` of the predictive density at the verifying value, capped at ``max_score`` bits."""
    score = -float(dist.logpdf(y)) / math.log(2)
    capped = not score < max_score
    if capped:
        score = max_score
    return (score, capped) if return_flag else score


def posterior_predictive(chains_loo: ChainSet, ensemble_t=None) -> PredictiveDistribution:
    """Mixture over retained draws of ``N(mu_y + s_new, sigma_eps^2)`` for the held-out year.

    ``chains_loo`` must come from a fit that masked exactly one observation
    but kept its ensemble, so ``s_new`` is already conditioned on it.
    """
    t = chains_loo.heldout_index()
    if ensemble_t is not None and np.size(ensemble_t) != chains_loo.R:
        raise ValueError(f"ensemble has {np.size(ensemble_t)} members, chains were fitted with R={chains_loo.R}")
    means = chains_loo.flat("mu_y") + chains_loo.flat("signal")[:, t]
    year = None if chains_loo.years is None else int(chains_loo.years[t])
    return PredictiveDistribution(means, np.square(chains_loo.flat("sigma_eps")), year)


def regression_benchmark(data_loo: HindcastDataset, xbar_t: float, target_year=None) -> PredictiveDistribution:
    """Ordinary least-squares regression of observations on ensemble means."""
    st = summarize(data_loo)
    if st.v_xbar <= 0:
        raise DegenerateModelError("training ensemble means have zero variance")
    var = st.v_y - st.s_xbary**2 / st.v_xbar
    if var <= 1e-12 * max(st.v_y, 1.0):
        raise DegenerateModelError("zero residual variance in the regression")
    mean = st.m_y + st.s_xbary / st.v_xbar * (xbar_t - st.m_x)
    return PredictiveDistribution.normal(mean, var, target_year)


def climatology_baseline(data_loo: HindcastDataset, target_year=None) -> PredictiveDistribution:
    if data_loo.n_years < 2:
        raise ValueError("climatology needs at least 2 training years")
    st = summarize(data_loo)
    if st.v_y <= 0:
        raise DegenerateModelError("training observations have zero variance")
    return PredictiveDistribution.normal(st.m_y, st.v_y, target_year)


@dataclass
class ScoreTable:
    """Per-year Ignorance of each method with mean and standard error (``sd / sqrt(N)``)."""

    years: np.ndarray
    scores: dict
    capped: dict = field(default_factory=dict)

    def mean(self, method: str) -> float:
        return float(np.mean(self.scores[method]))

    def std_error(self, method: str) -> float:
        s = np.asarray(self.scores[method])
        return float(np.std(s, ddof=1) / math.sqrt(s.size))

    def to_dict(self) -> dict:
        return {
            "methods": {
                m: {"mean": self.mean(m), "std_error": self.std_error(m),
                    "per_year": [float(v) for v in self.scores[m]],
                    "capped": [bool(v) for v in self.capped.get(m, [False] * len(self.years))]}
                for m in self.scores
            },
            "years": [int(y) for y in self.years],
        }

    def as_text(self) -> str:
        lines = [f"{'Method':<22}{'mean Ign.':>10}{'std. error':>12}"]
        for m in self.scores:
            lines.append(f"{m:<22}{self.mean(m):>10.2f}{self.std_error(m):>12.2f}")
        return "\n".join(lines)


@dataclass
class LooResult:
    table: ScoreTable
    predictions: dict  # method -> list of PredictiveDistribution, one per year
    max_rhat: list = field(default_factory=list)  # worst R-hat of each refit
    converged: bool = True
    posterior_means: list = field(default_factory=list)  # ModelParams of each refit

    def mean_sd(self, method: str) -> float:
        return float(np.mean([p.sd for p in self.predictions[method]]))

    def sd_of_means(self, method: str) -> float:
        return float(np.std([p.mean for p in self.predictions[method]], ddof=1))

    def summary(self) -> dict:
        out = self.table.to_dict()
        out["max_rhat_per_refit"] = [float(v) for v in self.max_rhat]
        out["converged"] = self.converged
        for m in self.predictions:
            out["methods"][m]["mean_predictive_sd"] = self.mean_sd(m)
            out["methods"][m]["sd_of_predictive_means"] = self.sd_of_means(m)
        return out


def year_seed(seed: int, t: int) -> int:
    return int(np.random.SeedSequence([seed, 0x4C4F4F, t]).generate_state(1, np.uint64)[0])


def loo_evaluate(data: HindcastDataset, prior: Optional[PriorSpec] = None,
                 cfg: Optional[SamplerConfig] = None) -> LooResult:
    """Leave-one-out predictions and Ignorance scores of the three methods.

    For year t the posterior fit masks ``y_t`` but keeps the ensemble
    ``x_t``; the benchmarks are trained on the remaining years.  Each refit
    uses a sub-seed derived from ``cfg.seed`` and ``t``.
    """
    if data.n_years < 4:
        raise ValueError("leave-one-out evaluation needs N >= 4")
    cfg = SamplerConfig() if cfg is None else cfg
    preds = {m: [] for m in METHODS}
    scores = {m: [] for m in METHODS}
    capped = {m: [] for m in METHODS}
    rhats, means, ok = [], [], True
    for t in range(data.n_years):
        year = int(data.years[t])
        train = data.drop_year(t)
        xbar_t = float(data.ens[t].mean())
        mask = np.ones(data.n_years)
        mask[t] = 0.0
        ch = sample_posterior(data, prior, replace(cfg, seed=year_seed(cfg.seed, t)), obs_mask=mask)
        diag = diagnostics(ch)
        rhats.append(max((v for v in diag.rhat.values() if np.isfinite(v)), default=1.0))
        ok = ok and diag.passed
        means.append(ModelParams(**{k: float(np.mean(ch.draws[k])) for k in PARAM_NAMES}))
        dists = {
            "climatology": climatology_baseline(train, year),
            "regression": regression_benchmark(train, xbar_t, year),
            "posterior_predictive": posterior_predictive(ch, data.ens[t]),
        }
        for m, dist in dists.items():
            s, c = ignorance(dist, data.obs[t], return_flag=True)
            preds[m].append(dist)
            scores[m].append(s)
            capped[m].append(c)
    table = ScoreTable(np.array(data.years), {m: np.array(v) for m, v in scores.items()}, capped)
    return LooResult(table, preds, rhats, ok, means)
