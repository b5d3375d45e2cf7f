"""Prior distributions on the model parameters and prior-predictive checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np
from scipy import special

from ..model import DerivedDiagnostics, ModelParams, derived_diagnostics


@dataclass(frozen=True)
class PriorSpec:
    """Independent Normal priors on locations and slope, Inverse-Gamma on variances.

    Normal priors are ``(location, scale)``; Inverse-Gamma priors are
    ``(shape, scale)`` with density proportional to ``v**(-a-1) * exp(-b/v)``
    and act on the *variances* ``sigma**2``.
    """

    mu_x_prior: Tuple[float, float] = (0.0, 30.0)
    mu_y_prior: Tuple[float, float] = (0.0, 30.0)
    beta_prior: Tuple[float, float] = (1.0, 0.7)
    sigma2_s_prior: Tuple[float, float] = (2.0, 25.0)
    sigma2_eps_prior: Tuple[float, float] = (3.0, 100.0)
    sigma2_eta_prior: Tuple[float, float] = (3.0, 100.0)

    def __post_init__(self):
        for name in ("mu_x_prior", "mu_y_prior", "beta_prior"):
            loc, scale = getattr(self, name)
            if not (math.isfinite(loc) and scale > 0):
                raise ValueError(f"{name}: need finite location and positive scale")
        for name in ("sigma2_s_prior", "sigma2_eps_prior", "sigma2_eta_prior"):
            a, b = getattr(self, name)
            if not (a > 0 and b > 0):
                raise ValueError(f"{name}: Inverse-Gamma shape and scale must be positive")

    def with_sigma2_s(self, a: float, b: float) -> "PriorSpec":
        return replace(self, sigma2_s_prior=(float(a), float(b)))

    def sample(self, n: int, rng: np.random.Generator) -> ModelParams:
        def inv_gamma_sd(ab):
            a, b = ab
            return np.sqrt(b / rng.gamma(a, size=n))

        return ModelParams(
            mu_x=rng.normal(*self.mu_x_prior, size=n),
            mu_y=rng.normal(*self.mu_y_prior, size=n),
            beta=rng.normal(*self.beta_prior, size=n),
            sigma_s=inv_gamma_sd(self.sigma2_s_prior),
            sigma_eps=inv_gamma_sd(self.sigma2_eps_prior),
            sigma_eta=inv_gamma_sd(self.sigma2_eta_prior),
        )

    def log_density(self, params: ModelParams) -> float:
        """Log prior density of ``(mu_x, mu_y, beta, sigma_s^2, sigma_eps^2, sigma_eta^2)``."""
        out = 0.0
        for value, (loc, scale) in ((params.mu_x, self.mu_x_prior),
                                    (params.mu_y, self.mu_y_prior),
                                    (params.beta, self.beta_prior)):
            out += normal_logpdf(value, loc, scale * scale)
        for sd, ab in ((params.sigma_s, self.sigma2_s_prior),
                       (params.sigma_eps, self.sigma2_eps_prior),
                       (params.sigma_eta, self.sigma2_eta_prior)):
            out += inv_gamma_logpdf(np.square(sd), *ab)
        return out

    def to_dict(self) -> dict:
        return {k: list(v) for k, v in self.__dict__.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "PriorSpec":
        return cls(**{k: tuple(float(x) for x in v) for k, v in d.items()})


@dataclass(frozen=True)
class UniformPrior:
    """Flat priors on standard deviations and slope, for prior-predictive comparison only.

    Not conjugate, so it cannot drive the Gibbs sampler.
    """

    sigma_upper: float = 30.0
    beta_range: Tuple[float, float] = (-1.0, 2.0)
    mu_prior: Tuple[float, float] = (0.0, 30.0)

    def sample(self, n: int, rng: np.random.Generator) -> ModelParams:
        u = rng.uniform(0.0, self.sigma_upper, size=(3, n))
        return ModelParams(
            mu_x=rng.normal(*self.mu_prior, size=n),
            mu_y=rng.normal(*self.mu_prior, size=n),
            beta=rng.uniform(*self.beta_range, size=n),
            sigma_s=u[0],
            sigma_eps=u[1],
            sigma_eta=u[2],
        )


PRESETS = {
    "default": PriorSpec(),
    "uniform": UniformPrior(),
}


def normal_logpdf(x, mean, var):
    return -0.5 * np.log(2 * np.pi * var) - 0.5 * np.square(x - mean) / var


def inv_gamma_logpdf(v, a, b):
    return a * np.log(b) - special.gammaln(a) - (a + 1) * np.log(v) - b / v


def inv_gamma_sd_moments(a: float, b: float) -> Tuple[float, float]:
    """Exact mean and standard deviation of ``sigma`` when ``sigma**2 ~ InvGamma(a, b)``.

    The mean needs ``a > 1/2`` and the standard deviation ``a > 1``.
    """
    mean = math.sqrt(b) * math.exp(special.gammaln(a - 0.5) - special.gammaln(a))
    return mean, math.sqrt(b / (a - 1) - mean * mean)


@dataclass
class PriorPredictive:
    params: ModelParams
    diagnostics: DerivedDiagnostics

    @property
    def rho(self) -> np.ndarray:
        return self.diagnostics.rho

    @property
    def prob_snr_obs_gt_mod(self) -> float:
        return float(np.mean(self.diagnostics.snr_obs > self.diagnostics.snr_mod))

    def summary(self) -> dict:
        d = self.diagnostics
        return {
            "draws": int(np.size(d.rho)),
            "rho_mean": float(np.mean(d.rho)),
            "rho_sd": float(np.std(d.rho)),
            "rho_quantiles": dict(zip(("2.5", "25", "50", "75", "97.5"),
                                      np.percentile(d.rho, [2.5, 25, 50, 75, 97.5]).tolist())),
            "prob_snr_obs_gt_snr_mod": self.prob_snr_obs_gt_mod,
            "sigma_s_mean": float(np.mean(self.params.sigma_s)),
            "sigma_s_sd": float(np.std(self.params.sigma_s)),
            "sigma_eps_mean": float(np.mean(self.params.sigma_eps)),
            "sigma_eta_mean": float(np.mean(self.params.sigma_eta)),
        }


def prior_predictive(prior, R: int, draws: int, seed: int = 0) -> PriorPredictive:
    """Monte-Carlo draws from the prior mapped through the derived diagnostics."""
    rng = np.random.Generator(np.random.Philox(seed))
    params = prior.sample(draws, rng)
    return PriorPredictive(params, derived_diagnostics(params, R))
