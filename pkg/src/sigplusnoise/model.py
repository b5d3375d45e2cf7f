"""Signal-plus-noise model of an ensemble forecast and its verifying observation.

Observations and ensemble members share a latent Normal signal ``s_t``::

    y_t     = mu_y +        s_t + eps_t
    x_{t,r} = mu_x + beta * s_t + eta_{t,r}

with ``s_t ~ N(0, sigma_s^2)``, ``eps_t ~ N(0, sigma_eps^2)`` and
``eta_{t,r} ~ N(0, sigma_eta^2)`` all independent.  Every function here is
pure and accepts either scalar parameters or arrays of parameter draws
(broadcasting elementwise), so the same code serves point estimates and
posterior samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

__all__ = [
    "DegenerateModelError",
    "HindcastDataset",
    "ModelParams",
    "SignalPath",
    "JointMoments",
    "DerivedDiagnostics",
    "joint_moments",
    "log_likelihood",
    "population_correlation",
    "conditional_predictive",
    "derived_diagnostics",
    "simulate_hindcast",
    "simulate_ensemble_mean",
    "sample_correlation",
]

PARAM_NAMES = ("mu_x", "mu_y", "beta", "sigma_s", "sigma_eps", "sigma_eta")


class DegenerateModelError(ValueError):
    """Raised when a quantity is undefined because a variance vanishes."""


@dataclass(frozen=True)
class HindcastDataset:
    """N target periods, each with one observation and an R-member ensemble.

    Parameters
    ----------
    years : array of int, shape (N,)
        Strictly increasing labels of the target periods.
    obs : array, shape (N,)
        Verifying observations.
    ens : array, shape (N, R)
        Ensemble members; row ``t`` verifies against ``obs[t]``.

    Notes
    -----
    The type itself only requires ``N >= 1`` and ``R >= 1`` so that tiny
    instances can be used in likelihood checks.  Entry points that fit or
    analyse data call :meth:`require_size` (``N >= 3``, ``R >= 2``).
    """

    years: np.ndarray
    obs: np.ndarray
    ens: np.ndarray

    def __post_init__(self):
        years = np.asarray(self.years)
        obs = np.asarray(self.obs, dtype=float)
        ens = np.asarray(self.ens, dtype=float)
        if obs.ndim != 1 or ens.ndim != 2:
            raise ValueError("obs must be 1-D and ens 2-D")
        if ens.shape[0] != obs.shape[0] or years.shape != obs.shape:
            raise ValueError(
                f"inconsistent shapes: years {years.shape}, obs {obs.shape}, ens {ens.shape}"
            )
        if obs.size == 0 or ens.shape[1] == 0:
            raise ValueError("dataset must contain at least one year and one member")
        if not (np.all(np.isfinite(obs)) and np.all(np.isfinite(ens))):
            raise ValueError("all observations and ensemble members must be finite")
        if np.any(np.diff(years) <= 0):
            raise ValueError("years must be strictly increasing")
        for name, val in (("years", years), ("obs", obs), ("ens", ens)):
            val = val.copy()
            val.flags.writeable = False
            object.__setattr__(self, name, val)

    @classmethod
    def from_arrays(cls, obs, ens, years=None) -> "HindcastDataset":
        obs = np.asarray(obs, dtype=float)
        if years is None:
            years = np.arange(1, obs.shape[0] + 1)
        return cls(years=np.asarray(years), obs=obs, ens=np.asarray(ens, dtype=float))

    @property
    def n_years(self) -> int:
        return self.obs.shape[0]

    @property
    def n_members(self) -> int:
        return self.ens.shape[1]

    @property
    def ens_mean(self) -> np.ndarray:
        return self.ens.mean(axis=1)

    def require_size(self, min_years: int = 3, min_members: int = 2) -> None:
        if self.n_years < min_years or self.n_members < min_members:
            raise ValueError(
                f"need N >= {min_years} and R >= {min_members}, "
                f"got N={self.n_years}, R={self.n_members}"
            )

    def drop_year(self, index: int) -> "HindcastDataset":
        keep = np.arange(self.n_years) != index
        return HindcastDataset(self.years[keep], self.obs[keep], self.ens[keep])

    def transformed(self, scale: float, shift: float) -> "HindcastDataset":
        """Apply the same affine map ``v -> scale * v + shift`` to both data streams."""
        return HindcastDataset(self.years, scale * self.obs + shift, scale * self.ens + shift)


@dataclass(frozen=True)
class ModelParams:
    """The six model parameters.

    Fields may be floats or equally-shaped arrays (a batch of draws).
    Standard deviations must be finite and non-negative; zero is allowed so
    that noise-free limits can be evaluated.
    """

    mu_x: float
    mu_y: float
    beta: float
    sigma_s: float
    sigma_eps: float
    sigma_eta: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{f.name} must be finite")
            if f.name.startswith("sigma") and np.any(np.asarray(v) < 0):
                raise ValueError(f"{f.name} must be non-negative")

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def replace(self, **changes) -> "ModelParams":
        d = self.as_dict()
        d.update(changes)
        return ModelParams(**d)

    def __getitem__(self, idx) -> "ModelParams":
        return ModelParams(**{k: np.asarray(v)[idx] for k, v in self.as_dict().items()})


@dataclass(frozen=True)
class SignalPath:
    s: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        if s.ndim != 1 or not np.all(np.isfinite(s)):
            raise ValueError("signal path must be a finite 1-D array")
        object.__setattr__(self, "s", s)


@dataclass(frozen=True)
class JointMoments:
    var_y: float
    var_xi: float
    cov_xx: float
    cov_xy: float
    var_xbar: float


@dataclass(frozen=True)
class DerivedDiagnostics:
    """Scale-invariant skill measures implied by a parameter set.

    ``snr_obs`` / ``snr_mod`` are ``inf`` when the corresponding noise
    standard deviation is zero; ``infinite_snr`` flags that case.
    """

    rho: float
    snr_obs: float
    snr_mod: float
    pc_obs: float
    pc_mod: float
    rpc: float
    rpc_perf: float
    bias: float
    infinite_snr: bool = False


def joint_moments(params: ModelParams, R: int) -> JointMoments:
    """Second moments of ``(y, x_1, ..., x_R)`` and of the ensemble mean."""
    if R < 1:
        raise ValueError("R must be >= 1")
    b, s2 = params.beta, np.square(params.sigma_s)
    e2, h2 = np.square(params.sigma_eps), np.square(params.sigma_eta)
    cov_xx = b * b * s2
    return JointMoments(
        var_y=s2 + e2,
        var_xi=cov_xx + h2,
        cov_xx=cov_xx,
        cov_xy=b * s2,
        var_xbar=cov_xx + h2 / R,
    )


def log_likelihood(data: HindcastDataset, params: ModelParams, signal) -> float:
    """Log density of all observations and members given parameters and signal."""
    s = signal.s if isinstance(signal, SignalPath) else np.asarray(signal, dtype=float)
    if s.shape != (data.n_years,):
        raise ValueError(f"signal length {s.shape} does not match N={data.n_years}")
    se, sh = float(params.sigma_eps), float(params.sigma_eta)
    if se <= 0 or sh <= 0:
        raise DegenerateModelError("likelihood requires positive noise standard deviations")
    N, R = data.ens.shape
    ry = (data.obs - params.mu_y - s) / se
    rx = (data.ens - params.mu_x - params.beta * s[:, None]) / sh
    return float(
        -0.5 * N * math.log(2 * math.pi * se * se)
        - 0.5 * N * R * math.log(2 * math.pi * sh * sh)
        - 0.5 * (ry @ ry + np.sum(rx * rx))
    )


def population_correlation(params: ModelParams, R: int):
    """Correlation between the R-member ensemble mean and the observation."""
    m = joint_moments(params, R)
    denom = m.var_xbar * m.var_y
    if np.any(denom <= 0):
        raise DegenerateModelError("correlation undefined: zero variance of ensemble mean or observation")
    return m.cov_xy / np.sqrt(denom)


def conditional_predictive(params: ModelParams, xbar, R: int):
    """Mean and variance of the observation given the ensemble mean, at fixed parameters."""
    b, s2 = params.beta, np.square(params.sigma_s)
    h2 = np.square(params.sigma_eta)
    var_xbar = b * b * s2 + h2 / R
    if np.any(var_xbar <= 0):
        raise DegenerateModelError("ensemble mean has zero variance")
    slope = b * s2 / var_xbar
    mean = params.mu_y + slope * (np.asarray(xbar) - params.mu_x)
    var = np.square(params.sigma_eps) + s2 * h2 / (R * b * b * s2 + h2)
    return mean, var


def _ratio(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.where(num > 0, np.inf, 0.0))
    return out[()] if out.ndim == 0 else out


def derived_diagnostics(params: ModelParams, R: int) -> DerivedDiagnostics:
    """Correlation, signal-to-noise ratios and predictable-component ratios.

    The ratio of predictable components is ``|PC_obs| / PC_mod``, which for an
    exchangeable system reduces to ``rpc_perf = (1 + sigma_eps^2 / (R sigma_s^2))^-1``.
    """
    m = joint_moments(params, R)
    b, ss = params.beta, params.sigma_s
    se, sh = params.sigma_eps, params.sigma_eta
    rho = population_correlation(params, R)
    pc_mod = np.sqrt(_ratio(m.var_xbar, m.var_xi))
    snr_obs = _ratio(ss, se)
    snr_mod = _ratio(np.abs(b) * ss, sh)
    return DerivedDiagnostics(
        rho=rho,
        snr_obs=snr_obs,
        snr_mod=snr_mod,
        pc_obs=rho,
        pc_mod=pc_mod,
        rpc=_ratio(np.abs(rho), pc_mod),
        rpc_perf=_ratio(R * np.square(ss), R * np.square(ss) + np.square(se)),
        bias=params.mu_x - params.mu_y,
        infinite_snr=bool(np.any(np.isinf(snr_obs)) or np.any(np.isinf(snr_mod))),
    )


def simulate_hindcast(params: ModelParams, N: int, R: int, rng: np.random.Generator,
                      years=None):
    """Draw one hindcast dataset and its latent signal from scalar parameters."""
    s = params.sigma_s * rng.standard_normal(N)
    obs = params.mu_y + s + params.sigma_eps * rng.standard_normal(N)
    ens = params.mu_x + params.beta * s[:, None] + params.sigma_eta * rng.standard_normal((N, R))
    return HindcastDataset.from_arrays(obs, ens, years), SignalPath(s)


def simulate_ensemble_mean(params: ModelParams, N: int, R: int, rng: np.random.Generator,
                           signal: Optional[np.ndarray] = None):
    """Draw ``(y, xbar)`` for a batch of parameter draws.

    Uses the exact law of the R-member mean, ``xbar_t = mu_x + beta s_t +
    sigma_eta / sqrt(R) z_t``, so no full ensemble is materialised.  Output
    arrays have shape ``batch + (N,)``.  If ``signal`` is given (shape
    ``batch + (N,)``) it replaces the freshly drawn signal and ``y`` is None.
    """
    shape = np.shape(params.beta)
    col = lambda v: np.asarray(v, dtype=float)[..., None]
    if signal is None:
        s = col(params.sigma_s) * rng.standard_normal(shape + (N,))
        y = col(params.mu_y) + s + col(params.sigma_eps) * rng.standard_normal(shape + (N,))
    else:
        s, y = np.asarray(signal, dtype=float), None
    xbar = (col(params.mu_x) + col(params.beta) * s
            + col(params.sigma_eta) / math.sqrt(R) * rng.standard_normal(s.shape))
    return y, xbar


def sample_correlation(a, b):
    """Pearson correlation along the last axis (1/N moments).

    Returns ``nan`` where either series has zero variance.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    da = a - a.mean(axis=-1, keepdims=True)
    db = b - b.mean(axis=-1, keepdims=True)
    num = np.sum(da * db, axis=-1)
    den = np.sqrt(np.sum(da * da, axis=-1) * np.sum(db * db, axis=-1))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.nan)
