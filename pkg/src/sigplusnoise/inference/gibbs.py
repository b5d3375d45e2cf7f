"""Gibbs sampler for the joint posterior of parameters and latent signal.

Every full conditional is closed form under the Normal / Inverse-Gamma
priors:

* ``s_t``, ``mu_y``, ``mu_x`` and ``beta`` are Normal,
* ``sigma_s^2``, ``sigma_eps^2`` and ``sigma_eta^2`` are Inverse-Gamma.

The data enter only through the ensemble means, the observations and the
pooled within-ensemble sum of squares, so a sweep costs O(N) regardless of R.

All chains advance together as one vectorised batch.  Chain ``k`` draws its
random numbers from its own Philox stream keyed by ``(seed, k)``, so its
output does not depend on how many other chains run alongside it.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats as sps

from ..model import PARAM_NAMES, HindcastDataset, ModelParams
from ..moments import EstimationError, moment_estimate, summarize
from .priors import PriorSpec

_BLOCK = 256  # iterations of random numbers drawn per refill


@dataclass(frozen=True)
class SamplerConfig:
    chains: int = 8
    iterations: int = 20_000
    warmup: int = 2_000
    thin: int = 4
    seed: int = 0
    rhat_threshold: float = 1.01

    def __post_init__(self):
        if self.chains < 2:
            raise ValueError("need at least 2 chains")
        if self.iterations <= self.warmup or self.warmup < 0:
            raise ValueError("iterations must exceed warmup")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def n_retained(self) -> int:
        return -(-(self.iterations - self.warmup) // self.thin)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def chain_rng(seed: int, chain: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for one chain; ``stream`` separates init from sweeps."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chain, stream])))


@dataclass
class GibbsState:
    """Sampler state; scalars have shape (C,), the signal (C, N)."""

    mu_x: np.ndarray
    mu_y: np.ndarray
    beta: np.ndarray
    sigma2_s: np.ndarray
    sigma2_eps: np.ndarray
    sigma2_eta: np.ndarray
    s: np.ndarray

    def copy(self) -> "GibbsState":
        return GibbsState(**{k: np.array(v, dtype=float) for k, v in self.__dict__.items()})


@dataclass
class SufficientData:
    """What the sampler needs from a dataset, broadcastable against (C, N).

    ``obs_weight`` is the likelihood weight times the observed-year mask;
    ``ens_weight`` is the likelihood weight applied to all ensemble terms.
    """

    y: np.ndarray
    xbar: np.ndarray
    within_ss: np.ndarray
    obs_weight: np.ndarray
    ens_weight: float
    R: int

    @property
    def N(self) -> int:
        return self.xbar.shape[-1]

    @classmethod
    def from_arrays(cls, obs, ens, obs_mask=None, likelihood_weight: float = 1.0):
        """``obs`` has shape (..., N) and ``ens`` (..., N, R); leading axes index chains."""
        obs = np.asarray(obs, dtype=float)
        ens = np.asarray(ens, dtype=float)
        xbar = ens.mean(axis=-1)
        within = np.sum((ens - xbar[..., None]) ** 2, axis=(-2, -1))
        mask = np.ones(obs.shape) if obs_mask is None else np.asarray(obs_mask, dtype=float)
        w = float(likelihood_weight)
        if not 0.0 <= w <= 1.0:
            raise ValueError("likelihood weight must lie in [0, 1]")
        y = np.where(mask > 0, obs, 0.0)
        if y.ndim == 1:
            y, xbar, mask = y[None], xbar[None], mask[None]
            within = np.atleast_1d(within)
        return cls(y=y, xbar=xbar, within_ss=within, obs_weight=w * mask, ens_weight=w,
                   R=ens.shape[-1])

    @classmethod
    def from_dataset(cls, data: HindcastDataset, obs_mask=None, likelihood_weight: float = 1.0):
        return cls.from_arrays(data.obs, data.ens, obs_mask, likelihood_weight)


# --- full conditionals -------------------------------------------------------
# Each returns the parameters of the conditional law given the current state.

def cond_s(st: GibbsState, d: SufficientData):
    w, R = d.ens_weight, d.R
    prec = (1.0 / st.sigma2_s[:, None] + d.obs_weight / st.sigma2_eps[:, None]
            + w * R * np.square(st.beta)[:, None] / st.sigma2_eta[:, None])
    num = (d.obs_weight * (d.y - st.mu_y[:, None]) / st.sigma2_eps[:, None]
           + w * R * st.beta[:, None] * (d.xbar - st.mu_x[:, None]) / st.sigma2_eta[:, None])
    return num / prec, 1.0 / prec


def cond_mu_y(st: GibbsState, d: SufficientData, prior: PriorSpec):
    m0, sd0 = prior.mu_y_prior
    prec = 1.0 / sd0**2 + d.obs_weight.sum(axis=-1) / st.sigma2_eps
    num = m0 / sd0**2 + np.sum(d.obs_weight * (d.y - st.s), axis=-1) / st.sigma2_eps
    return num / prec, 1.0 / prec


def cond_mu_x(st: GibbsState, d: SufficientData, prior: PriorSpec):
    m0, sd0 = prior.mu_x_prior
    wR = d.ens_weight * d.R
    prec = 1.0 / sd0**2 + wR * d.N / st.sigma2_eta
    num = m0 / sd0**2 + wR * np.sum(d.xbar - st.beta[:, None] * st.s, axis=-1) / st.sigma2_eta
    return num / prec, 1.0 / prec


def cond_beta(st: GibbsState, d: SufficientData, prior: PriorSpec):
    b0, sd0 = prior.beta_prior
    wR = d.ens_weight * d.R
    prec = 1.0 / sd0**2 + wR * np.sum(st.s * st.s, axis=-1) / st.sigma2_eta
    num = b0 / sd0**2 + wR * np.sum(st.s * (d.xbar - st.mu_x[:, None]), axis=-1) / st.sigma2_eta
    return num / prec, 1.0 / prec


def cond_sigma2_s(st: GibbsState, d: SufficientData, prior: PriorSpec):
    a, b = prior.sigma2_s_prior
    return a + 0.5 * d.N, b + 0.5 * np.sum(st.s * st.s, axis=-1)


def cond_sigma2_eps(st: GibbsState, d: SufficientData, prior: PriorSpec):
    a, b = prior.sigma2_eps_prior
    r = d.y - st.mu_y[:, None] - st.s
    return (a + 0.5 * d.obs_weight.sum(axis=-1),
            b + 0.5 * np.sum(d.obs_weight * r * r, axis=-1))


def cond_sigma2_eta(st: GibbsState, d: SufficientData, prior: PriorSpec):
    a, b = prior.sigma2_eta_prior
    r = d.xbar - st.mu_x[:, None] - st.beta[:, None] * st.s
    ss = d.within_ss + d.R * np.sum(r * r, axis=-1)
    return a + 0.5 * d.ens_weight * d.N * d.R, b + 0.5 * d.ens_weight * ss


def _gamma_shapes(d: SufficientData, prior: PriorSpec, n_chains: int) -> np.ndarray:
    """Inverse-Gamma shapes of the three variance conditionals; fixed for a run."""
    n_obs = np.broadcast_to(d.obs_weight.sum(axis=-1), (n_chains,))
    shapes = np.empty((n_chains, 3))
    shapes[:, 0] = prior.sigma2_s_prior[0] + 0.5 * d.N
    shapes[:, 1] = prior.sigma2_eps_prior[0] + 0.5 * n_obs
    shapes[:, 2] = prior.sigma2_eta_prior[0] + 0.5 * d.ens_weight * d.N * d.R
    return shapes


def _sweep(st: GibbsState, d: SufficientData, prior: PriorSpec, z: np.ndarray, g: np.ndarray):
    """One deterministic-scan sweep, in place, using standard normals ``z`` (C, N+3)
    and standard gamma draws ``g`` (C, 3) with the shapes of :func:`_gamma_shapes`."""
    N = d.N
    m, v = cond_s(st, d)
    st.s = m + np.sqrt(v) * z[:, :N]
    m, v = cond_mu_y(st, d, prior)
    st.mu_y = m + np.sqrt(v) * z[:, N]
    m, v = cond_mu_x(st, d, prior)
    st.mu_x = m + np.sqrt(v) * z[:, N + 1]
    m, v = cond_beta(st, d, prior)
    st.beta = m + np.sqrt(v) * z[:, N + 2]
    st.sigma2_s = cond_sigma2_s(st, d, prior)[1] / g[:, 0]
    st.sigma2_eps = cond_sigma2_eps(st, d, prior)[1] / g[:, 1]
    st.sigma2_eta = cond_sigma2_eta(st, d, prior)[1] / g[:, 2]
    return st


def full_conditionals(data: SufficientData, prior: PriorSpec, state: GibbsState,
                      rng: np.random.Generator) -> GibbsState:
    """Return the state after one Gibbs sweep driven by ``rng``."""
    st = state.copy()
    C = st.beta.shape[0]
    z = rng.standard_normal((C, data.N + 3))
    g = rng.standard_gamma(_gamma_shapes(data, prior, C))
    return _sweep(st, data, prior, z, g)


# --- chain output ------------------------------------------------------------

@dataclass
class ChainSet:
    """Retained draws of all chains.

    ``draws[name]`` has shape (chains, retained) for each of the six
    parameters (standard deviations, not variances) and ``signal`` has shape
    (chains, retained, N).
    """

    draws: dict
    signal: np.ndarray
    R: int
    config: SamplerConfig
    prior: PriorSpec
    data_hash: str = ""
    obs_mask: Optional[np.ndarray] = None
    likelihood_weight: float = 1.0
    years: Optional[np.ndarray] = None

    @property
    def n_chains(self) -> int:
        return self.signal.shape[0]

    @property
    def n_draws(self) -> int:
        return self.signal.shape[1]

    @property
    def N(self) -> int:
        return self.signal.shape[2]

    def flat(self, name: str) -> np.ndarray:
        if name == "signal":
            return self.signal.reshape(-1, self.N)
        return self.draws[name].reshape(-1)

    def params(self) -> ModelParams:
        """All retained draws, chain-major, as a batched :class:`ModelParams`."""
        return ModelParams(**{k: self.flat(k) for k in PARAM_NAMES})

    def heldout_index(self) -> int:
        if self.obs_mask is None:
            raise ValueError("chains were fitted with every observation")
        idx = np.flatnonzero(np.asarray(self.obs_mask) == 0)
        if idx.size != 1:
            raise ValueError("chains must have exactly one held-out observation")
        return int(idx[0])

    @classmethod
    def collapsed(cls, params: ModelParams, signal, R: int, n_chains: int = 2,
                  n_draws: int = 10) -> "ChainSet":
        """Degenerate chain set repeating one parameter point; handy for limits and tests."""
        signal = np.broadcast_to(np.asarray(signal, dtype=float), (n_chains, n_draws, np.size(signal)))
        draws = {k: np.full((n_chains, n_draws), float(v)) for k, v in params.as_dict().items()}
        cfg = SamplerConfig(chains=n_chains, iterations=n_draws + 1, warmup=0, thin=1)
        return cls(draws=draws, signal=np.array(signal), R=R, config=cfg, prior=PriorSpec())


def dataset_hash(data: HindcastDataset) -> str:
    h = hashlib.sha256()
    for arr in (data.years.astype(np.int64), data.obs, data.ens):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


def _initial_state(d: SufficientData, prior: PriorSpec, obs, ens, masks, rngs) -> GibbsState:
    """Moment estimates jittered per chain; clamped or undefined estimates fall back
    to prior medians."""
    C = len(rngs)
    medians = {
        name: sps.invgamma.median(a, scale=b)
        for name, (a, b) in (("sigma2_s", prior.sigma2_s_prior),
                             ("sigma2_eps", prior.sigma2_eps_prior),
                             ("sigma2_eta", prior.sigma2_eta_prior))
    }
    cache = {}
    cols = {k: np.empty(C) for k in ("mu_x", "mu_y", "beta", "sigma2_s", "sigma2_eps", "sigma2_eta")}
    for k, rng in enumerate(rngs):
        j = 0 if obs.shape[0] == 1 else k
        if j not in cache:
            keep = masks[j] > 0
            try:
                sub = HindcastDataset.from_arrays(obs[j][keep], ens[j][keep])
                est = moment_estimate(summarize(sub), ens.shape[-1])
                start = {"mu_x": est.params.mu_x, "mu_y": est.params.mu_y, "beta": est.params.beta,
                         "sigma2_s": est.sigma2_s, "sigma2_eps": est.sigma2_eps,
                         "sigma2_eta": est.sigma2_eta}
                if est.flags:
                    start.update({f: medians[f] for f in est.flags if f in medians})
                    if "beta" in est.flags:
                        start["beta"] = prior.beta_prior[0]
                        start["sigma2_s"] = medians["sigma2_s"]
            except (EstimationError, ValueError):
                start = {"mu_x": float(ens[j].mean()), "mu_y": float(obs[j][keep].mean()),
                         "beta": prior.beta_prior[0], **medians}
            cache[j] = start
        start = cache[j]
        for name in ("mu_x", "mu_y", "beta"):
            cols[name][k] = start[name] + rng.standard_normal()
        for name in ("sigma2_s", "sigma2_eps", "sigma2_eta"):
            cols[name][k] = start[name] * rng.uniform(0.8, 1.2) ** 2
    return GibbsState(**cols, s=np.zeros((C, d.N)))


def run_chains(obs, ens, prior: PriorSpec, cfg: SamplerConfig, obs_mask=None,
               likelihood_weight: float = 1.0, chain_ids: Optional[Sequence[int]] = None):
    """Run ``cfg.chains`` chains (or the chains named in ``chain_ids``).

    ``obs`` (N,) / ``ens`` (N, R) give one dataset shared by all chains; with a
    leading axis of length C they give one dataset per chain.
    Returns ``(draws, signal)`` with shapes as in :class:`ChainSet`.
    """
    obs = np.asarray(obs, dtype=float)
    ens = np.asarray(ens, dtype=float)
    if obs.ndim == 1:
        obs, ens = obs[None], ens[None]
        shared = True
    else:
        shared = False
    chain_ids = list(range(cfg.chains)) if chain_ids is None else list(chain_ids)
    C = len(chain_ids)
    if not shared and obs.shape[0] != C:
        raise ValueError("per-chain data must have one dataset per chain")
    if obs_mask is None:
        masks = np.ones(obs.shape)
    else:
        masks = np.broadcast_to(np.asarray(obs_mask, dtype=float), obs.shape)
    d = SufficientData.from_arrays(obs, ens, masks, likelihood_weight)

    init_rngs = [chain_rng(cfg.seed, c, stream=1) for c in chain_ids]
    rngs = [chain_rng(cfg.seed, c, stream=0) for c in chain_ids]
    st = _initial_state(d, prior, obs, ens, masks, init_rngs)
    shapes = _gamma_shapes(d, prior, C)

    S = cfg.n_retained
    out = {name: np.empty((C, S)) for name in ("mu_x", "mu_y", "beta", "sigma_s", "sigma_eps", "sigma_eta")}
    signal = np.empty((C, S, d.N))
    z = g = None
    kept = 0
    for it in range(cfg.iterations):
        b = it % _BLOCK
        if b == 0:
            z = np.stack([r.standard_normal((_BLOCK, d.N + 3)) for r in rngs], axis=1)
            g = np.stack([r.standard_gamma(shapes[k], size=(_BLOCK, 3)) for k, r in enumerate(rngs)], axis=1)
        _sweep(st, d, prior, z[b], g[b])
        if it >= cfg.warmup and (it - cfg.warmup) % cfg.thin == 0:
            out["mu_x"][:, kept] = st.mu_x
            out["mu_y"][:, kept] = st.mu_y
            out["beta"][:, kept] = st.beta
            out["sigma_s"][:, kept] = np.sqrt(st.sigma2_s)
            out["sigma_eps"][:, kept] = np.sqrt(st.sigma2_eps)
            out["sigma_eta"][:, kept] = np.sqrt(st.sigma2_eta)
            signal[:, kept] = st.s
            kept += 1
    return out, signal


def sample_posterior(data: HindcastDataset, prior: Optional[PriorSpec] = None,
                     cfg: Optional[SamplerConfig] = None, obs_mask=None,
                     likelihood_weight: float = 1.0) -> ChainSet:
    """Draw from p(parameters, signal | data) with ``cfg.chains`` Gibbs chains.

    ``obs_mask`` (length N, 1 = observed) hides observations while keeping
    their ensembles, which is how leave-one-out predictive fits are made.
    ``likelihood_weight=0`` switches the data off and samples the prior.
    """
    prior = PriorSpec() if prior is None else prior
    cfg = SamplerConfig() if cfg is None else cfg
    if obs_mask is not None:
        obs_mask = np.asarray(obs_mask, dtype=float)
        if obs_mask.shape != (data.n_years,):
            raise ValueError("obs_mask must have one entry per year")
    draws, signal = run_chains(data.obs, data.ens, prior, cfg, obs_mask, likelihood_weight)
    return ChainSet(draws=draws, signal=signal, R=data.n_members, config=cfg, prior=prior,
                    data_hash=dataset_hash(data), obs_mask=obs_mask,
                    likelihood_weight=float(likelihood_weight), years=data.years)
