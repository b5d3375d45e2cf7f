"""Synthetic hindcasts with prescribed summary statistics.

Under the signal-plus-noise model the marginal likelihood of the parameters
depends on the data only through the Table-1 style moments of
``(xbar_t, y_t)`` and the pooled within-ensemble variance.  A dataset that
matches those exactly therefore carries the same information about the
parameters as the original one, which lets published analyses be rerun
without the raw series.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import HindcastDataset
from .moments import SummaryStats

#: Published summary statistics of the 1992-2011 winter NAO hindcast (hPa, hPa^2).
NAO_TARGETS = dict(m_x=23.42, m_y=20.94, v_xbar=5.24, v_y=67.12, s_xbary=11.55, v_within=62.17)


@dataclass(frozen=True)
class SurrogateSpec:
    """Target statistics plus the shape of the dataset to build.

    ``member_mean_var`` defaults to ``v_within / N``, the value expected for
    exchangeable members.  ``excursion_years`` lists (negative or positive)
    row indices whose anomalies are drawn with ``excursion_scale`` times the
    spread of the others before the moment constraints are imposed; the
    constraints still hold exactly, only the trajectory shape changes.
    """

    m_x: float
    m_y: float
    v_xbar: float
    v_y: float
    s_xbary: float
    v_within: float
    N: int
    R: int
    member_mean_var: Optional[float] = None
    first_year: int = 1
    excursion_years: Sequence[int] = field(default_factory=tuple)
    excursion_scale: float = 1.0

    @property
    def target_member_mean_var(self) -> float:
        if self.member_mean_var is None:
            return self.v_within / self.N
        return self.member_mean_var

    def check(self) -> None:
        if self.N < 3 or self.R < 2:
            raise ValueError("surrogate needs N >= 3 and R >= 2")
        for name in ("v_xbar", "v_y", "v_within"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        mmv = self.target_member_mean_var
        if mmv < 0 or mmv > self.v_within * (1 + 1e-12):
            raise ValueError("member_mean_var must lie in [0, v_within]")
        if self.s_xbary**2 > self.v_xbar * self.v_y * (1 + 1e-12):
            raise ValueError("|s_xbary| exceeds sqrt(v_xbar * v_y)")
        if self.excursion_scale <= 0:
            raise ValueError("excursion_scale must be positive")

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["excursion_years"] = list(self.excursion_years)
        d["member_mean_var"] = self.target_member_mean_var
        return d


def nao_surrogate_spec(**overrides) -> SurrogateSpec:
    kw = dict(NAO_TARGETS, N=20, R=24, first_year=1992)
    kw.update(overrides)
    return SurrogateSpec(**kw)


def _psd_sqrt(cov: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(cov)
    return v @ np.diag(np.sqrt(np.clip(w, 0.0, None))) @ v.T


def _rescale(a: np.ndarray, target_ss: float) -> np.ndarray:
    ss = float(np.sum(a * a))
    if target_ss <= 0 or ss == 0:
        return np.zeros_like(a)
    return a * np.sqrt(target_ss / ss)


def make_surrogate(spec: SurrogateSpec, seed: int) -> HindcastDataset:
    """Random dataset whose :func:`~sigplusnoise.moments.summarize` equals the targets.

    Random draws are centred, whitened to unit sample covariance and then
    coloured with the target covariance, which pins every first and second
    moment exactly; the within-ensemble deviations are split into a
    per-member offset and a doubly-centred remainder, each rescaled to its
    target sum of squares.
    """
    spec.check()
    N, R = spec.N, spec.R
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0x5A4D])))

    z = rng.standard_normal((N, 2))
    if len(spec.excursion_years):
        z[np.asarray(spec.excursion_years)] *= spec.excursion_scale
    z -= z.mean(axis=0)
    white = z @ np.linalg.inv(np.linalg.cholesky(z.T @ z / N)).T
    cov = np.array([[spec.v_xbar, spec.s_xbary], [spec.s_xbary, spec.v_y]])
    pairs = white @ _psd_sqrt(cov) + np.array([spec.m_x, spec.m_y])
    xbar, obs = pairs[:, 0], pairs[:, 1]

    e = rng.standard_normal((N, R))
    offsets = e.mean(axis=0)
    offsets -= offsets.mean()
    resid = e - e.mean(axis=1, keepdims=True) - e.mean(axis=0, keepdims=True) + e.mean()
    mmv = spec.target_member_mean_var
    offsets = _rescale(offsets, R * mmv)
    resid = _rescale(resid, N * R * (spec.v_within - mmv))
    ens = xbar[:, None] + offsets[None, :] + resid

    years = spec.first_year + np.arange(N)
    return HindcastDataset(years=years, obs=obs, ens=ens)


def stats_of_spec(spec: SurrogateSpec) -> SummaryStats:
    return SummaryStats(spec.m_x, spec.m_y, spec.v_xbar, spec.v_y, spec.s_xbary, spec.v_within,
                        spec.target_member_mean_var)
