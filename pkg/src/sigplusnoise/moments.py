"""Summary statistics and method-of-moments point estimates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import HindcastDataset, ModelParams

VARIANCE_FLOOR = 1e-8


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class SummaryStats:
    """First and second sample moments of a hindcast, all with 1/N divisors.

    ``v_within`` is the average within-ensemble variance (divisor N*R) and
    ``member_mean_var`` the variance across the R per-member time means
    (divisor R).
    """

    m_x: float
    m_y: float
    v_xbar: float
    v_y: float
    s_xbary: float
    v_within: float
    member_mean_var: float

    @property
    def r_xbary(self) -> float:
        den = np.sqrt(self.v_xbar * self.v_y)
        return float(self.s_xbary / den) if den > 0 else float("nan")

    def as_dict(self) -> dict:
        return {k: float(v) for k, v in self.__dict__.items()}


@dataclass(frozen=True)
class MomentEstimate:
    params: ModelParams
    sigma2_s: float
    sigma2_eps: float
    sigma2_eta: float
    # names of estimates that were clamped to the variance floor
    flags: tuple = field(default_factory=tuple)

    @property
    def clamped(self) -> bool:
        return bool(self.flags)


def summarize(data: HindcastDataset) -> SummaryStats:
    x, y = data.ens, data.obs
    xbar = x.mean(axis=1)
    m_x, m_y = xbar.mean(), y.mean()
    dx, dy = xbar - m_x, y - m_y
    member_means = x.mean(axis=0)
    return SummaryStats(
        m_x=float(m_x),
        m_y=float(m_y),
        v_xbar=float(np.mean(dx * dx)),
        v_y=float(np.mean(dy * dy)),
        s_xbary=float(np.mean(dx * dy)),
        v_within=float(np.mean((x - xbar[:, None]) ** 2)),
        member_mean_var=float(np.mean((member_means - member_means.mean()) ** 2)),
    )


def moment_estimate(stats: SummaryStats, R: int) -> MomentEstimate:
    """Equate model moments with sample moments and solve for the parameters.

    Variance estimates that come out non-positive are clamped to
    ``VARIANCE_FLOOR`` and named in ``flags``.  When ``v_xbar < v_within / R``
    the implied signal variance is negative; it is clamped too (flag
    ``"beta"``), which keeps the slope's sign equal to that of ``s_xbary``.
    """
    if R < 2:
        raise EstimationError("R must be >= 2")
    if stats.s_xbary == 0:
        raise EstimationError("zero ensemble-mean/observation covariance: slope undefined")
    flags = []

    sigma2_eta = stats.v_within
    if sigma2_eta <= 0:
        sigma2_eta = VARIANCE_FLOOR
        flags.append("sigma2_eta")

    signal_var = stats.v_xbar - stats.v_within / R
    if signal_var <= 0:
        # slope would carry the wrong sign; keep it at the smallest usable magnitude
        signal_var = VARIANCE_FLOOR
        flags.append("beta")
    beta = signal_var / stats.s_xbary
    # s_xbary / beta = s_xbary^2 / signal_var > 0 once signal_var is positive
    sigma2_s = stats.s_xbary / beta

    sigma2_eps = stats.v_y - sigma2_s
    if sigma2_eps <= 0:
        sigma2_eps = VARIANCE_FLOOR
        flags.append("sigma2_eps")

    params = ModelParams(
        mu_x=stats.m_x,
        mu_y=stats.m_y,
        beta=float(beta),
        sigma_s=float(np.sqrt(sigma2_s)),
        sigma_eps=float(np.sqrt(sigma2_eps)),
        sigma_eta=float(np.sqrt(sigma2_eta)),
    )
    return MomentEstimate(params, float(sigma2_s), float(sigma2_eps), float(sigma2_eta), tuple(flags))
