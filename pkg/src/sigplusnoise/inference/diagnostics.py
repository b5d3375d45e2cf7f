"""Split-chain potential scale reduction and effective sample size."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..model import PARAM_NAMES


class DiagnosticsWarning(UserWarning):
    pass


def _split(x: np.ndarray) -> np.ndarray:
    """(chains, draws) -> (2*chains, draws//2), dropping the middle draw if odd."""
    x = np.asarray(x, dtype=float)
    half = x.shape[1] // 2
    return np.concatenate([x[:, :half], x[:, x.shape[1] - half:]], axis=0)


def split_rhat(x) -> float:
    """Potential scale reduction factor on half-chains.

    Returns ``nan`` when every half-chain is constant.
    """
    x = _split(x)
    m, n = x.shape
    W = np.mean(np.var(x, axis=1, ddof=1))
    B = n * np.var(x.mean(axis=1), ddof=1)
    if W == 0:
        return float("nan") if B == 0 else float("inf")
    var_plus = (n - 1) / n * W + B / n
    return float(np.sqrt(var_plus / W))


def _autocov(x: np.ndarray) -> np.ndarray:
    """Autocovariance (biased, lag 0..n-1) of each row via FFT."""
    n = x.shape[1]
    xc = x - x.mean(axis=1, keepdims=True)
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, nfft, axis=1)
    return np.fft.irfft(f * np.conj(f), nfft, axis=1)[:, :n] / n


def effective_sample_size(x) -> float:
    """Multi-chain ESS with Geyer's initial monotone sequence, on split chains."""
    x = _split(x)
    m, n = x.shape
    acov = _autocov(x)
    chain_var = acov[:, 0] * n / (n - 1)
    W = chain_var.mean()
    if W == 0:
        return float(m * n)
    var_plus = W * (n - 1) / n + (np.var(x.mean(axis=1), ddof=1) if m > 1 else 0.0)
    rho = 1.0 - (W - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    # sum consecutive pairs while positive, enforcing monotone decrease
    total = 0.0
    prev = np.inf
    for t in range(0, n - 1, 2):
        pair = rho[t] + rho[t + 1]
        if pair < 0:
            break
        pair = min(pair, prev)
        prev = pair
        total += pair
    tau = max(-1.0 + 2.0 * total, 1e-12)
    # capped at the number of draws (no credit for antithetic chains)
    return float(min(m * n / tau, m * n))


@dataclass
class DiagnosticsReport:
    rhat: dict
    ess: dict
    threshold: float
    warnings: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(not (r > self.threshold) for r in self.rhat.values())

    def to_dict(self) -> dict:
        return {
            "rhat": {k: float(v) for k, v in self.rhat.items()},
            "ess": {k: float(v) for k, v in self.ess.items()},
            "rhat_threshold": self.threshold,
            "passed": self.passed,
            "warnings": list(self.warnings),
        }


def diagnostics(chains, threshold: float | None = None) -> DiagnosticsReport:
    """R-hat and ESS for every scalar parameter of a :class:`ChainSet`.

    Zero-variance parameters get ``rhat = nan``; they count as passing and are
    listed in ``warnings``.
    """
    if threshold is None:
        threshold = chains.config.rhat_threshold
    if chains.n_chains < 2 or chains.n_draws < 10:
        raise ValueError("diagnostics need at least 2 chains with 10 retained draws each")
    rhat, ess, notes = {}, {}, []
    for name in PARAM_NAMES:
        x = chains.draws[name]
        if np.ptp(x) == 0:
            rhat[name] = float("nan")
            ess[name] = float(x.size)
            notes.append(f"{name}: constant chains, R-hat undefined")
            continue
        rhat[name] = split_rhat(x)
        ess[name] = effective_sample_size(x)
    for msg in notes:
        warnings.warn(msg, DiagnosticsWarning, stacklevel=2)
    return DiagnosticsReport(rhat, ess, threshold, notes)
