"""Predictive skill of alternative hindcast designs (hindcast length vs ensemble size)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .inference.gibbs import ChainSet
from .model import ModelParams, sample_correlation, simulate_ensemble_mean
from .summaries import BOX_PERCENTILES, kde_mode, percentile_dict

DEFAULT_BUDGETS = (240, 480, 960)
DEFAULT_LENGTHS = (10, 20, 40)


def default_grid(budgets: Iterable[int] = DEFAULT_BUDGETS,
                 lengths: Iterable[int] = DEFAULT_LENGTHS) -> list:
    """Every (N, R) with N from ``lengths`` that divides each budget exactly."""
    pairs = []
    for b in budgets:
        for n in lengths:
            if b % n == 0 and b // n >= 2:
                pairs.append((n, b // n))
    return pairs


@dataclass
class DesignCell:
    N: int
    R: int
    samples: np.ndarray = field(repr=False)

    @property
    def budget(self) -> int:
        return self.N * self.R

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))

    @property
    def percentiles(self) -> np.ndarray:
        return np.percentile(self.samples, BOX_PERCENTILES)

    @property
    def iqr(self) -> float:
        q25, q75 = np.percentile(self.samples, [25, 75])
        return float(q75 - q25)

    @property
    def mode(self) -> float:
        return kde_mode(self.samples)

    def summary(self) -> dict:
        return {
            "N": self.N, "R": self.R, "budget": self.budget,
            "n": int(self.samples.size), "mean": self.mean, "mode": self.mode, "iqr": self.iqr,
            "percentiles": percentile_dict(self.samples),
        }


@dataclass
class DesignGrid:
    cells: list

    def cell(self, N: int, R: int) -> DesignCell:
        for c in self.cells:
            if (c.N, c.R) == (N, R):
                return c
        raise KeyError((N, R))

    def by_budget(self) -> dict:
        out = {}
        for c in sorted(self.cells, key=lambda c: (c.budget, -c.N)):
            out.setdefault(c.budget, []).append(c)
        return out


def _validate(grid: Sequence[Tuple[int, int]]) -> list:
    pairs = [(int(n), int(r)) for n, r in grid]
    if not pairs:
        raise ValueError("design grid is empty")
    for n, r in pairs:
        if n < 3 or r < 2:
            raise ValueError(f"invalid design ({n}, {r}): need N >= 3 and R >= 2")
    if len(set(pairs)) != len(pairs):
        raise ValueError("design grid has duplicate pairs")
    return pairs


def design_sweep(chains: ChainSet, grid: Optional[Sequence[Tuple[int, int]]] = None,
                 draws_per_pair: int = 100_000, seed: int = 0, chunk: int = 20_000) -> DesignGrid:
    """Posterior predictive sample correlation for every (N, R) in ``grid``.

    Draw ``i`` of a cell uses posterior sample ``i mod n_samples`` (cycling
    when more draws than samples are requested).  Each cell has its own
    random stream derived from ``(seed, N, R)``, so cells can be computed in
    any order or in parallel.
    """
    pairs = _validate(default_grid() if grid is None else grid)
    if draws_per_pair < 1:
        raise ValueError("draws_per_pair must be positive")
    p = chains.params()
    n_samples = np.size(p.beta)
    cells = []
    for N, R in pairs:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, N, R])))
        out = np.empty(draws_per_pair)
        for start in range(0, draws_per_pair, chunk):
            idx = np.arange(start, min(start + chunk, draws_per_pair)) % n_samples
            y, xbar = simulate_ensemble_mean(p[idx], N, R, rng)
            out[start:start + idx.size] = sample_correlation(xbar, y)
        cells.append(DesignCell(N, R, out[np.isfinite(out)]))
    return DesignGrid(cells)
