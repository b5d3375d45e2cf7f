"""Bayesian signal-plus-noise analysis of ensemble hindcasts."""

from .model import (DegenerateModelError, DerivedDiagnostics, HindcastDataset, JointMoments,
                    ModelParams, SignalPath, conditional_predictive, derived_diagnostics,
                    joint_moments, log_likelihood, population_correlation, simulate_hindcast)
from .moments import MomentEstimate, SummaryStats, moment_estimate, summarize
from .inference import (ChainSet, PriorSpec, SamplerConfig, diagnostics, prior_predictive,
                        sample_posterior)

__version__ = "0.1.0"
