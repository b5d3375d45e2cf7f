from .diagnostics import DiagnosticsReport, diagnostics, effective_sample_size, split_rhat
from .gibbs import (ChainSet, GibbsState, SamplerConfig, SufficientData, chain_rng,
                    full_conditionals, sample_posterior)
from .priors import PRESETS, PriorSpec, UniformPrior, prior_predictive
