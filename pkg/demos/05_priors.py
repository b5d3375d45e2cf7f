"""What the priors imply before seeing data, and how much the data override them."""

from sigplusnoise.inference.gibbs import SamplerConfig
from sigplusnoise.inference.priors import PRESETS, prior_predictive
from sigplusnoise.inference.sensitivity import sensitivity_scan, sigma2_s_variants
from sigplusnoise.io import load_reference_dataset

for name, prior in PRESETS.items():
    s = prior_predictive(prior, 24, 100_000, seed=1).summary()
    print(f"{name:<8} prior rho mean {s['rho_mean']:.3f} sd {s['rho_sd']:.3f}  "
          f"Pr(SNR_obs > SNR_mod) {s['prob_snr_obs_gt_snr_mod']:.3f}")

data = load_reference_dataset()
scan = sensitivity_scan(data, sigma2_s_variants(), SamplerConfig(seed=1))
print()
for v in scan.variants:
    d = v.to_dict()
    a, b = v.prior.sigma2_s_prior
    print(f"sigma_s^2 ~ IG({a:g}, {b:g}): rho mean {d['prior_rho_mean']:.3f} -> "
          f"{d['posterior_rho_mean']:.3f}, Pr(SNR) {d['posterior_prob_snr_obs_gt_snr_mod']:.3f}")
print(f"variance of means: prior {scan.prior_mean_spread():.2e}, "
      f"posterior {scan.posterior_mean_spread():.2e}")
