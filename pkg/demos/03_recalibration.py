"""Leave-one-out comparison of three ways to turn the ensemble into a forecast.

Twenty refits, one per withheld year, so this takes about a minute.
Lower Ignorance is better.
"""

from sigplusnoise.inference.gibbs import SamplerConfig
from sigplusnoise.io import load_reference_dataset
from sigplusnoise.prediction import loo_evaluate

data = load_reference_dataset()
res = loo_evaluate(data, cfg=SamplerConfig(seed=1))
print(res.table.as_text())
print()
for m in res.predictions:
    print(f"{m:<22}mean predictive sd {res.mean_sd(m):5.2f} hPa, "
          f"sd of predictive means {res.sd_of_means(m):5.2f} hPa")
print("all refits converged:", res.converged)

# one year's predictive distribution in detail
t = 10
pp = res.predictions["posterior_predictive"][t]
print(f"\n{data.years[t]}: obs {data.obs[t]:.2f}, 90% interval "
      f"[{pp.quantile(0.05):.2f}, {pp.quantile(0.95):.2f}]")
