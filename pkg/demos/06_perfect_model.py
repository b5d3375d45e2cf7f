"""Perfect-model check: treat one ensemble member as if it were the observation.

If the model were exchangeable with reality, the event probabilities from
these refits would look like those from the real observation.
"""

from sigplusnoise.inference.gibbs import SamplerConfig
from sigplusnoise.io import load_reference_dataset
from sigplusnoise.verification import perfect_model_check

data = load_reference_dataset()
cfg = SamplerConfig(iterations=4000, warmup=500, seed=1)
res = perfect_model_check(data, cfg=cfg)
for k, v in res.report.probabilities.items():
    print(f"Pr({k}) averaged over {len(res.per_member)} members: {v:.3f}")
