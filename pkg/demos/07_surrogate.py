"""Build a synthetic hindcast with chosen summary statistics and check them."""

from sigplusnoise.moments import summarize
from sigplusnoise.surrogate import make_surrogate, nao_surrogate_spec

spec = nao_surrogate_spec(N=30, R=10, s_xbary=3.0)
data = make_surrogate(spec, seed=7)
got = summarize(data).as_dict()
for k, v in spec.to_dict().items():
    if k in got:
        print(f"{k:<16}target {v:10.4f}  got {got[k]:10.4f}")
