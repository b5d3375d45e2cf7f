"""Moment estimates and plug-in diagnostics for the bundled hindcast.

Run with ``python3 demos/01_moments.py``.  Everything here is closed form,
so the numbers are exact and instant.
"""

from sigplusnoise.io import load_reference_dataset
from sigplusnoise.model import derived_diagnostics
from sigplusnoise.moments import moment_estimate, summarize

data = load_reference_dataset()
stats = summarize(data)
print(f"{data.n_years} years, {data.n_members} members")
for k, v in stats.as_dict().items():
    print(f"  {k:<16}{v:10.4f}")

est = moment_estimate(stats, data.n_members)
print("\nmoment estimates")
for k, v in est.params.as_dict().items():
    print(f"  {k:<10}{v:10.4f}")

d = derived_diagnostics(est.params, data.n_members)
print(f"\nrho {d.rho:.3f}  SNR_obs {d.snr_obs:.3f}  SNR_mod {d.snr_mod:.3f}  RPC {d.rpc:.3f}")
# the plug-in rho reproduces the sample correlation of ensemble mean and obs
print(f"sample correlation {stats.s_xbary / (stats.v_xbar * stats.v_y) ** 0.5:.3f}")
