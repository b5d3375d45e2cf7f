"""Command-line entry point.

Each subcommand writes JSON summaries and CSV plot data into the output
directory (``--out``, else ``$SIGPLUSNOISE_OUTPUT_DIR``, else
``./sigplusnoise-out``).  Exit status is 0 on success, 2 on invalid input
and 3 when a posterior fit fails its R-hat check (outputs are still written).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io
from .design import DEFAULT_BUDGETS, DEFAULT_LENGTHS, default_grid, design_sweep
from .inference.diagnostics import diagnostics
from .inference.gibbs import SamplerConfig, sample_posterior
from .inference.priors import PRESETS, PriorSpec, prior_predictive
from .inference.sensitivity import SIGMA2_S_VARIANTS, sensitivity_scan
from .model import derived_diagnostics
from .moments import moment_estimate, summarize
from .prediction import loo_evaluate
from .summaries import BOX_PERCENTILES
from .surrogate import NAO_TARGETS, make_surrogate, nao_surrogate_spec
from .verification import (correlation_fixed_obs, correlation_new_period, correlation_population,
                           excess_kurtosis, perfect_model_check, probability_report, snr_summary)

EXIT_OK, EXIT_INVALID, EXIT_NOT_CONVERGED = 0, 2, 3
HIST_EDGES = np.linspace(-1.0, 1.0, 81)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


class _UsageError(Exception):
    pass


# -- shared option groups ---------------------------------------------------

def _add_data(p):
    p.add_argument("--data", type=Path, default=None,
                   help="hindcast CSV (year,obs,m1..mR); default: bundled surrogate dataset")


def _add_out(p):
    p.add_argument("--out", type=Path, default=None, help="output directory")


def _add_seed(p):
    p.add_argument("--seed", type=int, required=True, help="random seed (64-bit unsigned)")


def _add_sampler(p, iterations=20_000, warmup=2_000, thin=4):
    g = p.add_argument_group("sampler")
    g.add_argument("--chains", type=int, default=8)
    g.add_argument("--iterations", type=int, default=iterations)
    g.add_argument("--warmup", type=int, default=warmup)
    g.add_argument("--thin", type=int, default=thin)
    g.add_argument("--rhat-threshold", type=float, default=1.01)
    g = p.add_argument_group("prior")
    g.add_argument("--prior", type=Path, default=None, help="JSON prior specification")
    g.add_argument("--sigma2-s-prior", type=float, nargs=2, metavar=("A", "B"),
                   help="Inverse-Gamma shape and scale for sigma_s^2")


def _sampler_config(a) -> SamplerConfig:
    return SamplerConfig(chains=a.chains, iterations=a.iterations, warmup=a.warmup, thin=a.thin,
                         seed=a.seed, rhat_threshold=a.rhat_threshold)


def _prior(a) -> PriorSpec:
    prior = PriorSpec.from_dict(io.read_json(a.prior)) if a.prior else PriorSpec()
    if a.sigma2_s_prior:
        prior = prior.with_sigma2_s(*a.sigma2_s_prior)
    return prior


def _dataset(a):
    path = a.data if a.data is not None else io.reference_dataset_path()
    data = io.load_dataset(path)
    return data, str(path)


def _out_dir(a) -> Path:
    return a.out if a.out is not None else io.default_output_dir()


def _provenance(a, data_path, chains=None) -> dict:
    d = {"command": a.command, "version": __version__, "data": Path(data_path).name}
    if chains is not None:
        d["sampler"] = chains.config.to_dict()
        d["prior"] = chains.prior.to_dict()
        d["data_sha256"] = chains.data_hash
    return d


def _hist_rows(columns: dict):
    dens = {k: np.histogram(v, bins=HIST_EDGES, density=True)[0] for k, v in columns.items()}
    for i in range(HIST_EDGES.size - 1):
        yield [HIST_EDGES[i], HIST_EDGES[i + 1]] + [dens[k][i] for k in columns]


def _fit(a, data):
    ch = sample_posterior(data, _prior(a), _sampler_config(a))
    return ch, diagnostics(ch)


# -- subcommands ------------------------------------------------------------

def cmd_moments(a, out: Path) -> int:
    data, path = _dataset(a)
    data.require_size()
    st = summarize(data)
    est = moment_estimate(st, data.n_members)
    d = derived_diagnostics(est.params, data.n_members)
    rows = [
        ("mu_x", est.params.mu_x), ("mu_y", est.params.mu_y), ("beta", est.params.beta),
        ("sigma2_s", est.sigma2_s), ("sigma2_eps", est.sigma2_eps), ("sigma2_eta", est.sigma2_eta),
        ("snr_obs", d.snr_obs), ("snr_mod", d.snr_mod), ("rho", d.rho),
    ]
    print(f"N={data.n_years} R={data.n_members}")
    for name, v in rows:
        print(f"{name:<12}{float(v):>12.4f}")
    if est.flags:
        print("clamped: " + ", ".join(est.flags))
    io.write_json({
        "provenance": _provenance(a, path),
        "summary_statistics": st.as_dict(),
        "estimates": {k: float(v) for k, v in rows},
        "clamped": list(est.flags),
        "N": data.n_years, "R": data.n_members,
    }, out / "moments.json")
    return EXIT_OK


def cmd_fit(a, out: Path) -> int:
    data, path = _dataset(a)
    data.require_size()
    ch, diag = _fit(a, data)
    io.write_samples(ch, out / "samples.csv")
    p = ch.params()
    post = {k: {"mean": float(np.mean(getattr(p, k))), "sd": float(np.std(getattr(p, k))),
                "percentiles": dict(zip(map(str, BOX_PERCENTILES),
                                        np.percentile(getattr(p, k), BOX_PERCENTILES).tolist()))}
            for k in p.as_dict()}
    io.write_json({"provenance": _provenance(a, path, ch), "diagnostics": diag.to_dict(),
                   "posterior": post, "excess_kurtosis": excess_kurtosis(ch)},
                  out / "diagnostics.json")
    print(f"retained {ch.n_chains} x {ch.n_draws} draws; max R-hat "
          f"{np.nanmax(list(diag.rhat.values())):.4f}; min ESS {min(diag.ess.values()):.0f}")
    return EXIT_OK if diag.passed else EXIT_NOT_CONVERGED


def cmd_verify(a, out: Path) -> int:
    data, path = _dataset(a)
    data.require_size()
    ch, diag = _fit(a, data)
    N = a.new_N if a.new_N else data.n_years
    R = a.new_R if a.new_R else data.n_members
    analyses = [
        correlation_population(ch),
        correlation_new_period(ch, N, R, [a.seed, 2]),
        correlation_fixed_obs(ch, data, [a.seed, 3]),
    ]
    probs = probability_report(ch, a.bias_threshold)
    io.write_json({
        "provenance": _provenance(a, path, ch),
        "diagnostics": diag.to_dict(),
        "correlation": {c.mode: dict(c.summary(), width=c.width) for c in analyses},
        "new_period_design": {"N": N, "R": R},
        "probabilities": probs.to_dict(),
    }, out / "verify.json")
    io.write_table(out / "correlation_hist.csv", ["bin_left", "bin_right"] + [c.mode for c in analyses],
                   _hist_rows({c.mode: c.samples for c in analyses}))
    for c in analyses:
        lo, hi = c.interval_95
        print(f"{c.mode:<24} 95% [{lo:.3f}, {hi:.3f}]  mean {c.mean:.3f}")
    for k, v in probs.probabilities.items():
        print(f"Pr({k}) = {v:.3f} +- {probs.std_errors[k]:.3f}")
    return EXIT_OK if diag.passed else EXIT_NOT_CONVERGED


def cmd_snr(a, out: Path) -> int:
    data, path = _dataset(a)
    data.require_size()
    ch, diag = _fit(a, data)
    s = snr_summary(ch)
    io.write_json({"provenance": _provenance(a, path, ch), "diagnostics": diag.to_dict(), "snr": s},
                  out / "snr.json")
    d = derived_diagnostics(ch.params(), ch.R)
    rows = []
    for name in ("snr_obs", "snr_mod", "rpc", "rpc_perf"):
        x = np.asarray(getattr(d, name), dtype=float)
        x = x[np.isfinite(x)]
        rows.append([name] + np.percentile(x, BOX_PERCENTILES).tolist())
    io.write_table(out / "snr_percentiles.csv", ["quantity"] + [f"p{q:g}" for q in BOX_PERCENTILES], rows)
    for name in ("snr_obs", "snr_mod", "rpc"):
        print(f"{name:<10} mean {s[name]['mean']:.3f}  sd {s[name]['sd']:.3f}")
    print(f"Pr(snr_obs>snr_mod) = {s['prob_snr_obs_gt_snr_mod']:.3f}")
    return EXIT_OK if diag.passed else EXIT_NOT_CONVERGED


def cmd_predict(a, out: Path) -> int:
    data, path = _dataset(a)
    data.require_size(min_years=4)
    res = loo_evaluate(data, _prior(a), _sampler_config(a))
    summary = res.summary()
    summary["provenance"] = _provenance(a, path)
    summary["provenance"]["sampler"] = _sampler_config(a).to_dict()
    summary["provenance"]["prior"] = _prior(a).to_dict()
    io.write_json(summary, out / "predict.json")
    text = res.table.as_text()
    (out / "scores.txt").write_text(text + "\n", encoding="utf-8")

    rows = []
    for t, year in enumerate(data.years):
        dists = {m: res.predictions[m][t] for m in res.predictions}
        centre = dists["climatology"].mean
        width = 5 * dists["climatology"].sd
        grid = np.linspace(centre - width, centre + width, a.grid_points)
        dens = {m: d.pdf(grid) for m, d in dists.items()}
        for i, y in enumerate(grid):
            rows.append([int(year), y] + [dens[m][i] for m in dists])
    io.write_table(out / "predictive_density.csv", ["year", "y"] + list(res.predictions), rows)
    print(text)
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def _parse_grid(a):
    if a.pairs:
        pairs = []
        for item in a.pairs:
            n, _, r = item.partition("x")
            try:
                pairs.append((int(n), int(r)))
            except ValueError:
                raise ValueError(f"design pair {item!r} is not of the form NxR") from None
        return pairs
    return default_grid(a.budgets, a.lengths)


def cmd_design(a, out: Path) -> int:
    data, path = _dataset(a)
    data.require_size()
    grid = _parse_grid(a)
    ch, diag = _fit(a, data)
    res = design_sweep(ch, grid, draws_per_pair=a.draws_per_pair, seed=a.seed)
    io.write_json({"provenance": _provenance(a, path, ch), "diagnostics": diag.to_dict(),
                   "cells": [c.summary() for c in res.cells]}, out / "design.json")
    io.write_table(out / "design_percentiles.csv",
                   ["N", "R", "budget", "mean", "iqr", "mode"] + [f"p{q:g}" for q in BOX_PERCENTILES],
                   ([c.N, c.R, c.budget, c.mean, c.iqr, c.mode] + c.percentiles.tolist()
                    for c in res.cells))
    if a.raw_draws:
        io.write_table(out / "design_draws.csv", ["N", "R", "r"],
                       ([c.N, c.R, v] for c in res.cells for v in c.samples))
    for budget, cells in res.by_budget().items():
        for c in cells:
            print(f"NR={budget:<5} {c.N:>3}x{c.R:<4} mean {c.mean:.3f}  IQR {c.iqr:.3f}")
    return EXIT_OK if diag.passed else EXIT_NOT_CONVERGED


def cmd_prior_check(a, out: Path) -> int:
    prior = PRESETS[a.preset]
    if a.preset == "default" and (a.prior or a.sigma2_s_prior):
        prior = _prior(a)
    pp = prior_predictive(prior, a.R, a.draws, seed=a.seed)
    s = pp.summary()
    s["modes"] = _hist_modes(pp.rho)
    io.write_json({"provenance": {"command": a.command, "version": __version__, "preset": a.preset,
                                  "R": a.R, "seed": a.seed,
                                  "prior": prior.to_dict() if hasattr(prior, "to_dict") else a.preset},
                   "prior_predictive": s}, out / "prior_check.json")
    io.write_table(out / "prior_rho_hist.csv", ["bin_left", "bin_right", "density"],
                   _hist_rows({"rho": pp.rho}))
    print(f"prior rho mean {s['rho_mean']:.3f}  sd {s['rho_sd']:.3f}")
    print(f"prior Pr(snr_obs>snr_mod) = {s['prob_snr_obs_gt_snr_mod']:.3f}")
    print(f"prior sigma_s mean {s['sigma_s_mean']:.3f}  sd {s['sigma_s_sd']:.3f}")
    return EXIT_OK


def _hist_modes(x, bins: int = 10) -> list:
    """Centres of the local maxima of a coarse histogram on [-1, 1]."""
    h, e = np.histogram(x, bins=np.linspace(-1, 1, bins + 1))
    padded = np.r_[-1, h, -1]
    return [float(0.5 * (e[i] + e[i + 1])) for i in range(bins)
            if padded[i + 1] > padded[i] and padded[i + 1] >= padded[i + 2]]


def cmd_sensitivity(a, out: Path) -> int:
    data, path = _dataset(a)
    data.require_size()
    base = _prior(a)
    pairs = SIGMA2_S_VARIANTS
    if a.variant:
        pairs = [tuple(v) for v in a.variant]
    variants = [base.with_sigma2_s(x, y) for x, y in pairs]
    res = sensitivity_scan(data, variants, _sampler_config(a), prior_draws=a.prior_draws)
    prov = _provenance(a, path)
    prov["sampler"] = _sampler_config(a).to_dict()
    io.write_json({"provenance": prov, "sensitivity": res.to_dict()}, out / "sensitivity.json")
    cols = {}
    for v in res.variants:
        tag = "ig_{:g}_{:g}".format(*v.prior.sigma2_s_prior)
        cols[f"{tag}_prior"] = v.prior_rho
        cols[f"{tag}_posterior"] = v.posterior_rho
    io.write_table(out / "sensitivity_rho_hist.csv", ["bin_left", "bin_right"] + list(cols),
                   _hist_rows(cols))
    for v in res.variants:
        dd = v.to_dict()
        print("sigma2_s ~ IG({:g}, {:g}): prior mean {:.3f} -> posterior mean {:.3f}, "
              "Pr(snr_obs>snr_mod) {:.3f}".format(*v.prior.sigma2_s_prior, dd["prior_rho_mean"],
                                                   dd["posterior_rho_mean"],
                                                   dd["posterior_prob_snr_obs_gt_snr_mod"]))
    return EXIT_OK


def cmd_perfect_model(a, out: Path) -> int:
    data, path = _dataset(a)
    data.require_size(min_members=3)
    cfg = _sampler_config(a)
    res = perfect_model_check(data, a.member, _prior(a), cfg)
    prov = _provenance(a, path)
    prov.update(sampler=cfg.to_dict(), member=a.member if a.member else "all")
    io.write_json({"provenance": prov, "perfect_model": res.to_dict()}, out / "perfect_model.json")
    for k, v in res.report.probabilities.items():
        print(f"Pr({k}) = {v:.3f}")
    return EXIT_OK


def cmd_surrogate(a, out: Path) -> int:
    overrides = {k: getattr(a, k) for k in NAO_TARGETS if getattr(a, k) is not None}
    spec = nao_surrogate_spec(N=a.N, R=a.R, first_year=a.first_year,
                              member_mean_var=a.member_mean_var, **overrides)
    data = make_surrogate(spec, a.seed)
    target = out / a.filename
    prov = {"generator": f"sigplusnoise {__version__} make_surrogate", "seed": a.seed}
    prov.update({k: io.fmt(v) for k, v in spec.to_dict().items()
                 if k not in ("excursion_years", "excursion_scale")})
    prov["member_mean_var_source"] = "given" if a.member_mean_var is not None else "default v_within/N"
    io.write_dataset(data, target, prov)
    io.write_json({"spec": spec.to_dict(), "seed": a.seed, "summary_statistics": summarize(data).as_dict()},
                  out / "surrogate.json")
    print(f"wrote {target} (N={data.n_years}, R={data.n_members})")
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sigplusnoise", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("moments", help="summary statistics and moment estimates")
    _add_data(p); _add_out(p)

    p = sub.add_parser("fit", help="posterior sample file and convergence diagnostics")
    _add_data(p); _add_out(p); _add_seed(p); _add_sampler(p)

    p = sub.add_parser("verify", help="correlation uncertainty and event probabilities")
    _add_data(p); _add_out(p); _add_seed(p); _add_sampler(p)
    p.add_argument("--bias-threshold", type=float, default=1.0)
    p.add_argument("--new-N", type=int, default=None, help="hindcast length for the new-period question")
    p.add_argument("--new-R", type=int, default=None, help="ensemble size for the new-period question")

    p = sub.add_parser("snr", help="signal-to-noise and RPC posteriors")
    _add_data(p); _add_out(p); _add_seed(p); _add_sampler(p)

    p = sub.add_parser("predict", help="leave-one-out predictions and Ignorance scores")
    _add_data(p); _add_out(p); _add_seed(p); _add_sampler(p)
    p.add_argument("--grid-points", type=int, default=201)

    p = sub.add_parser("design", help="predictive correlation over hindcast designs")
    _add_data(p); _add_out(p); _add_seed(p); _add_sampler(p)
    p.add_argument("--budgets", type=int, nargs="+", default=list(DEFAULT_BUDGETS))
    p.add_argument("--lengths", type=int, nargs="+", default=list(DEFAULT_LENGTHS))
    p.add_argument("--pairs", nargs="+", metavar="NxR", help="explicit designs, overrides budgets")
    p.add_argument("--draws-per-pair", type=int, default=100_000)
    p.add_argument("--raw-draws", action="store_true", help="also write every simulated correlation")

    p = sub.add_parser("prior-check", help="prior predictive distribution of the diagnostics")
    _add_out(p); _add_seed(p)
    p.add_argument("--preset", choices=sorted(PRESETS), default="default")
    p.add_argument("--R", type=int, default=24)
    p.add_argument("--draws", type=int, default=100_000)
    p.add_argument("--prior", type=Path, default=None)
    p.add_argument("--sigma2-s-prior", type=float, nargs=2, metavar=("A", "B"))

    p = sub.add_parser("sensitivity", help="posterior of rho under several signal-variance priors")
    _add_data(p); _add_out(p); _add_seed(p); _add_sampler(p)
    p.add_argument("--variant", type=float, nargs=2, action="append", metavar=("A", "B"),
                   help="Inverse-Gamma (shape, scale) for sigma_s^2; repeat for each variant")
    p.add_argument("--prior-draws", type=int, default=100_000)

    p = sub.add_parser("perfect-model", help="refit with an ensemble member as the observation")
    _add_data(p); _add_out(p); _add_seed(p); _add_sampler(p, iterations=8_000, warmup=1_000)
    p.add_argument("--member", type=int, default=None, help="1-based member index; default all")

    p = sub.add_parser("surrogate", help="generate a dataset with prescribed summary statistics")
    _add_out(p); _add_seed(p)
    p.add_argument("--N", type=int, default=20)
    p.add_argument("--R", type=int, default=24)
    p.add_argument("--first-year", type=int, default=1992)
    p.add_argument("--filename", default="surrogate.csv")
    for k in NAO_TARGETS:
        p.add_argument("--" + k.replace("_", "-"), dest=k, type=float, default=None)
    p.add_argument("--member-mean-var", type=float, default=None)
    return parser


COMMANDS = {
    "moments": cmd_moments, "fit": cmd_fit, "verify": cmd_verify, "snr": cmd_snr,
    "predict": cmd_predict, "design": cmd_design, "prior-check": cmd_prior_check,
    "sensitivity": cmd_sensitivity, "perfect-model": cmd_perfect_model, "surrogate": cmd_surrogate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except _UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    try:
        with io.output_lock(_out_dir(a)) as out:
            return COMMANDS[a.command](a, out)
    except (ValueError, io.OutputLockedError, OSError) as e:
        print(f"sigplusnoise {a.command}: error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
