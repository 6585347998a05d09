"""Command-line entry point: ``epistoch <command> ...``.

Exit status is 0 on success, 2 for invalid input and 3 when a numerical
routine fails to converge.
"""
from __future__ import annotations

import argparse
import sys
from typing import Sequence

from . import analytic, bayes, estimation, figures, simulator
from ._backend import BACKEND
from .distributions import GammaSpec
from .errors import NumericalError, ValidationError
from .io import load_run_config, parse_incidence_csv, write_csv

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERIC = 3


def fmt(x: float) -> str:
    return f"{x:.10g}"


def _range(text: str) -> tuple[float, float]:
    lo, sep, hi = text.partition(":")
    try:
        if not sep:
            raise ValueError
        return float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}") from None


def _window(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition(":")
    try:
        if not sep:
            raise ValueError
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected t0:t1 with integer days, got {text!r}") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _scalar(args, name: str, value: float) -> None:
    print(fmt(value))
    if args.out:
        write_csv(args.out, ["quantity", "value"], [(name, value)])


# --------------------------------------------------------------------------
# command handlers

def cmd_final_size(args) -> None:
    _scalar(args, "final_size_fraction", analytic.final_size_fraction(args.r0))


def cmd_outbreak_prob(args) -> None:
    if args.k == 1:
        _scalar(args, "major_outbreak_prob", analytic.major_outbreak_prob(args.r0, args.tau_i))
    else:
        _scalar(args, "outbreak_prob_k", analytic.outbreak_prob_k(args.r0, args.tau_i, args.k))


def _growth_specs(args) -> tuple[GammaSpec, GammaSpec]:
    return GammaSpec(args.mu_l, args.tau_l), GammaSpec(args.mu_i, args.tau_i)


def cmd_malthusian(args) -> None:
    latent, infectious = _growth_specs(args)
    _scalar(args, "malthusian", analytic.malthusian(analytic.GrowthParams(args.r0, latent, infectious)))


def cmd_r0_from_growth(args) -> None:
    latent, infectious = _growth_specs(args)
    _scalar(args, "r0", analytic.r0_from_growth(args.alpha, latent, infectious))


def cmd_r0_from_final_size(args) -> None:
    _scalar(args, "r0", analytic.r0_from_final_size(args.rho))


def cmd_vc(args) -> None:
    res = analytic.critical_vaccination_coverage(args.r0, args.efficacy)
    print(fmt(res.coverage))
    if not res.attainable:
        print("herd immunity unattainable: required coverage exceeds 1", file=sys.stderr)
    if args.out:
        write_csv(args.out, ["quantity", "value", "attainable"],
                  [("critical_vaccination_coverage", res.coverage, res.attainable)])


def cmd_simulate(args) -> None:
    cfg = load_run_config(args.config, "simulate")
    out = simulator.simulate(cfg.params, cfg.seed)
    print(f"seed          {cfg.seed}")
    print(f"final_size    {out.final_size}")
    print(f"final_frac    {fmt(out.final_fraction)}")
    print(f"outbreak      {'major' if out.major else 'minor'}")
    print(f"duration      {fmt(out.duration)}")
    if args.out:
        write_csv(args.out, ["time", "event", "id"], out.events())
    if args.trajectory:
        tr = out.trajectories()
        write_csv(args.trajectory, ["t", "S", "E", "I", "R"],
                  zip(tr["t"], tr["S"], tr["E"], tr["I"], tr["R"]))


def cmd_replicate(args) -> None:
    cfg = load_run_config(args.config, "replicate")
    workers = args.workers if args.workers is not None else cfg.workers
    summary = simulator.replicate(cfg.params, cfg.reps, cfg.seed, workers=workers)
    print(f"reps                  {summary.reps}")
    print(f"major_fraction        {fmt(summary.major_fraction)} +- {fmt(summary.major_fraction_se)}")
    print(f"mean_final_frac_major {fmt(summary.mean_major_final_fraction)} "
          f"+- {fmt(summary.mean_major_final_fraction_se)}")
    if args.out:
        seeds = simulator.replicate_seeds(cfg.seed, cfg.reps)
        cut = simulator.major_threshold(cfg.params) if cfg.params.r0 > 1.0 else float("inf")
        write_csv(args.out, ["replication", "seed", "final_size", "major"],
                  ((i, int(s), int(fs), bool(fs >= cut))
                   for i, (s, fs) in enumerate(zip(seeds, summary.final_sizes))))


def cmd_estimate_growth(args) -> None:
    series = parse_incidence_csv(args.csv)
    rows = []
    for t0, t1 in args.window:
        a = estimation.growth_rate_window(series, t0, t1)
        rows.append((f"{t0}:{t1}", a))
        print(f"alpha[{t0}:{t1}] = {fmt(a)}")
    mean = estimation.average_estimates(a for _, a in rows)
    print(f"alpha_mean = {fmt(mean)}")
    if args.out:
        write_csv(args.out, ["window", "alpha"], rows + [("mean", mean)])


def cmd_r0_table(args) -> None:
    intervals = estimation.ParamIntervals(args.mu_l, args.mu_i, args.tau_l, args.tau_i)
    rows = estimation.r0_uncertainty_table(args.alpha, intervals)
    print(f"{'mu_L':>8} {'mu_I':>8} {'tau_L':>10} {'tau_I':>10} {'R0':>14}")
    for r in rows:
        tag = "  (midpoint)" if r.midpoint else ""
        print(f"{r.mu_l:8.4g} {r.mu_i:8.4g} {r.tau_l:10.6g} {r.tau_i:10.6g} {fmt(r.r0):>14}{tag}")
    if args.out:
        write_csv(args.out, ["mu_l", "mu_i", "tau_l", "tau_i", "r0", "midpoint"],
                  ((r.mu_l, r.mu_i, r.tau_l, r.tau_i, r.r0, r.midpoint) for r in rows))


def cmd_posterior(args) -> None:
    prior = bayes.parse_prior(args.prior)
    grid = bayes.tau_posterior(prior, args.rho, tau_max=args.tau_max, step=args.step)
    print(f"r0_hat          {fmt(analytic.r0_from_final_size(args.rho))}")
    print(f"prior_mean      {fmt(grid.prior_mean())}")
    print(f"posterior_mean  {fmt(bayes.posterior_mean(grid))}")
    if args.out:
        write_csv(args.out, ["tau_i", "prior_cdf", "posterior_cdf", "posterior_density"],
                  zip(grid.tau, grid.prior_cdf(), grid.posterior_cdf(), grid.posterior_density))


def cmd_figures(args) -> None:
    which = [w.strip() for w in args.which.split(",") if w.strip()]
    paths = figures.emit_figure_data(which, args.out, r0s=args.r0)
    for p in paths:
        print(p)


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epistoch",
        description="Stochastic SEIR epidemics: outbreak probability, growth rate, R0 estimation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s 0.1.0 ({BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_out(p):
        p.add_argument("--out", help="also write the result as CSV to this path")
        return p

    def period_flags(p):
        p.add_argument("--mu-l", type=float, required=True, help="mean latent period (days)")
        p.add_argument("--mu-i", type=float, required=True, help="mean infectious period (days)")
        p.add_argument("--tau-l", type=float, required=True, help="latent period CV")
        p.add_argument("--tau-i", type=float, required=True, help="infectious period CV")

    solve = sub.add_parser("solve", help="analytic quantities").add_subparsers(dest="what", required=True)
    p = with_out(solve.add_parser("final-size"))
    p.add_argument("--r0", type=float, required=True)
    p.set_defaults(func=cmd_final_size)
    p = with_out(solve.add_parser("outbreak-prob"))
    p.add_argument("--r0", type=float, required=True)
    p.add_argument("--tau-i", type=float, required=True)
    p.add_argument("--k", type=int, default=1, help="number of initial infectives")
    p.set_defaults(func=cmd_outbreak_prob)
    p = with_out(solve.add_parser("malthusian"))
    p.add_argument("--r0", type=float, required=True)
    period_flags(p)
    p.set_defaults(func=cmd_malthusian)

    invert = sub.add_parser("invert", help="R0 from observations").add_subparsers(dest="what", required=True)
    p = with_out(invert.add_parser("r0-from-growth"))
    p.add_argument("--alpha", type=float, required=True)
    period_flags(p)
    p.set_defaults(func=cmd_r0_from_growth)
    p = with_out(invert.add_parser("r0-from-final-size"))
    p.add_argument("--rho", type=float, required=True)
    p.set_defaults(func=cmd_r0_from_final_size)

    p = with_out(sub.add_parser("vc", help="critical vaccination coverage"))
    p.add_argument("--r0", type=float, required=True)
    p.add_argument("--efficacy", type=float, default=1.0)
    p.set_defaults(func=cmd_vc)

    p = with_out(sub.add_parser("simulate", help="one stochastic epidemic"))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--trajectory", help="write S/E/I/R step functions as CSV")
    p.set_defaults(func=cmd_simulate)

    p = with_out(sub.add_parser("replicate", help="many stochastic epidemics"))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--workers", type=int, help="threads (overrides config)")
    p.set_defaults(func=cmd_replicate)

    est = sub.add_parser("estimate", help="estimates from data").add_subparsers(dest="what", required=True)
    p = with_out(est.add_parser("growth"))
    p.add_argument("--csv", required=True, help="incidence CSV (day,cases or date,cases)")
    p.add_argument("--window", type=_window, action="append", required=True, help="t0:t1")
    p.set_defaults(func=cmd_estimate_growth)

    p = with_out(sub.add_parser("r0-table", help="R0 over interval corners"))
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--mu-l", type=_range, required=True)
    p.add_argument("--mu-i", type=_range, required=True)
    p.add_argument("--tau-l", type=_range, required=True)
    p.add_argument("--tau-i", type=_range, required=True)
    p.set_defaults(func=cmd_r0_table)

    p = with_out(sub.add_parser("posterior", help="posterior of the infectious-period CV"))
    p.add_argument("--prior", required=True, help="exp:<mean>")
    p.add_argument("--rho", type=float, required=True, help="observed final fraction")
    p.add_argument("--tau-max", type=float, default=5.0)
    p.add_argument("--step", type=float, default=1e-3)
    p.set_defaults(func=cmd_posterior)

    p = sub.add_parser("figures", help="emit figure data as CSV")
    p.add_argument("--which", default=",".join(figures.FIGURES))
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--r0", type=_floats, default=list(figures.DEFAULT_R0S),
                   help="R0 values for fig1 (comma-separated)")
    p.set_defaults(func=cmd_figures)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
