"""Tabulated data behind the outbreak-probability, growth-rate and
posterior figures.  Plotting is left to the caller."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .analytic import GrowthParams, major_outbreak_prob, malthusian, prob_k_from_pi
from .bayes import ExponentialPrior, tau_posterior
from .distributions import GammaSpec
from .errors import ValidationError
from .io import write_csv

__all__ = ["FIGURES", "emit_figure_data", "figure_tables"]

FIGURES = ("fig1", "fig2", "fig3", "fig5")

DEFAULT_R0S = (1.5, 3.0, 6.0)
DEFAULT_PIS = (0.25, 0.5)
# growth-rate sweep defaults: R0 = 2, both means 7 days, both CVs 3/7
SWEEP_R0 = 2.0
SWEEP_MEAN = 7.0
SWEEP_CV = 3.0 / 7.0


def _grid(lo_hundredths: int, hi_hundredths: int, step_hundredths: int) -> list[float]:
    # integer steps, then one division, so 1.0 is hit exactly
    return [i / 100 for i in range(lo_hundredths, hi_hundredths + 1, step_hundredths)]


def fig1(r0s: Sequence[float] = DEFAULT_R0S):
    rows = [(r0, tau, major_outbreak_prob(r0, tau)) for r0 in r0s for tau in _grid(0, 300, 1)]
    return ["r0", "tau_i", "pi"], rows


def fig2(pis: Sequence[float] = DEFAULT_PIS, k_max: int = 20):
    rows = [(pi, k, prob_k_from_pi(pi, k)) for pi in pis for k in range(1, k_max + 1)]
    return ["pi", "k", "pi_k"], rows


def fig3():
    rows = []
    base = dict(mu_l=SWEEP_MEAN, mu_i=SWEEP_MEAN, tau_l=SWEEP_CV, tau_i=SWEEP_CV)
    sweeps = [("mu_l", _grid(100, 1400, 10)), ("mu_i", _grid(100, 1400, 10)),
              ("tau_l", _grid(0, 300, 1)), ("tau_i", _grid(0, 300, 1))]
    for name, values in sweeps:
        for v in values:
            p = dict(base, **{name: v})
            alpha = malthusian(GrowthParams(SWEEP_R0, GammaSpec(p["mu_l"], p["tau_l"]),
                                            GammaSpec(p["mu_i"], p["tau_i"])))
            rows.append((name, v, alpha))
    return ["parameter", "value", "alpha"], rows


def fig5(prior_mean: float = 0.5, rho: float = 0.5):
    grid = tau_posterior(ExponentialPrior(prior_mean), rho)
    rows = zip(grid.tau, grid.prior_cdf(), grid.posterior_cdf(), grid.posterior_density)
    return ["tau_i", "prior_cdf", "posterior_cdf", "posterior_density"], list(rows)


def figure_tables(which: Sequence[str], r0s: Sequence[float] = DEFAULT_R0S):
    """Return ``{figure_id: (header, rows)}`` for the requested figures."""
    out = {}
    for fig in which:
        if fig == "fig1":
            out[fig] = fig1(r0s)
        elif fig == "fig2":
            out[fig] = fig2()
        elif fig == "fig3":
            out[fig] = fig3()
        elif fig == "fig5":
            out[fig] = fig5()
        else:
            raise ValidationError(f"unknown figure {fig!r}; choose from {', '.join(FIGURES)}")
    return out


def emit_figure_data(which: Sequence[str], out_dir, r0s: Sequence[float] = DEFAULT_R0S
                     ) -> list[Path]:
    out_dir = Path(out_dir)
    paths = []
    for fig, (header, rows) in figure_tables(which, r0s).items():
        paths.append(write_csv(out_dir / f"{fig}.csv", header, rows))
    return paths
