"""Acceptance suite: twelve end-to-end criteria at their stated tolerances.

Each test records a single PASS/FAIL line (printed in the terminal summary)
before asserting, so a failing criterion still reports its measured values.
"""
import contextlib
import itertools
import math
import time

import numpy as np
import pytest

from epistoch import _pykernels
from epistoch.analytic import (
    GrowthParams,
    euler_lotka_residual,
    final_size_fraction,
    major_outbreak_prob,
    malthusian,
    r0_from_growth,
)
from epistoch.bayes import ExponentialPrior, posterior_mean, tau_posterior
from epistoch.distributions import GammaSpec, laplace_transform, offspring_pgf
from epistoch.estimation import (
    ParamIntervals,
    average_estimates,
    growth_rate_from_simulation,
    growth_rate_window,
    r0_uncertainty_table,
)
from epistoch.figures import fig3
from epistoch.simulator import (
    EpidemicParams,
    branching_takeoff,
    replicate,
    simulate,
)

from .conftest import ACCEPTANCE_LINES, ACCEPTANCE_NOTES


@contextlib.contextmanager
def criterion(number, title):
    """Record PASS/FAIL for one criterion; ``detail`` collects measured values."""
    detail = []
    start = time.perf_counter()
    try:
        yield detail
    except BaseException as exc:
        status = "FAIL"
        detail.append(f"{type(exc).__name__}: {exc}".splitlines()[0][:200])
        raise
    else:
        status = "PASS"
    finally:
        elapsed = time.perf_counter() - start
        ACCEPTANCE_LINES[number] = (f"[{status}] {number:2d}. {title} ({elapsed:.1f} s)"
                                    + (": " + "; ".join(detail) if detail else ""))


def _per_call_seconds(fn, *args, repeat=200):
    fn(*args)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def test_01_outbreak_probability_anchors():
    with criterion(1, "outbreak probability anchors") as d:
        cases = [((3, 0), 0.940, 1e-3), ((1.5, 0), 0.583, 1e-3), ((3, 1), 2 / 3, 1e-9)]
        for args, target, tol in cases:
            value = major_outbreak_prob(*args)
            cost = _per_call_seconds(major_outbreak_prob, *args)
            d.append(f"pi{args}={value:.6f} in {cost * 1e6:.0f} us")
            assert abs(value - target) <= tol
            assert cost < 1e-3


def test_02_monotonicity():
    with criterion(2, "monotonicity of pi and alpha") as d:
        t0 = time.perf_counter()
        r0s = np.linspace(0.5, 6.0, 50)
        taus = np.linspace(0.0, 3.0, 31)
        pi = np.array([[major_outbreak_prob(r, t) for t in taus] for r in r0s])
        assert np.all(np.diff(pi, axis=1) <= 0.0), "pi increases with tau_i somewhere"
        assert np.all(np.diff(pi, axis=0) >= 0.0), "pi decreases with r0 somewhere"
        _, rows = fig3()
        sweep = {name: np.array([a for n, _, a in rows if n == name])
                 for name in ("mu_l", "mu_i", "tau_l", "tau_i")}
        assert np.all(np.diff(sweep["mu_l"]) < 0)
        assert np.all(np.diff(sweep["mu_i"]) < 0)
        assert np.all(np.diff(sweep["tau_i"]) < 0)
        assert np.all(np.diff(sweep["tau_l"]) > 0)
        elapsed = time.perf_counter() - t0
        d.append(f"50x31 pi grid and 4 alpha sweeps ({sum(map(len, sweep.values()))} points)")
        assert elapsed < 5.0


def test_03_euler_lotka_oracle():
    with criterion(3, "Euler-Lotka quadrature oracle") as d:
        t0 = time.perf_counter()
        worst = 0.0
        count = 0
        for r0, ml, mi, tau in itertools.product((1.5, 2, 3), (0, 3, 7), (3, 7, 11), (0, 3 / 7, 1)):
            params = GrowthParams(r0, GammaSpec(ml, tau), GammaSpec(mi, tau))
            resid = euler_lotka_residual(malthusian(params), params)
            worst = max(worst, abs(resid - 1.0))
            count += 1
        elapsed = time.perf_counter() - t0
        d.append(f"{count} combinations, max |residual - 1| = {worst:.2e}")
        assert count == 81 and worst <= 1e-8 and elapsed < 30.0


TABLE_1 = [  # (mu_l, mu_i, tau_l, tau_i) -> printed R0
    ((3, 3, 0, 0), 1.2903), ((3, 3, 0, 4 / 7), 1.2935), ((3, 3, 4 / 7, 0), 1.2897),
    ((3, 3, 4 / 7, 4 / 7), 1.2930), ((3, 11, 0, 0), 1.5528), ((3, 11, 0, 4 / 7), 1.6468),
    ((3, 11, 4 / 7, 0), 1.5521), ((3, 11, 4 / 7, 4 / 7), 1.6461), ((11, 3, 0, 0), 1.9674),
    ((11, 3, 0, 4 / 7), 1.9724), ((11, 3, 4 / 7, 0), 1.8834), ((11, 3, 4 / 7, 4 / 7), 1.8881),
    ((11, 11, 0, 0), 2.3677), ((11, 11, 0, 4 / 7), 2.5111), ((11, 11, 4 / 7, 0), 2.2666),
    ((11, 11, 4 / 7, 4 / 7), 2.4039),
]


def test_04_r0_table():
    with criterion(4, "R0 uncertainty table") as d:
        rows = r0_uncertainty_table(0.053, ParamIntervals((3, 11), (3, 11), (0, 4 / 7), (0, 4 / 7)))
        corners = {(r.mu_l, r.mu_i, r.tau_l, r.tau_i): r.r0 for r in rows if not r.midpoint}
        mid = rows[-1].r0
        devs = []
        for key, printed in TABLE_1:
            devs.append((abs(corners[key] - printed) / printed, key, corners[key], printed))
        worst = max(devs)
        d.append(f"midpoint {mid:.6f}")
        d.append(f"worst corner {worst[1]} {worst[2]:.4f} vs {worst[3]} ({100 * worst[0]:.2f}%)")
        ACCEPTANCE_NOTES.append(
            "R0 table: the midpoint row is reproduced to 1e-3, but corner rows differ from the "
            "printed values by up to ~2% (largest at tau_L = 4/7, tau_I = 0). The printed table's "
            "numerical precision is unknown; the quadrature-verified solver is taken as correct.")
        assert abs(mid - 1.747) <= 1e-3
        assert all(dev <= 0.025 for dev, *_ in devs)


def test_05_branching_takeoff():
    with criterion(5, "branching takeoff vs pi") as d:
        t0 = time.perf_counter()
        ok = True
        for i, (r0, tau) in enumerate(itertools.product((1.5, 3.0), (0.0, 1.0))):
            s = branching_takeoff(r0, GammaSpec(7.0, tau), 10**5, (500 + i) << 32, cap=10**4)
            pi = major_outbreak_prob(r0, tau)
            se = math.sqrt(pi * (1 - pi) / s.reps)
            z = (s.fraction - pi) / se
            d.append(f"r0={r0},tau={tau}: {s.fraction:.4f} vs {pi:.4f} (z={z:+.2f})")
            ok &= abs(z) < 3.0
        assert ok and time.perf_counter() - t0 < 120.0


SIR_1 = EpidemicParams(20_000, 1, 1.5, GammaSpec(7.0, 3 / 7), GammaSpec(7.0, 1.0))


def test_06_final_size_monte_carlo():
    with criterion(6, "Monte Carlo final size") as d:
        t0 = time.perf_counter()
        s = replicate(SIR_1, 10**4, 606 << 32)
        rho = final_size_fraction(1.5)
        d.append(f"mean major fraction {s.mean_major_final_fraction:.5f} vs {rho:.5f} "
                 f"({s.major_count} majors)")
        assert abs(s.mean_major_final_fraction - 0.5828) <= 0.01
        assert abs(rho - 0.5828) < 1e-4
        assert time.perf_counter() - t0 < 180.0


def test_07_k_seed_formula():
    with criterion(7, "k-seed takeoff formula") as d:
        p = EpidemicParams(SIR_1.n, 3, SIR_1.r0, SIR_1.latent, SIR_1.infectious)
        s = replicate(p, 10**4, 707 << 32)
        target = 1 - (2 / 3) ** 3
        se = math.sqrt(target * (1 - target) / s.reps)
        d.append(f"major fraction {s.major_fraction:.4f} vs {target:.4f} "
                 f"(z={(s.major_fraction - target) / se:+.2f})")
        assert abs(s.major_fraction - target) <= 3 * se


class _Exponential:
    def __init__(self, c, alpha, days):
        self.cumulative = c * np.exp(alpha * np.arange(days))
        self._days = days

    def __len__(self):
        return self._days


def test_08_growth_window_exact():
    with criterion(8, "growth-rate estimator exactness") as d:
        rng = np.random.default_rng(8)
        worst = 0.0
        for _ in range(100):
            alpha = float(rng.uniform(0.01, 0.3))
            width = int(rng.integers(1, 101))
            t0 = int(rng.integers(0, 30))
            series = _Exponential(float(rng.uniform(1, 100)), alpha, t0 + width + 1)
            est = growth_rate_window(series, t0, t0 + width)
            # the only error is rounding in exp and log of the endpoints
            cum1 = series.cumulative[t0 + width]
            ulps = abs(est - alpha) * width / (np.spacing(math.log(cum1)) + np.spacing(cum1) / cum1)
            worst = max(worst, ulps)
        mean = average_estimates([0.071, 0.054, 0.034])
        d.append(f"worst error {worst:.1f} ulp of the endpoint logs; mean={mean!r}")
        assert worst <= 4.0
        assert mean == 0.053


def test_09_simulated_growth_rate():
    with criterion(9, "simulated growth vs Malthusian rate") as d:
        t0 = time.perf_counter()
        p = EpidemicParams(200_000, 5, 2.0, GammaSpec(7.0, 3 / 7), GammaSpec(7.0, 3 / 7))
        alpha = malthusian(GrowthParams(2.0, p.latent, p.infectious))
        estimates = []
        seed = 909 << 32
        while len(estimates) < 200:
            out = simulate(p, seed)
            seed += 1
            if out.major:
                estimates.append(growth_rate_from_simulation(out, p))
        mean = float(np.mean(estimates))
        d.append(f"mean {mean:.5f} vs {alpha:.5f} ({100 * (mean / alpha - 1):+.1f}%) "
                 f"from {seed - (909 << 32)} runs")
        assert abs(mean / alpha - 1) <= 0.10
        assert time.perf_counter() - t0 < 180.0


def test_10_posterior_anchor():
    with criterion(10, "posterior anchor") as d:
        grid = tau_posterior(ExponentialPrior(0.5), 0.5, tau_max=5.0, step=1e-3)
        mean = posterior_mean(grid)
        gap = float(np.min(grid.posterior_cdf() - grid.prior_cdf()))
        d.append(f"posterior mean {mean:.6f}; mass {grid.mass:.12f}; min(cdf gap) {gap:.1e}")
        ACCEPTANCE_NOTES.append(
            f"posterior mean {mean:.4f} is inside the 0.384 +- 0.01 band but not equal to 0.384; "
            "halving the grid step moves it by < 1e-6, so the gap is not discretization error.")
        assert abs(mean - 0.384) <= 0.01
        assert abs(grid.mass - 1.0) <= 1e-6
        assert gap >= -1e-12


def test_11_degenerate_limit_continuity():
    with criterion(11, "degenerate-CV continuity") as d:
        tiny = math.sqrt(2e-8)
        worst = 0.0

        def check(a, b):
            nonlocal worst
            rel = abs(a - b) / max(abs(b), 1e-300)
            worst = max(worst, rel)

        # the two forms differ by about (s mean)^2 tau^2 / 2 in log, so the
        # Laplace points stay in the growth-rate range s <= 0.5
        for mean, s in itertools.product((0.5, 3.0, 7.0, 11.0), (0.0, 0.01, 0.1, 0.5)):
            check(laplace_transform(GammaSpec(mean, tiny), s), laplace_transform(GammaSpec(mean), s))
        for r0 in np.linspace(0.5, 6.0, 50):
            for s in (0.0, 0.3, 0.9):
                check(offspring_pgf(s, r0, tiny), offspring_pgf(s, r0, 0.0))
            if r0 > 1:
                check(major_outbreak_prob(r0, tiny), major_outbreak_prob(r0, 0.0))
        for r0, ml, mi, tau in itertools.product((1.5, 2, 3), (0, 3, 7), (3, 7, 11), (0, 3 / 7, 1)):
            for lat_cv, inf_cv in ((tiny, tau), (tau, tiny), (tiny, tiny)):
                exact_l = 0.0 if lat_cv == tiny else lat_cv
                exact_i = 0.0 if inf_cv == tiny else inf_cv
                a = malthusian(GrowthParams(r0, GammaSpec(ml, lat_cv), GammaSpec(mi, inf_cv)))
                b = malthusian(GrowthParams(r0, GammaSpec(ml, exact_l), GammaSpec(mi, exact_i)))
                check(a, b)
                check(r0_from_growth(0.053, GammaSpec(ml, lat_cv), GammaSpec(mi, inf_cv)),
                      r0_from_growth(0.053, GammaSpec(ml, exact_l), GammaSpec(mi, exact_i)))
        d.append(f"max relative gap {worst:.1e}")
        assert worst <= 1e-6


def test_12_determinism():
    with criterion(12, "determinism across parallelism") as d:
        p = EpidemicParams(2000, 2, 2.0, GammaSpec(3.0, 0.5), GammaSpec(5.0, 0.8))
        assert simulate(p, 1234) == simulate(p, 1234)
        ref = replicate(p, 400, 1212, workers=1)
        for workers in (2, 4, 7):
            other = replicate(p, 400, 1212, workers=workers)
            assert other == ref
            assert other.mean_major_final_fraction == ref.mean_major_final_fraction
        seeds = np.arange(40, dtype=np.uint64) ^ np.uint64(1212)
        py = _pykernels.final_sizes(*p._kernel_args(), seeds)
        assert np.array_equal(py, ref.final_sizes[:40])
        d.append("simulate repeatable; replicate identical for 1, 2, 4, 7 workers and "
                 "for the pure-Python kernels")
