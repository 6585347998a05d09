"""Growth-rate estimation and the R0 uncertainty table."""
from __future__ import annotations

import datetime as _dt
import itertools
import math
from dataclasses import dataclass
from statistics import fmean
from typing import Iterable, Sequence

import numpy as np

from .analytic import r0_from_growth
from .distributions import GammaSpec
from .errors import ValidationError
from .simulator import EpidemicParams, SimOutcome, _is_major

__all__ = [
    "IncidenceSeries",
    "ParamIntervals",
    "R0Row",
    "average_estimates",
    "growth_rate_from_simulation",
    "growth_rate_mean",
    "growth_rate_window",
    "r0_uncertainty_table",
    "simulation_window",
]


@dataclass(frozen=True, eq=False)
class IncidenceSeries:
    """Daily incident case counts on consecutive day indices 0, 1, 2, ...

    ``start_date`` is kept when the series came from dated rows.
    """

    cases: np.ndarray
    start_date: _dt.date | None = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.cases)
        if arr.ndim != 1 or arr.size == 0:
            raise ValidationError("incidence series must be a non-empty 1-d sequence")
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(np.equal(np.mod(arr, 1), 0)):
                raise ValidationError("incident case counts must be integers")
        arr = arr.astype(np.int64)
        if np.any(arr < 0):
            raise ValidationError("incident case counts must be non-negative")
        object.__setattr__(self, "cases", arr)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IncidenceSeries):
            return NotImplemented
        return self.start_date == other.start_date and np.array_equal(self.cases, other.cases)

    def __len__(self) -> int:
        return int(self.cases.size)

    @property
    def days(self) -> np.ndarray:
        return np.arange(self.cases.size)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.cases)

    @classmethod
    def from_cumulative(cls, cumulative: Sequence[int], start_date=None) -> IncidenceSeries:
        cum = np.asarray(cumulative, dtype=np.int64)
        if np.any(np.diff(cum) < 0):
            raise ValidationError("cumulative counts must be non-decreasing")
        return cls(np.diff(cum, prepend=0), start_date)


def growth_rate_window(series: IncidenceSeries, t0: int, t1: int) -> float:
    """Two-point log-slope of cumulative cases between days ``t0`` and ``t1``."""
    if int(t0) != t0 or int(t1) != t1:
        raise ValidationError("window endpoints must be integer day indices")
    t0, t1 = int(t0), int(t1)
    if not 0 <= t0 < t1:
        raise ValidationError(f"need 0 <= t0 < t1, got ({t0}, {t1})")
    if t1 >= len(series):
        raise ValidationError(f"day {t1} is past the end of the series ({len(series)} days)")
    cum = series.cumulative
    if cum[t0] <= 0:
        raise ValidationError(f"window starts before takeoff: no cases by day {t0}")
    return (math.log(cum[t1]) - math.log(cum[t0])) / (t1 - t0)


def average_estimates(estimates: Iterable[float]) -> float:
    values = list(estimates)
    if not values:
        raise ValidationError("need at least one estimate")
    return fmean(values)


def growth_rate_mean(series: IncidenceSeries, windows: Sequence[tuple[int, int]]) -> float:
    """Arithmetic mean of the per-window growth-rate estimates."""
    if not windows:
        raise ValidationError("need at least one window")
    return average_estimates(growth_rate_window(series, a, b) for a, b in windows)


@dataclass(frozen=True)
class ParamIntervals:
    """Plausible ranges ``(low, high)`` for the four period parameters."""

    mu_l: tuple[float, float]
    mu_i: tuple[float, float]
    tau_l: tuple[float, float]
    tau_i: tuple[float, float]

    def __post_init__(self) -> None:
        for name in ("mu_l", "mu_i", "tau_l", "tau_i"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo < 0.0 or lo > hi:
                raise ValidationError(f"{name} range must satisfy 0 <= low <= high, got {(lo, hi)}")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if self.mu_i[0] <= 0.0:
            raise ValidationError("infectious mean range must be strictly positive")

    def midpoint(self) -> tuple[float, float, float, float]:
        return tuple(0.5 * (lo + hi) for lo, hi in (self.mu_l, self.mu_i, self.tau_l, self.tau_i))


@dataclass(frozen=True)
class R0Row:
    mu_l: float
    mu_i: float
    tau_l: float
    tau_i: float
    r0: float
    midpoint: bool = False


def r0_uncertainty_table(alpha_hat: float, intervals: ParamIntervals) -> list[R0Row]:
    """R0 at each of the 16 interval corners, then at the midpoint.

    Corners are ordered with ``mu_l`` varying slowest and ``tau_i`` fastest,
    low end first.
    """
    rows = []
    for ml, mi, tl, ti in itertools.product(intervals.mu_l, intervals.mu_i,
                                            intervals.tau_l, intervals.tau_i):
        rows.append(R0Row(ml, mi, tl, ti, r0_from_growth(alpha_hat, GammaSpec(ml, tl),
                                                         GammaSpec(mi, ti))))
    ml, mi, tl, ti = intervals.midpoint()
    rows.append(R0Row(ml, mi, tl, ti, r0_from_growth(alpha_hat, GammaSpec(ml, tl),
                                                     GammaSpec(mi, ti)), True))
    return rows


def simulation_window(n: int, k: int) -> tuple[int, float]:
    """Cumulative-removal range used for regression on simulated outbreaks."""
    return max(50, 10 * k), 0.05 * n


def growth_rate_from_simulation(outcome: SimOutcome, params: EpidemicParams) -> float:
    """Least-squares slope of log cumulative removals against time.

    Uses the removals whose running count lies in ``[max(50, 10k), 0.05 n]``:
    past takeoff noise but before susceptible depletion bends the curve.
    """
    major = outcome.major if outcome.major is not None else _is_major(outcome.final_size, params)
    if not major:
        raise ValidationError("growth rate needs a major outbreak")
    t = outcome.removal_times()
    count = np.arange(1, t.size + 1)
    lo, hi = simulation_window(params.n, params.k)
    keep = (count >= lo) & (count <= hi)
    if np.count_nonzero(keep) < 5:
        raise ValidationError("insufficient exponential window for a growth-rate fit")
    slope, _ = np.polyfit(t[keep], np.log(count[keep]), 1)
    return float(slope)
