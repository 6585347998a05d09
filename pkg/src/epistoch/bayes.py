"""Posterior of the infectious-period coefficient of variation after one
major outbreak.

Observing a major outbreak with final fraction ``rho`` fixes
``R0 = -log(1 - rho) / rho``; the likelihood of ``tau_i`` is the probability
that such an outbreak takes off at all, ``major_outbreak_prob(R0, tau_i)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .analytic import major_outbreak_prob, r0_from_final_size
from .errors import ValidationError

__all__ = [
    "ExponentialPrior",
    "PosteriorGrid",
    "TabulatedPrior",
    "parse_prior",
    "posterior_from_likelihood",
    "posterior_mean",
    "tau_grid",
    "tau_posterior",
]

_trapezoid = getattr(np, "trapezoid", None) or np.trapz

NORM_TOL = 1e-6


@dataclass(frozen=True)
class ExponentialPrior:
    mean: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mean) and self.mean > 0.0):
            raise ValidationError(f"prior mean must be positive, got {self.mean!r}")

    def density(self, tau: np.ndarray) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        return np.where(tau >= 0.0, np.exp(-tau / self.mean) / self.mean, 0.0)


@dataclass(frozen=True, eq=False)
class TabulatedPrior:
    """Piecewise-linear density through ``(tau, density)`` points; zero outside."""

    tau: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        tau = np.asarray(self.tau, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if tau.ndim != 1 or tau.shape != values.shape or tau.size < 2:
            raise ValidationError("tabulated prior needs matching 1-d arrays of length >= 2")
        if np.any(np.diff(tau) <= 0.0):
            raise ValidationError("tabulated prior grid must be strictly increasing")
        if np.any(values < 0.0) or not np.all(np.isfinite(values)):
            raise ValidationError("prior densities must be finite and non-negative")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "values", values)

    def density(self, tau: np.ndarray) -> np.ndarray:
        return np.interp(np.asarray(tau, dtype=float), self.tau, self.values, left=0.0, right=0.0)


def parse_prior(text: str):
    """Parse ``exp:<mean>`` into a prior."""
    kind, _, arg = text.partition(":")
    if kind == "exp" and arg:
        try:
            return ExponentialPrior(float(arg))
        except ValueError as exc:
            raise ValidationError(f"bad prior mean in {text!r}") from exc
    raise ValidationError(f"unsupported prior {text!r}; expected exp:<mean>")


@dataclass(frozen=True, eq=False)
class PosteriorGrid:
    tau: np.ndarray
    prior_density: np.ndarray
    likelihood: np.ndarray
    posterior_density: np.ndarray
    normalization_constant: float

    def _cdf(self, dens: np.ndarray) -> np.ndarray:
        steps = 0.5 * (dens[1:] + dens[:-1]) * np.diff(self.tau)
        cdf = np.concatenate([[0.0], np.cumsum(steps)])
        return cdf / cdf[-1]

    def prior_cdf(self) -> np.ndarray:
        """Prior distribution function renormalized to the grid."""
        return self._cdf(self.prior_density)

    def posterior_cdf(self) -> np.ndarray:
        return self._cdf(self.posterior_density)

    def prior_mean(self) -> float:
        w = _trapezoid(self.prior_density, self.tau)
        return float(_trapezoid(self.tau * self.prior_density, self.tau) / w)

    @property
    def mass(self) -> float:
        return float(_trapezoid(self.posterior_density, self.tau))


def tau_grid(tau_max: float = 5.0, step: float = 1e-3) -> np.ndarray:
    if not (tau_max > 0.0 and 0.0 < step <= tau_max):
        raise ValidationError("need tau_max > 0 and 0 < step <= tau_max")
    count = int(round(tau_max / step))
    if not math.isclose(count * step, tau_max, rel_tol=1e-9):
        raise ValidationError("tau_max must be a whole number of steps")
    return np.linspace(0.0, tau_max, count + 1)


def posterior_from_likelihood(prior, tau: np.ndarray,
                              likelihood: Callable[[np.ndarray], np.ndarray] | np.ndarray
                              ) -> PosteriorGrid:
    """Prior times likelihood on ``tau``, normalized by the trapezoid rule."""
    tau = np.asarray(tau, dtype=float)
    prior_d = prior.density(tau)
    like = np.asarray(likelihood(tau) if callable(likelihood) else likelihood, dtype=float)
    unnorm = prior_d * like
    z = float(_trapezoid(unnorm, tau))
    if not z > 0.0:
        raise ValidationError("prior puts no mass where the likelihood is positive")
    return PosteriorGrid(tau, prior_d, like, unnorm / z, z)


@lru_cache(maxsize=65536)
def _takeoff(r0: float, tau: float) -> float:
    return major_outbreak_prob(r0, tau)


def tau_posterior(prior, observed_fraction: float, tau_max: float = 5.0,
                  step: float = 1e-3) -> PosteriorGrid:
    """Posterior density of ``tau_i`` given one major outbreak of size ``observed_fraction``."""
    r0_hat = r0_from_final_size(observed_fraction)
    tau = tau_grid(tau_max, step)
    like = np.array([_takeoff(r0_hat, float(t)) for t in tau])
    return posterior_from_likelihood(prior, tau, like)


def posterior_mean(grid: PosteriorGrid) -> float:
    if abs(grid.mass - 1.0) > NORM_TOL:
        raise ValidationError(f"posterior integrates to {grid.mass}, not 1")
    return float(_trapezoid(grid.tau * grid.posterior_density, grid.tau))
