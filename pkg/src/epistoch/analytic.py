"""Closed-form and root-found quantities of the stochastic SEIR model.

All fixed-point problems here are rewritten so the function handed to the
root finder is strictly monotone on its bracket with a single sign change:

* outbreak probability / final size: ``q(p) = [log1p(p r0 c)/c + log1p(-p)] / p``
  which falls from ``r0 - 1`` at ``p -> 0`` to ``-inf`` at ``p -> 1``;
* Malthusian parameter: ``log r0 + log phi_L(a) + log(1 - phi_I(a)) - log(a mu_I)``
  which falls from ``log r0`` at ``a -> 0`` to ``-inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from ._backend import kernels
from .distributions import GammaSpec, log1p_over, log_laplace_transform
from .errors import NumericalError, ValidationError

__all__ = [
    "GrowthParams",
    "VaccinationCoverage",
    "critical_vaccination_coverage",
    "euler_lotka_residual",
    "final_size_fraction",
    "major_outbreak_prob",
    "malthusian",
    "outbreak_prob_k",
    "prob_k_from_pi",
    "r0_from_final_size",
    "r0_from_growth",
]

ROOT_XTOL = 1e-13
ROOT_MAXITER = 200
_EDGE = 1e-14


def _check_r0(r0: float) -> None:
    if not (math.isfinite(r0) and r0 > 0.0):
        raise ValidationError(f"r0 must be positive and finite, got {r0!r}")


@dataclass(frozen=True)
class GrowthParams:
    """Reproduction number plus latent and infectious period laws."""

    r0: float
    latent: GammaSpec
    infectious: GammaSpec

    def __post_init__(self) -> None:
        _check_r0(self.r0)
        if self.infectious.mean <= 0.0:
            raise ValidationError("infectious period mean must be positive")

    @property
    def contact_rate(self) -> float:
        return self.r0 / self.infectious.mean


def _solve(f, lo: float, hi: float) -> float:
    try:
        return brentq(f, lo, hi, xtol=ROOT_XTOL, maxiter=ROOT_MAXITER)
    except (RuntimeError, ValueError) as exc:
        raise NumericalError(str(exc)) from exc


def _takeoff_root(r0: float, cv2: float) -> float:
    """Largest root of 1 - p = (1 + p r0 cv2)^(-1/cv2), for r0 > 1."""

    def q(p: float) -> float:
        return (log1p_over(p * r0, cv2) + math.log1p(-p)) / p

    hi = 1.0 - _EDGE
    if q(hi) >= 0.0:
        # root lies within _EDGE of 1; plain iteration contracts there
        p = 1.0
        for _ in range(100):
            nxt = -math.expm1(-log1p_over(p * r0, cv2))
            if nxt == p:
                break
            p = nxt
        return p
    return _solve(q, _EDGE, hi)


def final_size_fraction(r0: float) -> float:
    """Largest root of 1 - rho = exp(-r0 rho); zero when r0 <= 1."""
    _check_r0(r0)
    if r0 <= 1.0:
        return 0.0
    return _takeoff_root(r0, 0.0)


def r0_from_final_size(rho: float) -> float:
    """Invert the final-size relation: -log(1 - rho) / rho."""
    if not 0.0 < rho < 1.0:
        raise ValidationError(f"final fraction must lie in (0, 1), got {rho!r}")
    return -math.log1p(-rho) / rho


def major_outbreak_prob(r0: float, tau_i: float) -> float:
    """Probability that one initial infective starts a major outbreak.

    Depends on the infectious period only through its coefficient of
    variation ``tau_i``; the latent period plays no part.
    """
    _check_r0(r0)
    if not (math.isfinite(tau_i) and tau_i >= 0.0):
        raise ValidationError(f"tau_i must be finite and >= 0, got {tau_i!r}")
    if r0 <= 1.0:
        return 0.0
    if tau_i == 1.0:
        return 1.0 - 1.0 / r0
    return _takeoff_root(r0, tau_i * tau_i)


def prob_k_from_pi(pi: float, k: int) -> float:
    """1 - (1 - pi)^k for k independent introductions."""
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise ValidationError(f"k must be a positive integer, got {k!r}")
    if not 0.0 <= pi <= 1.0:
        raise ValidationError(f"pi must lie in [0, 1], got {pi!r}")
    return -math.expm1(k * math.log1p(-pi)) if pi < 1.0 else 1.0


def outbreak_prob_k(r0: float, tau_i: float, k: int) -> float:
    return prob_k_from_pi(major_outbreak_prob(r0, tau_i), k)


def _log_growth_balance(alpha: float, r0: float, latent: GammaSpec,
                        infectious: GammaSpec) -> float:
    log_phi_i = log_laplace_transform(infectious, alpha)
    return (math.log(r0) + log_laplace_transform(latent, alpha)
            + math.log(-math.expm1(log_phi_i)) - math.log(alpha * infectious.mean))


def malthusian(params: GrowthParams) -> float:
    """Early exponential growth rate (per day) for r0 > 1."""
    if params.r0 <= 1.0:
        raise ValidationError("no positive growth rate unless r0 > 1")

    def f(a: float) -> float:
        return _log_growth_balance(a, params.r0, params.latent, params.infectious)

    lo = 1e-12
    hi = 1.0 / params.infectious.mean
    for _ in range(2000):
        if f(hi) < 0.0:
            break
        lo = hi
        hi *= 2.0
    else:
        raise NumericalError("could not bracket the Malthusian parameter")
    return _solve(f, lo, hi)


def r0_from_growth(alpha: float, latent: GammaSpec, infectious: GammaSpec) -> float:
    """Reproduction number implied by growth rate ``alpha`` and the period laws."""
    if not (math.isfinite(alpha) and alpha > 0.0):
        raise ValidationError(f"alpha must be positive, got {alpha!r}")
    if infectious.mean <= 0.0:
        raise ValidationError("infectious period mean must be positive")
    log_phi_i = log_laplace_transform(infectious, alpha)
    return (alpha * infectious.mean * math.exp(-log_laplace_transform(latent, alpha))
            / -math.expm1(log_phi_i))


def euler_lotka_residual(alpha: float, params: GrowthParams, tol: float = 1e-10) -> float:
    """Left side of the Euler-Lotka equation by direct quadrature.

    Integrates ``exp(-alpha t) * lambda * P(L < t < L + I)`` with the
    occupancy probability itself obtained from the convolution of the latent
    density with the infectious survival function.  No Laplace transform is
    used, so this is an independent check on :func:`malthusian`.
    """
    if not (math.isfinite(alpha) and alpha >= 0.0):
        raise ValidationError(f"alpha must be >= 0, got {alpha!r}")
    lat, inf = params.latent, params.infectious
    return kernels.euler_lotka_integral(alpha, params.contact_rate, lat.mean, lat.cv,
                                        inf.mean, inf.cv, tol)


@dataclass(frozen=True)
class VaccinationCoverage:
    coverage: float
    attainable: bool

    def __float__(self) -> float:
        return self.coverage


def critical_vaccination_coverage(r0: float, efficacy: float = 1.0) -> VaccinationCoverage:
    """Fraction to vaccinate for herd immunity: (1 - 1/r0) / efficacy.

    ``attainable`` is False when that fraction exceeds 1.
    """
    _check_r0(r0)
    if not 0.0 < efficacy <= 1.0:
        raise ValidationError(f"efficacy must lie in (0, 1], got {efficacy!r}")
    if r0 <= 1.0:
        return VaccinationCoverage(0.0, True)
    value = (1.0 - 1.0 / r0) / efficacy
    return VaccinationCoverage(value, value <= 1.0)
