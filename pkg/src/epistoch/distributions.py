"""Gamma period laws parameterized by mean and coefficient of variation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _pykernels
from ._backend import kernels
from ._pykernels import CV2_POINT, Xoshiro256
from .errors import ValidationError

__all__ = [
    "CV2_POINT",
    "GammaSpec",
    "RandomStream",
    "laplace_transform",
    "log_laplace_transform",
    "offspring_pgf",
    "sample",
    "sample_many",
]

RandomStream = Xoshiro256


def log1p_over(x: float, cv2: float) -> float:
    """``log1p(x * cv2) / cv2``, switching to its series when cv2 is tiny.

    Below ``CV2_POINT`` the first-order term of the series is kept, so the
    switch is continuous to ~1e-14 while cv2 = 0 gives exactly ``x``.
    """
    if cv2 < CV2_POINT:
        return x - 0.5 * x * x * cv2
    return math.log1p(x * cv2) / cv2


@dataclass(frozen=True)
class GammaSpec:
    """Gamma law with the given mean (days) and coefficient of variation.

    ``cv == 0`` (or ``mean == 0``) is the point mass at ``mean``.
    """

    mean: float
    cv: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mean) and self.mean >= 0.0):
            raise ValidationError(f"mean must be finite and >= 0, got {self.mean!r}")
        if not (math.isfinite(self.cv) and self.cv >= 0.0):
            raise ValidationError(f"cv must be finite and >= 0, got {self.cv!r}")

    @classmethod
    def from_shape_rate(cls, shape: float, rate: float) -> GammaSpec:
        if shape <= 0.0 or rate <= 0.0:
            raise ValidationError("shape and rate must be positive")
        return cls(mean=shape / rate, cv=1.0 / math.sqrt(shape))

    @property
    def is_point_mass(self) -> bool:
        return self.mean == 0.0 or self.cv * self.cv < CV2_POINT

    @property
    def shape(self) -> float:
        return math.inf if self.is_point_mass else 1.0 / (self.cv * self.cv)

    @property
    def rate(self) -> float:
        return math.inf if self.is_point_mass else 1.0 / (self.mean * self.cv * self.cv)

    @property
    def variance(self) -> float:
        return (self.mean * self.cv) ** 2


def log_laplace_transform(spec: GammaSpec, s: float) -> float:
    """Natural log of E[exp(-s X)]."""
    if not s >= 0.0:
        raise ValidationError(f"Laplace argument must be >= 0, got {s!r}")
    return -log1p_over(s * spec.mean, spec.cv * spec.cv)


def laplace_transform(spec: GammaSpec, s: float) -> float:
    """E[exp(-s X)] = (1 + s cv^2 mean)^(-1/cv^2); exp(-s mean) when cv = 0."""
    return math.exp(log_laplace_transform(spec, s))


def offspring_pgf(s: float, r0: float, tau_i: float) -> float:
    """Generating function of the negative-binomial offspring count.

    The number of contacts made by one infective is Poisson(lambda * I) with
    I Gamma(mean, tau_i), so E[s^X] = (1 + (1 - s) r0 tau_i^2)^(-1/tau_i^2).
    """
    if not 0.0 <= s <= 1.0:
        raise ValidationError(f"s must lie in [0, 1], got {s!r}")
    if not r0 > 0.0:
        raise ValidationError(f"r0 must be positive, got {r0!r}")
    if not tau_i >= 0.0:
        raise ValidationError(f"tau_i must be >= 0, got {tau_i!r}")
    return math.exp(-log1p_over((1.0 - s) * r0, tau_i * tau_i))


def sample(spec: GammaSpec, rng: Xoshiro256) -> float:
    """One draw from ``spec`` using the caller's stream (Marsaglia-Tsang)."""
    return _pykernels.gamma_variate(rng, spec.mean, spec.cv)


def sample_many(spec: GammaSpec, seed: int, size: int) -> np.ndarray:
    """``size`` draws from a fresh stream seeded with ``seed``.

    Identical to calling :func:`sample` ``size`` times on
    ``RandomStream(seed)``, but runs in the compiled kernel when present.
    """
    return kernels.gamma_draws(spec.mean, spec.cv, int(seed) & 0xFFFFFFFFFFFFFFFF, int(size))
