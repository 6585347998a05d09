"""Event-driven stochastic SEIR epidemics and their branching approximation.

Individuals ``0 .. k-1`` are the initial infectives: they start infectious at
t = 0 with no latent period.  Each infective makes contacts at rate
``lambda = r0 / mean(I)`` during its infectious period, each with one of the
other ``n - 1`` individuals chosen uniformly; contacts with non-susceptibles
are wasted.  The epidemic ends when nobody is latent or infectious.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from ._pykernels import EV_ACTIVATION, EV_INFECTION, EV_REMOVAL
from .analytic import final_size_fraction
from .distributions import GammaSpec
from .errors import ValidationError

__all__ = [
    "BranchingOutcome",
    "BranchingSummary",
    "EpidemicParams",
    "ReplicateSummary",
    "SimOutcome",
    "branching_takeoff",
    "classify_major",
    "major_threshold",
    "replicate",
    "replicate_seeds",
    "simulate",
    "simulate_branching",
]

EVENT_NAMES = {EV_INFECTION: "infection", EV_ACTIVATION: "activation", EV_REMOVAL: "removal"}
MAJOR_CUT = 0.5
DEFAULT_CAP = 10_000
_U64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class EpidemicParams:
    n: int
    k: int
    r0: float
    latent: GammaSpec
    infectious: GammaSpec

    def __post_init__(self) -> None:
        for name in ("n", "k"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v:
                raise ValidationError(f"{name} must be an integer, got {v!r}")
        if self.n < 2:
            raise ValidationError("population size n must be at least 2")
        if not 1 <= self.k < self.n:
            raise ValidationError(f"need 1 <= k < n, got k={self.k}, n={self.n}")
        if not (math.isfinite(self.r0) and self.r0 > 0.0):
            raise ValidationError(f"r0 must be positive, got {self.r0!r}")
        if self.infectious.mean <= 0.0:
            raise ValidationError("infectious period mean must be positive")

    @property
    def contact_rate(self) -> float:
        return self.r0 / self.infectious.mean

    def _kernel_args(self) -> tuple:
        return (int(self.n), int(self.k), self.contact_rate, self.latent.mean, self.latent.cv,
                self.infectious.mean, self.infectious.cv)


@dataclass(frozen=True, eq=False)
class SimOutcome:
    """One realized epidemic.

    The event log holds infections, activations (end of latency) and
    removals in processing order.  Initial infectives contribute only their
    removals.
    """

    n: int
    k: int
    times: np.ndarray
    kinds: np.ndarray
    ids: np.ndarray
    major: bool | None = field(default=None)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SimOutcome):
            return NotImplemented
        return (self.n == other.n and self.k == other.k and self.major == other.major
                and np.array_equal(self.times, other.times)
                and np.array_equal(self.kinds, other.kinds)
                and np.array_equal(self.ids, other.ids))

    @property
    def final_size(self) -> int:
        """Number of infections during the outbreak, initial cases excluded."""
        return int(np.count_nonzero(self.kinds == EV_INFECTION))

    @property
    def final_fraction(self) -> float:
        return self.final_size / self.n

    @property
    def duration(self) -> float:
        return float(self.times[-1]) if self.times.size else 0.0

    def events(self):
        """Iterate ``(time, kind_name, individual)`` in order."""
        for t, kd, i in zip(self.times.tolist(), self.kinds.tolist(), self.ids.tolist()):
            yield t, EVENT_NAMES[kd], i

    def removal_times(self) -> np.ndarray:
        return self.times[self.kinds == EV_REMOVAL]

    def trajectories(self) -> dict[str, np.ndarray]:
        """Step functions S, E, I, R sampled right after every event.

        Index 0 is the initial state at t = 0.
        """
        inf = np.cumsum(self.kinds == EV_INFECTION)
        act = np.cumsum(self.kinds == EV_ACTIVATION)
        rem = np.cumsum(self.kinds == EV_REMOVAL)
        zero = np.zeros(1, dtype=np.int64)
        inf, act, rem = (np.concatenate([zero, a]) for a in (inf, act, rem))
        return {
            "t": np.concatenate([[0.0], self.times]),
            "S": self.n - self.k - inf,
            "E": inf - act,
            "I": self.k + act - rem,
            "R": rem,
        }


def major_threshold(params: EpidemicParams) -> float:
    """Final size separating minor from major outbreaks: half of rho* n."""
    return MAJOR_CUT * final_size_fraction(params.r0) * params.n


def _is_major(final_size: int, params: EpidemicParams, cut: float = MAJOR_CUT) -> bool:
    if params.r0 <= 1.0:
        return False
    return final_size >= cut * final_size_fraction(params.r0) * params.n


def classify_major(outcome: SimOutcome, params: EpidemicParams) -> str:
    return "major" if _is_major(outcome.final_size, params) else "minor"


def simulate(params: EpidemicParams, seed: int) -> SimOutcome:
    times, kinds, ids = kernels.simulate(*params._kernel_args(), int(seed) & _U64)
    outcome = SimOutcome(params.n, params.k, times, kinds, ids)
    major = _is_major(outcome.final_size, params)
    return SimOutcome(params.n, params.k, times, kinds, ids, major)


def replicate_seeds(base_seed: int, reps: int) -> np.ndarray:
    """Per-replication seeds ``base_seed XOR index``.

    Two batches share seeds whenever their base seeds agree above the bits
    used by the index, so base seeds for independent batches should differ
    in their high bits (for example ``batch << 32``).
    """
    return np.uint64(int(base_seed) & _U64) ^ np.arange(reps, dtype=np.uint64)


@dataclass(frozen=True)
class ReplicateSummary:
    reps: int
    major_count: int
    major_fraction: float
    major_fraction_se: float
    mean_major_final_fraction: float
    mean_major_final_fraction_se: float
    final_sizes: np.ndarray = field(repr=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ReplicateSummary):
            return NotImplemented
        return (self.reps == other.reps and self.major_count == other.major_count
                and np.array_equal(self.final_sizes, other.final_sizes))


def _final_sizes(params: EpidemicParams, seeds: np.ndarray, workers: int) -> np.ndarray:
    args = params._kernel_args()
    if workers <= 1 or seeds.size < 2:
        return kernels.final_sizes(*args, seeds)
    chunks = np.array_split(seeds, min(workers, seeds.size))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda c: kernels.final_sizes(*args, c), chunks))
    return np.concatenate(parts)


def summarize(final_sizes: np.ndarray, params: EpidemicParams,
              cut: float = MAJOR_CUT) -> ReplicateSummary:
    reps = int(final_sizes.size)
    if params.r0 > 1.0:
        major = final_sizes >= cut * final_size_fraction(params.r0) * params.n
    else:
        major = np.zeros(reps, dtype=bool)
    m = int(major.sum())
    frac = m / reps
    se = math.sqrt(frac * (1.0 - frac) / reps)
    if m:
        rho = final_sizes[major] / params.n
        mean_rho = float(rho.mean())
        se_rho = float(rho.std(ddof=1) / math.sqrt(m)) if m > 1 else math.nan
    else:
        mean_rho = se_rho = math.nan
    return ReplicateSummary(reps, m, frac, se, mean_rho, se_rho, final_sizes)


def replicate(params: EpidemicParams, reps: int, base_seed: int,
              workers: int = 1) -> ReplicateSummary:
    """Run ``reps`` independent epidemics and summarize them.

    Seeds are fixed before any work starts and results are gathered in
    replication order, so the summary does not depend on ``workers``.
    """
    if isinstance(reps, bool) or int(reps) != reps or reps < 1:
        raise ValidationError(f"reps must be a positive integer, got {reps!r}")
    seeds = replicate_seeds(base_seed, int(reps))
    return summarize(_final_sizes(params, seeds, int(workers)), params)


# --------------------------------------------------------------------------
# branching approximation

@dataclass(frozen=True)
class BranchingOutcome:
    reached_cap: bool
    total: int
    k: int

    @property
    def births(self) -> int:
        return self.total - self.k

    @property
    def extinct(self) -> bool:
        return not self.reached_cap


def _check_branching(r0: float, infectious: GammaSpec, k: int, cap: int) -> None:
    if not (math.isfinite(r0) and r0 > 0.0):
        raise ValidationError(f"r0 must be positive, got {r0!r}")
    if infectious.mean <= 0.0:
        raise ValidationError("infectious period mean must be positive")
    if int(k) != k or k < 1:
        raise ValidationError("k must be a positive integer")
    if int(cap) != cap or cap < 1000:
        raise ValidationError("cap must be an integer >= 1000")


def simulate_branching(r0: float, infectious: GammaSpec, seed: int, k: int = 1,
                       cap: int = DEFAULT_CAP) -> BranchingOutcome:
    """Branching process started by ``k`` infectives, run to extinction or ``cap``.

    Runs generation by generation: the offspring of a generation of ``m``
    infectives is Poisson with mean ``lambda`` times their summed infectious
    time, which is Gamma with shape ``m / tau^2``.  Extinction and total
    progeny have the same law as in the continuous-time process.  The
    latent period does not enter.
    """
    _check_branching(r0, infectious, k, cap)
    reached, total = kernels.branching(int(k), r0 / infectious.mean, infectious.mean,
                                       infectious.cv, int(cap), int(seed) & _U64)
    return BranchingOutcome(bool(reached), int(total), int(k))


@dataclass(frozen=True)
class BranchingSummary:
    reps: int
    takeoffs: int
    fraction: float
    se: float


def branching_takeoff(r0: float, infectious: GammaSpec, reps: int, base_seed: int,
                      k: int = 1, cap: int = DEFAULT_CAP) -> BranchingSummary:
    """Fraction of branching runs that reach ``cap``, with binomial SE."""
    _check_branching(r0, infectious, k, cap)
    seeds = replicate_seeds(base_seed, int(reps))
    reached, _ = kernels.branching_batch(int(k), r0 / infectious.mean, infectious.mean,
                                         infectious.cv, int(cap), seeds)
    m = int(np.count_nonzero(reached))
    frac = m / reps
    return BranchingSummary(int(reps), m, frac, math.sqrt(frac * (1.0 - frac) / reps))
