"""Pure-Python reference kernels.

Every routine here has a twin in ``_ckernels.pyx`` that consumes the random
stream in exactly the same order, so both backends produce bit-identical
output for the same seed.  Keep the two files in lockstep.
"""
from __future__ import annotations

import heapq
import math

import numpy as np

from .errors import NumericalError

MASK64 = 0xFFFFFFFFFFFFFFFF
TWO_M53 = 1.0 / 9007199254740992.0

# coefficient-of-variation squared below which a period is a point mass
CV2_POINT = 1e-8

EV_INFECTION = 0
EV_ACTIVATION = 1
EV_REMOVAL = 2
_CONTACT = 3

BACKEND = "python"


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a SplitMix64 state; return ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """xoshiro256** generator seeded through SplitMix64.

    The state is four 64-bit words.  ``random()`` returns a double in
    [0, 1) built from the top 53 bits; ``random_open()`` returns one in
    (0, 1], which is what logarithms need.
    """

    __slots__ = ("s",)

    def __init__(self, seed: int) -> None:
        sm = int(seed) & MASK64
        s = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            s.append(out)
        self.s = s

    def next_u64(self) -> int:
        s = self.s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def random(self) -> float:
        return (self.next_u64() >> 11) * TWO_M53

    def random_open(self) -> float:
        return ((self.next_u64() >> 11) + 1) * TWO_M53

    def state(self) -> tuple[int, int, int, int]:
        return tuple(self.s)


def standard_normal(rng: Xoshiro256) -> float:
    # Marsaglia polar method, second variate discarded
    while True:
        u = 2.0 * rng.random() - 1.0
        v = 2.0 * rng.random() - 1.0
        s = u * u + v * v
        if 0.0 < s < 1.0:
            return u * math.sqrt(-2.0 * math.log(s) / s)


def standard_gamma(rng: Xoshiro256, shape: float) -> float:
    """Marsaglia-Tsang squeeze; shape < 1 via the U**(1/shape) boost."""
    if shape < 1.0:
        g = standard_gamma(rng, shape + 1.0)
        u = rng.random()
        return g * u ** (1.0 / shape)
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        while True:
            x = standard_normal(rng)
            v = 1.0 + c * x
            if v > 0.0:
                break
        v = v * v * v
        u = rng.random_open()
        x2 = x * x
        if u < 1.0 - 0.0331 * (x2 * x2):
            return d * v
        if math.log(u) < 0.5 * x2 + d * (1.0 - v + math.log(v)):
            return d * v


def gamma_variate(rng: Xoshiro256, mean: float, cv: float) -> float:
    cv2 = cv * cv
    if mean == 0.0 or cv2 < CV2_POINT:
        return mean
    return standard_gamma(rng, 1.0 / cv2) * (mean * cv2)


def exponential(rng: Xoshiro256, rate: float) -> float:
    return -math.log(rng.random_open()) / rate


def log_factorial(k: float) -> float:
    # plain arithmetic so the compiled twin rounds identically
    if k < 16.0:
        total = 0.0
        i = 2.0
        while i <= k:
            total += math.log(i)
            i += 1.0
        return total
    x = k + 1.0
    x2 = x * x
    series = (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * x2)) / x2) / x2) / x
    return (x - 0.5) * math.log(x) - x + 0.9189385332046727 + series


def poisson(rng: Xoshiro256, lam: float) -> int:
    if lam <= 0.0:
        return 0
    if lam < 10.0:
        enlam = math.exp(-lam)
        x = 0
        prod = 1.0
        while True:
            prod *= rng.random_open()
            if prod > enlam:
                x += 1
            else:
                return x
    # Hoermann's PTRS transformed rejection
    slam = math.sqrt(lam)
    loglam = math.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = rng.random() - 0.5
        v = rng.random_open()
        us = 0.5 - abs(u)
        k = math.floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= vr:
            return int(k)
        if k < 0 or (us < 0.013 and v > us):
            continue
        if (math.log(v) + math.log(invalpha) - math.log(a / (us * us) + b)
                <= -lam + k * loglam - log_factorial(k)):
            return int(k)


def gamma_draws(mean: float, cv: float, seed: int, size: int) -> np.ndarray:
    rng = Xoshiro256(seed)
    out = np.empty(size)
    for i in range(size):
        out[i] = gamma_variate(rng, mean, cv)
    return out


# --------------------------------------------------------------------------
# finite-population event-driven epidemic

def simulate(n: int, k: int, lam: float, lat_mean: float, lat_cv: float,
             inf_mean: float, inf_cv: float, seed: int):
    """Run one epidemic; return ``(times, kinds, ids)`` of the event log."""
    rng = Xoshiro256(seed)
    state = bytearray(n)  # 0 S, 1 E, 2 I, 3 R
    removal = [0.0] * n
    heap: list = []
    seq = 0
    times: list[float] = []
    kinds: list[int] = []
    ids: list[int] = []
    nm1 = n - 1

    for i in range(k):
        state[i] = 2
        dur = gamma_variate(rng, inf_mean, inf_cv)
        removal[i] = dur
        heapq.heappush(heap, (dur, seq, EV_REMOVAL, i))
        seq += 1
        tc = exponential(rng, lam)
        if tc < dur:
            heapq.heappush(heap, (tc, seq, _CONTACT, i))
            seq += 1

    while heap:
        t, _, kind, i = heapq.heappop(heap)
        if kind == _CONTACT:
            j = int(rng.random() * nm1)
            if j >= i:
                j += 1
            if state[j] == 0:
                state[j] = 1
                lat = gamma_variate(rng, lat_mean, lat_cv)
                dur = gamma_variate(rng, inf_mean, inf_cv)
                ta = t + lat
                removal[j] = ta + dur
                times.append(t)
                kinds.append(EV_INFECTION)
                ids.append(j)
                heapq.heappush(heap, (ta, seq, EV_ACTIVATION, j))
                seq += 1
            tc = t + exponential(rng, lam)
            if tc < removal[i]:
                heapq.heappush(heap, (tc, seq, _CONTACT, i))
                seq += 1
        elif kind == EV_ACTIVATION:
            state[i] = 2
            times.append(t)
            kinds.append(EV_ACTIVATION)
            ids.append(i)
            heapq.heappush(heap, (removal[i], seq, EV_REMOVAL, i))
            seq += 1
            tc = t + exponential(rng, lam)
            if tc < removal[i]:
                heapq.heappush(heap, (tc, seq, _CONTACT, i))
                seq += 1
        else:
            state[i] = 3
            times.append(t)
            kinds.append(EV_REMOVAL)
            ids.append(i)

    return (np.asarray(times, dtype=np.float64),
            np.asarray(kinds, dtype=np.int8),
            np.asarray(ids, dtype=np.int64))


def final_sizes(n: int, k: int, lam: float, lat_mean: float, lat_cv: float,
                inf_mean: float, inf_cv: float, seeds) -> np.ndarray:
    out = np.empty(len(seeds), dtype=np.int64)
    for r, s in enumerate(seeds):
        _, kinds, _ = simulate(n, k, lam, lat_mean, lat_cv, inf_mean, inf_cv, int(s))
        out[r] = int(np.count_nonzero(kinds == EV_INFECTION))
    return out


# --------------------------------------------------------------------------
# branching approximation

def branching(k: int, lam: float, inf_mean: float, inf_cv: float,
              cap: int, seed: int) -> tuple[bool, int]:
    """Generation-wise branching process; return ``(reached_cap, total)``.

    A generation of ``m`` infectives has total infectious time
    Gamma(m/cv^2, scale=mean*cv^2) and Poisson(lam * total_time) offspring.
    """
    rng = Xoshiro256(seed)
    cv2 = inf_cv * inf_cv
    total = k
    gen = k
    while True:
        if total >= cap:
            return True, total
        if gen == 0:
            return False, total
        if cv2 < CV2_POINT:
            t_inf = gen * inf_mean
        else:
            t_inf = standard_gamma(rng, gen / cv2) * (inf_mean * cv2)
        births = poisson(rng, lam * t_inf)
        total += births
        gen = births


def branching_batch(k: int, lam: float, inf_mean: float, inf_cv: float,
                    cap: int, seeds) -> tuple[np.ndarray, np.ndarray]:
    reached = np.empty(len(seeds), dtype=bool)
    totals = np.empty(len(seeds), dtype=np.int64)
    for r, s in enumerate(seeds):
        reached[r], totals[r] = branching(k, lam, inf_mean, inf_cv, cap, int(s))
    return reached, totals


# --------------------------------------------------------------------------
# special functions

_GAMMA_EPS = 1e-16
_GAMMA_ITMAX = 10000


def _gamma_series(a: float, x: float) -> float:
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(_GAMMA_ITMAX):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _GAMMA_EPS:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise NumericalError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _gamma_cfrac(a: float, x: float) -> float:
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_ITMAX):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h
    raise NumericalError(f"incomplete gamma fraction did not converge (a={a}, x={x})")


def gammainc_lower(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if x <= 0.0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_cfrac(a, x)


def gammainc_upper(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x)."""
    if x <= 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cfrac(a, x)


# --------------------------------------------------------------------------
# Euler-Lotka quadrature oracle

class _Period:
    __slots__ = ("mean", "point", "shape", "rate", "lgshape")

    def __init__(self, mean: float, cv: float) -> None:
        cv2 = cv * cv
        self.mean = mean
        self.point = mean == 0.0 or cv2 < CV2_POINT
        if not self.point:
            self.shape = 1.0 / cv2
            self.rate = 1.0 / (mean * cv2)
            self.lgshape = math.lgamma(self.shape)

    def cdf(self, x: float) -> float:
        if self.point:
            return 1.0 if x >= self.mean else 0.0
        return gammainc_lower(self.shape, x * self.rate)

    def sf(self, x: float) -> float:
        if self.point:
            return 1.0 if x < self.mean else 0.0
        return gammainc_upper(self.shape, x * self.rate)

    def pdf(self, x: float) -> float:
        y = x * self.rate
        if y <= 0.0:
            return self.rate if self.shape == 1.0 and x >= 0.0 else 0.0
        return self.rate * math.exp((self.shape - 1.0) * math.log(y) - y - self.lgshape)

    def upper_quantile(self, tail: float) -> float:
        """Smallest x (to 1 ulp-ish) with sf(x) <= tail."""
        if self.point:
            return self.mean
        hi = max(self.mean, 1e-300)
        while self.sf(hi) > tail:
            hi *= 2.0
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.sf(mid) > tail:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-12 * hi:
                break
        return hi


# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1]
_XGK = (0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
        0.207784955007898467600689403773245, 0.0)
_WGK = (0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
        0.204432940075298892414161999234649, 0.209482141084727828012999174891714)
_WG = (0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
       0.381830050505118944950369775488975, 0.417959183673469387755102040816327)


def _gk15(f, a: float, b: float) -> tuple[float, float]:
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    fc = f(c)
    kron = fc * _WGK[7]
    gauss = fc * _WG[3]
    for j in range(7):
        dx = h * _XGK[j]
        fsum = f(c - dx) + f(c + dx)
        kron += _WGK[j] * fsum
        if j % 2 == 1:
            gauss += _WG[j // 2] * fsum
    return kron * h, abs((kron - gauss) * h)


_MAX_SUBDIV = 4000


def _adaptive(f, a: float, b: float, eps: float) -> float:
    """Globally adaptive GK15: bisect the worst panel until the summed error
    estimate drops below ``eps``."""
    value, err = _gk15(f, a, b)
    heap = [(-err, a, b, value)]
    total = value
    total_err = err
    count = 1
    while total_err > eps and total_err > 1e-14 * abs(total):
        if count >= _MAX_SUBDIV:
            raise NumericalError(
                f"adaptive quadrature on [{a}, {b}] stalled at error {total_err:.3g}")
        neg_err, lo, hi, v = heapq.heappop(heap)
        m = 0.5 * (lo + hi)
        if not lo < m < hi:
            raise NumericalError(f"adaptive quadrature exhausted precision near {m}")
        v1, e1 = _gk15(f, lo, m)
        v2, e2 = _gk15(f, m, hi)
        total += v1 + v2 - v
        total_err += e1 + e2 + neg_err
        heapq.heappush(heap, (-e1, lo, m, v1))
        heapq.heappush(heap, (-e2, m, hi, v2))
        count += 1
    # re-sum to shed accumulated rounding from the running updates
    return math.fsum(item[3] for item in heap)


def integrate(f, edges, eps: float, pieces: int = 1) -> float:
    """Adaptive Gauss-Kronrod over consecutive ``edges``.

    Each interval is pre-split into ``pieces`` panels so a narrow peak cannot
    hide between the first set of nodes.  ``eps`` is the absolute tolerance
    for the whole range.
    """
    spans = [(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]
    if not spans:
        return 0.0
    local = eps / (len(spans) * pieces)
    total = 0.0
    for a, b in spans:
        h = (b - a) / pieces
        for p in range(pieces):
            lo = a + p * h
            hi = b if p == pieces - 1 else lo + h
            total += _adaptive(f, lo, hi, local)
    return total


def euler_lotka_integral(alpha: float, lam: float, lat_mean: float, lat_cv: float,
                         inf_mean: float, inf_cv: float, tol: float = 1e-10) -> float:
    """Integral of exp(-alpha t) * lam * P(L < t < L + I) over t >= 0.

    Computed by nested adaptive Gauss-Kronrod on the convolution
    ``int_0^t f_L(s) (1 - F_I(t - s)) ds``; no transform identities are used.
    """
    L = _Period(lat_mean, lat_cv)
    I = _Period(inf_mean, inf_cv)
    tail = 1e-15
    q_lat = L.upper_quantile(1e-12)

    if L.point and I.point:
        def occupancy(t):
            return 1.0 if L.mean < t < L.mean + I.mean else 0.0
    elif L.point:
        def occupancy(t):
            return I.sf(t - L.mean) if t > L.mean else 0.0
    elif I.point:
        def occupancy(t):
            if t <= I.mean:
                return L.cdf(t)
            x = t * L.rate
            if x > L.shape:
                return gammainc_upper(L.shape, (t - I.mean) * L.rate) - gammainc_upper(L.shape, x)
            return L.cdf(t) - L.cdf(t - I.mean)
    else:
        inner_eps = tol * 1e-3
        singular = L.shape < 1.0

        def occupancy(t):
            top = min(t, q_lat)
            if top <= 0.0:
                return 0.0
            if singular:
                # s = top * w**(1/shape) removes the s**(shape-1) singularity
                inv = 1.0 / L.shape
                scale = math.exp(L.shape * math.log(top * L.rate) - L.lgshape) * inv

                def g(w):
                    s = top * w ** inv
                    return scale * math.exp(-s * L.rate) * I.sf(t - s)
                return integrate(g, [0.0, 1.0], inner_eps)
            return integrate(lambda s: L.pdf(s) * I.sf(t - s), [0.0, top], inner_eps)

    # truncation: occupancy <= P(L > T/2) + P(I > T/2)
    t_max = 2.0 * max(L.upper_quantile(tail), I.upper_quantile(tail))
    if alpha > 0.0 and lam > 1e-14:
        t_max = min(t_max, math.log(lam / 1e-14) / alpha)
    edges = {0.0, t_max}
    for b in (L.mean, I.mean, L.mean + I.mean):
        if 0.0 < b < t_max:
            edges.add(b)
    edges = sorted(edges)

    def integrand(t):
        return math.exp(-alpha * t) * lam * occupancy(t)

    return integrate(integrand, edges, tol, 16)
