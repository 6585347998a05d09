# cython: language_level=3
"""Compiled kernels: twin of ``_pykernels`` with the same random-draw order.

The simulation and quadrature loops run without the GIL, so ``replicate``
can spread replications over threads.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, exp, sqrt, pow, floor, fabs, lgamma
from libc.stdint cimport uint64_t, int64_t, uint8_t
from libc.stdlib cimport malloc, free

from .errors import NumericalError

cnp.import_array()

BACKEND = "cython"

DEF CV2_POINT = 1e-8
DEF EV_INFECTION = 0
DEF EV_ACTIVATION = 1
DEF EV_REMOVAL = 2
DEF CONTACT = 3
DEF TWO_M53 = 1.1102230246251565e-16
DEF MAX_SUBDIV = 4000


# --------------------------------------------------------------------------
# random stream

cdef struct Rng:
    uint64_t s0, s1, s2, s3


cdef inline uint64_t _splitmix(uint64_t* state) noexcept nogil:
    state[0] = state[0] + <uint64_t>0x9E3779B97F4A7C15
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline void rng_seed(Rng* r, uint64_t seed) noexcept nogil:
    cdef uint64_t sm = seed
    r.s0 = _splitmix(&sm)
    r.s1 = _splitmix(&sm)
    r.s2 = _splitmix(&sm)
    r.s3 = _splitmix(&sm)


cdef inline uint64_t _rotl(uint64_t x, int k) noexcept nogil:
    return (x << k) | (x >> (64 - k))


cdef inline uint64_t next_u64(Rng* r) noexcept nogil:
    cdef uint64_t result = _rotl(r.s1 * 5, 7) * 9
    cdef uint64_t t = r.s1 << 17
    r.s2 ^= r.s0
    r.s3 ^= r.s1
    r.s1 ^= r.s2
    r.s0 ^= r.s3
    r.s2 ^= t
    r.s3 = _rotl(r.s3, 45)
    return result


cdef inline double rand_co(Rng* r) noexcept nogil:
    return <double>(next_u64(r) >> 11) * TWO_M53


cdef inline double rand_oc(Rng* r) noexcept nogil:
    return <double>((next_u64(r) >> 11) + 1) * TWO_M53


cdef double standard_normal(Rng* r) noexcept nogil:
    cdef double u, v, s
    while True:
        u = 2.0 * rand_co(r) - 1.0
        v = 2.0 * rand_co(r) - 1.0
        s = u * u + v * v
        if 0.0 < s < 1.0:
            return u * sqrt(-2.0 * log(s) / s)


cdef double standard_gamma(Rng* r, double shape) noexcept nogil:
    cdef double g, u, d, c, x, v, x2
    if shape < 1.0:
        g = standard_gamma(r, shape + 1.0)
        u = rand_co(r)
        return g * pow(u, 1.0 / shape)
    d = shape - 1.0 / 3.0
    c = 1.0 / sqrt(9.0 * d)
    while True:
        while True:
            x = standard_normal(r)
            v = 1.0 + c * x
            if v > 0.0:
                break
        v = v * v * v
        u = rand_oc(r)
        x2 = x * x
        if u < 1.0 - 0.0331 * (x2 * x2):
            return d * v
        if log(u) < 0.5 * x2 + d * (1.0 - v + log(v)):
            return d * v


cdef inline double gamma_variate(Rng* r, double mean, double cv) noexcept nogil:
    cdef double cv2 = cv * cv
    if mean == 0.0 or cv2 < CV2_POINT:
        return mean
    return standard_gamma(r, 1.0 / cv2) * (mean * cv2)


cdef inline double exponential(Rng* r, double rate) noexcept nogil:
    return -log(rand_oc(r)) / rate


cdef double log_factorial(double k) noexcept nogil:
    cdef double total, i, x, x2, series
    if k < 16.0:
        total = 0.0
        i = 2.0
        while i <= k:
            total += log(i)
            i += 1.0
        return total
    x = k + 1.0
    x2 = x * x
    series = (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * x2)) / x2) / x2) / x
    return (x - 0.5) * log(x) - x + 0.9189385332046727 + series


cdef int64_t poisson(Rng* r, double lam) noexcept nogil:
    cdef double enlam, prod, slam, loglam, b, a, invalpha, vr, u, v, us, k
    cdef int64_t x
    if lam <= 0.0:
        return 0
    if lam < 10.0:
        enlam = exp(-lam)
        x = 0
        prod = 1.0
        while True:
            prod *= rand_oc(r)
            if prod > enlam:
                x += 1
            else:
                return x
    slam = sqrt(lam)
    loglam = log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = rand_co(r) - 0.5
        v = rand_oc(r)
        us = 0.5 - fabs(u)
        k = floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= vr:
            return <int64_t>k
        if k < 0 or (us < 0.013 and v > us):
            continue
        if (log(v) + log(invalpha) - log(a / (us * us) + b)
                <= -lam + k * loglam - log_factorial(k)):
            return <int64_t>k


def gamma_draws(double mean, double cv, uint64_t seed, Py_ssize_t size):
    cdef Rng r
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(size)
    cdef double[::1] view = out
    cdef Py_ssize_t i
    rng_seed(&r, seed)
    with nogil:
        for i in range(size):
            view[i] = gamma_variate(&r, mean, cv)
    return out


# --------------------------------------------------------------------------
# event queue

cdef struct Event:
    double time
    int64_t seq
    int64_t who
    int kind


cdef inline bint _before(Event* a, Event* b) noexcept nogil:
    return a.time < b.time or (a.time == b.time and a.seq < b.seq)


cdef inline void heap_push(Event* h, Py_ssize_t* size, double time, int64_t seq,
                           int kind, int64_t who) noexcept nogil:
    cdef Py_ssize_t i = size[0]
    cdef Py_ssize_t parent
    cdef Event ev
    ev.time = time
    ev.seq = seq
    ev.kind = kind
    ev.who = who
    size[0] += 1
    while i > 0:
        parent = (i - 1) >> 1
        if _before(&ev, &h[parent]):
            h[i] = h[parent]
            i = parent
        else:
            break
    h[i] = ev


cdef inline Event heap_pop(Event* h, Py_ssize_t* size) noexcept nogil:
    cdef Event top = h[0]
    cdef Py_ssize_t n, i, child
    cdef Event last
    size[0] -= 1
    n = size[0]
    if n == 0:
        return top
    last = h[n]
    i = 0
    while True:
        child = 2 * i + 1
        if child >= n:
            break
        if child + 1 < n and _before(&h[child + 1], &h[child]):
            child += 1
        if _before(&h[child], &last):
            h[i] = h[child]
            i = child
        else:
            break
    h[i] = last
    return top


# --------------------------------------------------------------------------
# finite-population epidemic

cdef int64_t _run(int64_t n, int64_t k, double lam, double lat_mean, double lat_cv,
                  double inf_mean, double inf_cv, uint64_t seed,
                  double* times, signed char* kinds, int64_t* ids,
                  uint8_t* state, double* removal, Event* heap) noexcept nogil:
    """Run one epidemic; log into the buffers if ``times`` is not NULL.

    Returns the number of logged events when recording, otherwise the number
    of infection events.  Log buffers need room for 3n entries.
    """
    cdef Rng r
    cdef Py_ssize_t hsize = 0
    cdef int64_t seq = 0
    cdef int64_t nlog = 0
    cdef int64_t infections = 0
    cdef int64_t i, j
    cdef double nm1 = <double>(n - 1)
    cdef double dur, tc, lat, ta, t
    cdef Event ev
    cdef bint record = times != NULL

    rng_seed(&r, seed)
    for i in range(n):
        state[i] = 0
    for i in range(k):
        state[i] = 2
        dur = gamma_variate(&r, inf_mean, inf_cv)
        removal[i] = dur
        heap_push(heap, &hsize, dur, seq, EV_REMOVAL, i)
        seq += 1
        tc = exponential(&r, lam)
        if tc < dur:
            heap_push(heap, &hsize, tc, seq, CONTACT, i)
            seq += 1

    while hsize > 0:
        ev = heap_pop(heap, &hsize)
        t = ev.time
        i = ev.who
        if ev.kind == CONTACT:
            j = <int64_t>(rand_co(&r) * nm1)
            if j >= i:
                j += 1
            if state[j] == 0:
                state[j] = 1
                lat = gamma_variate(&r, lat_mean, lat_cv)
                dur = gamma_variate(&r, inf_mean, inf_cv)
                ta = t + lat
                removal[j] = ta + dur
                infections += 1
                if record:
                    times[nlog] = t
                    kinds[nlog] = EV_INFECTION
                    ids[nlog] = j
                    nlog += 1
                heap_push(heap, &hsize, ta, seq, EV_ACTIVATION, j)
                seq += 1
            tc = t + exponential(&r, lam)
            if tc < removal[i]:
                heap_push(heap, &hsize, tc, seq, CONTACT, i)
                seq += 1
        elif ev.kind == EV_ACTIVATION:
            state[i] = 2
            if record:
                times[nlog] = t
                kinds[nlog] = EV_ACTIVATION
                ids[nlog] = i
                nlog += 1
            heap_push(heap, &hsize, removal[i], seq, EV_REMOVAL, i)
            seq += 1
            tc = t + exponential(&r, lam)
            if tc < removal[i]:
                heap_push(heap, &hsize, tc, seq, CONTACT, i)
                seq += 1
        else:
            state[i] = 3
            if record:
                times[nlog] = t
                kinds[nlog] = EV_REMOVAL
                ids[nlog] = i
                nlog += 1
    return nlog if record else infections


cdef class _Workspace:
    cdef uint8_t* state
    cdef double* removal
    cdef Event* heap
    cdef int64_t n

    def __cinit__(self, int64_t n):
        self.n = n
        self.state = <uint8_t*>malloc(n * sizeof(uint8_t))
        self.removal = <double*>malloc(n * sizeof(double))
        self.heap = <Event*>malloc((2 * n + 4) * sizeof(Event))
        if self.state == NULL or self.removal == NULL or self.heap == NULL:
            raise MemoryError()

    def __dealloc__(self):
        free(self.state)
        free(self.removal)
        free(self.heap)


def simulate(int64_t n, int64_t k, double lam, double lat_mean, double lat_cv,
             double inf_mean, double inf_cv, uint64_t seed):
    """Run one epidemic; return ``(times, kinds, ids)`` of the event log."""
    cdef _Workspace ws = _Workspace(n)
    cdef int64_t cap = 3 * n
    cdef cnp.ndarray[cnp.float64_t, ndim=1] times = np.empty(cap, dtype=np.float64)
    cdef cnp.ndarray[cnp.int8_t, ndim=1] kinds = np.empty(cap, dtype=np.int8)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ids = np.empty(cap, dtype=np.int64)
    cdef double* tp = <double*>times.data
    cdef signed char* kp = <signed char*>kinds.data
    cdef int64_t* ip = <int64_t*>ids.data
    cdef int64_t nlog
    with nogil:
        nlog = _run(n, k, lam, lat_mean, lat_cv, inf_mean, inf_cv, seed,
                    tp, kp, ip, ws.state, ws.removal, ws.heap)
    return times[:nlog].copy(), kinds[:nlog].copy(), ids[:nlog].copy()


def final_sizes(int64_t n, int64_t k, double lam, double lat_mean, double lat_cv,
                double inf_mean, double inf_cv, seeds):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] sv = np.asarray(seeds, dtype=np.uint64)
    cdef Py_ssize_t reps = sv.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(reps, dtype=np.int64)
    cdef _Workspace ws = _Workspace(n)
    cdef Py_ssize_t r
    cdef uint64_t* sp = <uint64_t*>sv.data
    cdef int64_t* op = <int64_t*>out.data
    with nogil:
        for r in range(reps):
            op[r] = _run(n, k, lam, lat_mean, lat_cv, inf_mean, inf_cv, sp[r],
                         NULL, NULL, NULL, ws.state, ws.removal, ws.heap)
    return out


# --------------------------------------------------------------------------
# branching approximation

cdef bint _branch(int64_t k, double lam, double inf_mean, double inf_cv,
                  int64_t cap, uint64_t seed, int64_t* total_out) noexcept nogil:
    cdef Rng r
    cdef double cv2 = inf_cv * inf_cv
    cdef int64_t total = k
    cdef int64_t gen = k
    cdef int64_t births
    cdef double t_inf
    rng_seed(&r, seed)
    while True:
        if total >= cap:
            total_out[0] = total
            return True
        if gen == 0:
            total_out[0] = total
            return False
        if cv2 < CV2_POINT:
            t_inf = gen * inf_mean
        else:
            t_inf = standard_gamma(&r, gen / cv2) * (inf_mean * cv2)
        births = poisson(&r, lam * t_inf)
        total += births
        gen = births


def branching(int64_t k, double lam, double inf_mean, double inf_cv,
              int64_t cap, uint64_t seed):
    cdef int64_t total
    cdef bint reached
    with nogil:
        reached = _branch(k, lam, inf_mean, inf_cv, cap, seed, &total)
    return bool(reached), int(total)


def branching_batch(int64_t k, double lam, double inf_mean, double inf_cv,
                    int64_t cap, seeds):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] sv = np.asarray(seeds, dtype=np.uint64)
    cdef Py_ssize_t reps = sv.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] reached = np.empty(reps, dtype=np.uint8)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] totals = np.empty(reps, dtype=np.int64)
    cdef uint64_t* sp = <uint64_t*>sv.data
    cdef uint8_t* rp = <uint8_t*>reached.data
    cdef int64_t* tp = <int64_t*>totals.data
    cdef Py_ssize_t i
    with nogil:
        for i in range(reps):
            rp[i] = _branch(k, lam, inf_mean, inf_cv, cap, sp[i], &tp[i])
    return reached.astype(bool), totals


# --------------------------------------------------------------------------
# special functions

DEF GAMMA_EPS = 1e-16
DEF GAMMA_ITMAX = 10000


cdef double _gamma_series(double a, double x, int* fail) noexcept nogil:
    cdef double ap = a
    cdef double term = 1.0 / a
    cdef double total = term
    cdef int i
    for i in range(GAMMA_ITMAX):
        ap += 1.0
        term *= x / ap
        total += term
        if fabs(term) < fabs(total) * GAMMA_EPS:
            return total * exp(-x + a * log(x) - lgamma(a))
    fail[0] = 1
    return 0.0


cdef double _gamma_cfrac(double a, double x, int* fail) noexcept nogil:
    cdef double tiny = 1e-300
    cdef double b = x + 1.0 - a
    cdef double c = 1.0 / tiny
    cdef double d = 1.0 / b
    cdef double h = d
    cdef double an, delta
    cdef int i
    for i in range(1, GAMMA_ITMAX):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if fabs(d) < tiny:
            d = tiny
        c = b + an / c
        if fabs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < GAMMA_EPS:
            return exp(-x + a * log(x) - lgamma(a)) * h
    fail[0] = 1
    return 0.0


cdef double c_gammainc_lower(double a, double x, int* fail) noexcept nogil:
    if x <= 0.0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x, fail)
    return 1.0 - _gamma_cfrac(a, x, fail)


cdef double c_gammainc_upper(double a, double x, int* fail) noexcept nogil:
    if x <= 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x, fail)
    return _gamma_cfrac(a, x, fail)


def gammainc_lower(double a, double x):
    cdef int fail = 0
    cdef double v = c_gammainc_lower(a, x, &fail)
    if fail:
        raise NumericalError(f"incomplete gamma did not converge (a={a}, x={x})")
    return v


def gammainc_upper(double a, double x):
    cdef int fail = 0
    cdef double v = c_gammainc_upper(a, x, &fail)
    if fail:
        raise NumericalError(f"incomplete gamma did not converge (a={a}, x={x})")
    return v


# --------------------------------------------------------------------------
# Euler-Lotka quadrature oracle

cdef struct Period:
    double mean
    double shape
    double rate
    double lgshape
    bint point


cdef struct Panels:
    double* lo
    double* hi
    double* val
    double* err


cdef struct Ctx:
    Period lat
    Period inf
    double alpha
    double lam
    double q_lat
    double t
    double top
    double scale
    double inner_eps
    int mode
    int fail
    Panels inner
    Panels outer


ctypedef double (*integrand_t)(double, Ctx*) noexcept nogil


cdef void period_init(Period* p, double mean, double cv) noexcept nogil:
    cdef double cv2 = cv * cv
    p.mean = mean
    p.point = mean == 0.0 or cv2 < CV2_POINT
    if not p.point:
        p.shape = 1.0 / cv2
        p.rate = 1.0 / (mean * cv2)
        p.lgshape = lgamma(p.shape)


cdef inline double period_cdf(Period* p, double x, int* fail) noexcept nogil:
    if p.point:
        return 1.0 if x >= p.mean else 0.0
    return c_gammainc_lower(p.shape, x * p.rate, fail)


cdef inline double period_sf(Period* p, double x, int* fail) noexcept nogil:
    if p.point:
        return 1.0 if x < p.mean else 0.0
    return c_gammainc_upper(p.shape, x * p.rate, fail)


cdef inline double period_pdf(Period* p, double x) noexcept nogil:
    cdef double y = x * p.rate
    if y <= 0.0:
        return p.rate if (p.shape == 1.0 and x >= 0.0) else 0.0
    return p.rate * exp((p.shape - 1.0) * log(y) - y - p.lgshape)


cdef double period_upper_quantile(Period* p, double tail, int* fail) noexcept nogil:
    cdef double lo, hi, mid
    cdef int it
    if p.point:
        return p.mean
    hi = p.mean if p.mean > 1e-300 else 1e-300
    while period_sf(p, hi, fail) > tail:
        hi *= 2.0
    lo = 0.0
    for it in range(200):
        mid = 0.5 * (lo + hi)
        if period_sf(p, mid, fail) > tail:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    return hi


cdef double[8] XGK = [0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                      0.207784955007898467600689403773245, 0.0]
cdef double[8] WGK = [0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                      0.204432940075298892414161999234649, 0.209482141084727828012999174891714]
cdef double[4] WG = [0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                     0.381830050505118944950369775488975, 0.417959183673469387755102040816327]


cdef inline double gk15(integrand_t f, double a, double b, Ctx* ctx, double* err) noexcept nogil:
    cdef double c = 0.5 * (a + b)
    cdef double h = 0.5 * (b - a)
    cdef double fc = f(c, ctx)
    cdef double kron = fc * WGK[7]
    cdef double gauss = fc * WG[3]
    cdef double dx, fsum
    cdef int j
    for j in range(7):
        dx = h * XGK[j]
        fsum = f(c - dx, ctx) + f(c + dx, ctx)
        kron += WGK[j] * fsum
        if j % 2 == 1:
            gauss += WG[j // 2] * fsum
    err[0] = fabs((kron - gauss) * h)
    return kron * h


cdef double adaptive(integrand_t f, double a, double b, double eps, Ctx* ctx,
                     Panels* ws) noexcept nogil:
    cdef int count = 1
    cdef int i, worst
    cdef double total, total_err, m, v1, v2, e1, e2, lo, hi, comp, y, tt
    ws.lo[0] = a
    ws.hi[0] = b
    ws.val[0] = gk15(f, a, b, ctx, &ws.err[0])
    total = ws.val[0]
    total_err = ws.err[0]
    while total_err > eps and total_err > 1e-14 * fabs(total):
        if count >= MAX_SUBDIV or ctx.fail:
            ctx.fail = 1
            return total
        worst = 0
        for i in range(1, count):
            if ws.err[i] > ws.err[worst]:
                worst = i
        lo = ws.lo[worst]
        hi = ws.hi[worst]
        m = 0.5 * (lo + hi)
        if not (lo < m < hi):
            ctx.fail = 1
            return total
        v1 = gk15(f, lo, m, ctx, &e1)
        v2 = gk15(f, m, hi, ctx, &e2)
        total += v1 + v2 - ws.val[worst]
        total_err += e1 + e2 - ws.err[worst]
        ws.hi[worst] = m
        ws.val[worst] = v1
        ws.err[worst] = e1
        ws.lo[count] = m
        ws.hi[count] = hi
        ws.val[count] = v2
        ws.err[count] = e2
        count += 1
    # compensated re-sum
    total = 0.0
    comp = 0.0
    for i in range(count):
        y = ws.val[i] - comp
        tt = total + y
        comp = (tt - total) - y
        total = tt
    return total


cdef double integrate(integrand_t f, double* edges, int nedges, double eps, int pieces,
                      Ctx* ctx, Panels* ws) noexcept nogil:
    cdef int nspan = 0
    cdef int e, p
    cdef double a, b, h, lo, hi, local, total = 0.0
    for e in range(nedges - 1):
        if edges[e + 1] > edges[e]:
            nspan += 1
    if nspan == 0:
        return 0.0
    local = eps / (nspan * pieces)
    for e in range(nedges - 1):
        a = edges[e]
        b = edges[e + 1]
        if b <= a:
            continue
        h = (b - a) / pieces
        for p in range(pieces):
            lo = a + p * h
            hi = b if p == pieces - 1 else lo + h
            total += adaptive(f, lo, hi, local, ctx, ws)
    return total


cdef double _inner_regular(double s, Ctx* ctx) noexcept nogil:
    return period_pdf(&ctx.lat, s) * period_sf(&ctx.inf, ctx.t - s, &ctx.fail)


cdef double _inner_singular(double w, Ctx* ctx) noexcept nogil:
    cdef double s = ctx.top * pow(w, 1.0 / ctx.lat.shape)
    return ctx.scale * exp(-s * ctx.lat.rate) * period_sf(&ctx.inf, ctx.t - s, &ctx.fail)


cdef double occupancy(double t, Ctx* ctx) noexcept nogil:
    cdef double x, top
    cdef double[2] edges
    if ctx.mode == 0:
        return 1.0 if (ctx.lat.mean < t < ctx.lat.mean + ctx.inf.mean) else 0.0
    if ctx.mode == 1:
        return period_sf(&ctx.inf, t - ctx.lat.mean, &ctx.fail) if t > ctx.lat.mean else 0.0
    if ctx.mode == 2:
        if t <= ctx.inf.mean:
            return period_cdf(&ctx.lat, t, &ctx.fail)
        x = t * ctx.lat.rate
        if x > ctx.lat.shape:
            return (c_gammainc_upper(ctx.lat.shape, (t - ctx.inf.mean) * ctx.lat.rate, &ctx.fail)
                    - c_gammainc_upper(ctx.lat.shape, x, &ctx.fail))
        return period_cdf(&ctx.lat, t, &ctx.fail) - period_cdf(&ctx.lat, t - ctx.inf.mean, &ctx.fail)
    top = t if t < ctx.q_lat else ctx.q_lat
    if top <= 0.0:
        return 0.0
    ctx.t = t
    ctx.top = top
    if ctx.lat.shape < 1.0:
        ctx.scale = exp(ctx.lat.shape * log(top * ctx.lat.rate) - ctx.lat.lgshape) / ctx.lat.shape
        edges[0] = 0.0
        edges[1] = 1.0
        return integrate(_inner_singular, edges, 2, ctx.inner_eps, 1, ctx, &ctx.inner)
    edges[0] = 0.0
    edges[1] = top
    return integrate(_inner_regular, edges, 2, ctx.inner_eps, 1, ctx, &ctx.inner)


cdef double _outer(double t, Ctx* ctx) noexcept nogil:
    return exp(-ctx.alpha * t) * ctx.lam * occupancy(t, ctx)


cdef int _alloc_panels(Panels* p) noexcept nogil:
    p.lo = <double*>malloc(MAX_SUBDIV * sizeof(double))
    p.hi = <double*>malloc(MAX_SUBDIV * sizeof(double))
    p.val = <double*>malloc(MAX_SUBDIV * sizeof(double))
    p.err = <double*>malloc(MAX_SUBDIV * sizeof(double))
    return p.lo != NULL and p.hi != NULL and p.val != NULL and p.err != NULL


cdef void _free_panels(Panels* p) noexcept nogil:
    free(p.lo)
    free(p.hi)
    free(p.val)
    free(p.err)


def euler_lotka_integral(double alpha, double lam, double lat_mean, double lat_cv,
                         double inf_mean, double inf_cv, double tol=1e-10):
    """Integral of exp(-alpha t) * lam * P(L < t < L + I) over t >= 0.

    Computed by nested adaptive Gauss-Kronrod on the convolution
    ``int_0^t f_L(s) (1 - F_I(t - s)) ds``; no transform identities are used.
    """
    cdef Ctx ctx
    cdef double t_max, qa, qb, value
    cdef double[5] edges
    cdef double[3] cand
    cdef int nedges, i, j
    cdef double tmp
    ctx.fail = 0
    ctx.alpha = alpha
    ctx.lam = lam
    ctx.inner_eps = tol * 1e-3
    period_init(&ctx.lat, lat_mean, lat_cv)
    period_init(&ctx.inf, inf_mean, inf_cv)
    if ctx.lat.point and ctx.inf.point:
        ctx.mode = 0
    elif ctx.lat.point:
        ctx.mode = 1
    elif ctx.inf.point:
        ctx.mode = 2
    else:
        ctx.mode = 3
    if not _alloc_panels(&ctx.inner) or not _alloc_panels(&ctx.outer):
        _free_panels(&ctx.inner)
        _free_panels(&ctx.outer)
        raise MemoryError()
    try:
        with nogil:
            ctx.q_lat = period_upper_quantile(&ctx.lat, 1e-12, &ctx.fail)
            qa = period_upper_quantile(&ctx.lat, 1e-15, &ctx.fail)
            qb = period_upper_quantile(&ctx.inf, 1e-15, &ctx.fail)
            t_max = 2.0 * (qa if qa > qb else qb)
            if alpha > 0.0 and lam > 1e-14:
                tmp = log(lam / 1e-14) / alpha
                if tmp < t_max:
                    t_max = tmp
            edges[0] = 0.0
            nedges = 1
            cand[0] = ctx.lat.mean
            cand[1] = ctx.inf.mean
            cand[2] = ctx.lat.mean + ctx.inf.mean
            # sorted, de-duplicated interior breakpoints
            for i in range(3):
                for j in range(i + 1, 3):
                    if cand[j] < cand[i]:
                        tmp = cand[i]
                        cand[i] = cand[j]
                        cand[j] = tmp
            for i in range(3):
                if 0.0 < cand[i] < t_max and cand[i] != edges[nedges - 1]:
                    edges[nedges] = cand[i]
                    nedges += 1
            edges[nedges] = t_max
            nedges += 1
            value = integrate(_outer, edges, nedges, tol, 16, &ctx, &ctx.outer)
    finally:
        _free_panels(&ctx.inner)
        _free_panels(&ctx.outer)
    if ctx.fail:
        raise NumericalError("Euler-Lotka quadrature failed to converge")
    return value
