# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation loops.

Each ``*_batch`` function simulates ``count`` independent hitting times for
sample indices ``start .. start+count-1`` and returns them as int64, with -1
marking a run that exceeded ``budget`` steps. The random stream of sample ``i``
depends only on ``(seed, i)``; ``_pykernels`` mirrors every draw.
"""

import numpy as np

from libc.math cimport floor, log, log1p
from libc.stdint cimport int64_t, uint8_t, uint64_t
from libc.string cimport memset

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL
cdef uint64_t INDEX_SALT = 0xD1B54A32D192ED03ULL
cdef double DOUBLE_UNIT = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef struct Stream:
    uint64_t key
    uint64_t counter


cdef inline void stream_init(Stream* s, uint64_t seed, uint64_t index) noexcept nogil:
    s.key = mix64(mix64(seed) ^ (index * INDEX_SALT))
    s.counter = 0


cdef inline double next_double(Stream* s) noexcept nogil:
    s.counter += 1
    return <double>(mix64(s.key + s.counter * GAMMA) >> 11) * DOUBLE_UNIT


cdef inline int64_t draw_index(Stream* s, int64_t n) noexcept nogil:
    cdef int64_t j = <int64_t>(next_double(s) * n)
    if j >= n:
        j = n - 1
    return j


cdef inline int64_t draw_geometric(Stream* s, double log_fail) noexcept nogil:
    # support {1, 2, ...}; log_fail = log(1 - success probability)
    return 1 + <int64_t>floor(log(1.0 - next_double(s)) / log_fail)


def clumsy_batch(int64_t n, double q, uint64_t seed, int64_t start,
                 int64_t count, int64_t budget):
    out = np.empty(count, dtype=np.int64)
    present_buf = np.zeros(n, dtype=np.uint8)
    cdef int64_t[::1] res = out
    cdef uint8_t[::1] present = present_buf
    cdef Stream st
    cdef int64_t i, t, j, absent
    cdef uint8_t new
    with nogil:
        for i in range(count):
            stream_init(&st, seed, <uint64_t>(start + i))
            memset(&present[0], 0, n)
            absent = n
            t = 0
            res[i] = -1
            while t < budget:
                t += 1
                j = draw_index(&st, n)
                new = 1 if next_double(&st) < q else 0
                if new != present[j]:
                    present[j] = new
                    if new:
                        absent -= 1
                    else:
                        absent += 1
                if absent == 0:
                    res[i] = t
                    break
    return out


def careless_batch(int64_t n, double q, uint64_t seed, int64_t start,
                   int64_t count, int64_t budget):
    out = np.empty(count, dtype=np.int64)
    held_buf = np.zeros(n, dtype=np.uint8)
    cdef int64_t[::1] res = out
    cdef uint8_t[::1] held = held_buf
    cdef Stream st
    cdef int64_t i, t, j, k, held_count
    with nogil:
        for i in range(count):
            stream_init(&st, seed, <uint64_t>(start + i))
            memset(&held[0], 0, n)
            held_count = 0
            t = 0
            res[i] = -1
            while t < budget:
                t += 1
                j = draw_index(&st, n)
                if not held[j]:
                    held[j] = 1
                    held_count += 1
                for k in range(n):
                    if held[k] and next_double(&st) >= q:
                        held[k] = 0
                        held_count -= 1
                if held_count == n:
                    res[i] = t
                    break
    return out


def combined_batch(int64_t n, double refresh, double survival, uint64_t seed,
                   int64_t start, int64_t count, int64_t budget):
    out = np.empty(count, dtype=np.int64)
    held_buf = np.zeros(n, dtype=np.uint8)
    cdef int64_t[::1] res = out
    cdef uint8_t[::1] held = held_buf
    cdef Stream st
    cdef int64_t i, t, j, k, held_count
    cdef uint8_t new
    with nogil:
        for i in range(count):
            stream_init(&st, seed, <uint64_t>(start + i))
            memset(&held[0], 0, n)
            held_count = 0
            t = 0
            res[i] = -1
            while t < budget:
                t += 1
                j = draw_index(&st, n)
                new = 1 if next_double(&st) < refresh else 0
                if new != held[j]:
                    held[j] = new
                    if new:
                        held_count += 1
                    else:
                        held_count -= 1
                for k in range(n):
                    if held[k] and next_double(&st) >= survival:
                        held[k] = 0
                        held_count -= 1
                if held_count == n:
                    res[i] = t
                    break
    return out


def reset_direct_batch(int64_t n, double rho, cum_weights, uint64_t seed,
                       int64_t start, int64_t count, int64_t budget):
    """Direct reset-button dynamics.

    ``cum_weights`` holds cumulative conditional probabilities of the standard
    coupons, or None for equal weights.
    """
    out = np.empty(count, dtype=np.int64)
    held_buf = np.zeros(n, dtype=np.uint8)
    cdef int64_t[::1] res = out
    cdef uint8_t[::1] held = held_buf
    cdef double[::1] cum
    cdef bint equal = cum_weights is None
    if not equal:
        cum = np.ascontiguousarray(cum_weights, dtype=np.float64)
    cdef double q = 1.0 - rho
    cdef Stream st
    cdef int64_t i, t, j, lo, hi, mid, held_count
    cdef double u, w
    with nogil:
        for i in range(count):
            stream_init(&st, seed, <uint64_t>(start + i))
            memset(&held[0], 0, n)
            held_count = 0
            t = 0
            res[i] = -1
            while t < budget:
                t += 1
                u = next_double(&st)
                if u < rho:
                    if held_count:
                        memset(&held[0], 0, n)
                        held_count = 0
                    continue
                w = (u - rho) / q
                if equal:
                    j = <int64_t>(w * n)
                else:
                    lo = 0
                    hi = n - 1
                    while lo < hi:
                        mid = (lo + hi) // 2
                        if w < cum[mid]:
                            hi = mid
                        else:
                            lo = mid + 1
                    j = lo
                if j >= n:
                    j = n - 1
                if not held[j]:
                    held[j] = 1
                    held_count += 1
                    if held_count == n:
                        res[i] = t
                        break
    return out


def reset_regen_batch(int64_t n, double rho, double s, uint64_t seed,
                      int64_t start, int64_t count, int64_t budget):
    """Regenerative sampler for equal weights.

    T = sum of G-1 failed excursion lengths (K+1 given C > K) plus the final
    ordinary completion time (C given C <= K), with G geometric(s).
    """
    out = np.empty(count, dtype=np.int64)
    cdef int64_t[::1] res = out
    cdef double q = 1.0 - rho
    cdef double log_q = log(q)
    cdef double log_fail_g = log1p(-s)
    cdef Stream st
    cdef int64_t i, r, g, kk, c, stage, total
    cdef double g_real
    cdef bint failed
    with nogil:
        for i in range(count):
            stream_init(&st, seed, <uint64_t>(start + i))
            res[i] = -1
            if s >= 1.0:
                g = 1
            else:
                g_real = floor(log(1.0 - next_double(&st)) / log_fail_g)
                if g_real >= budget:
                    continue
                g = 1 + <int64_t>g_real
            total = 0
            for r in range(g - 1):
                failed = False
                while not failed:
                    kk = <int64_t>floor(log(1.0 - next_double(&st)) / log_q)
                    c = 0
                    for stage in range(n, 0, -1):
                        if stage == n:
                            c += 1
                        else:
                            c += draw_geometric(&st, log1p(-(<double>stage) / n))
                        if c > kk:
                            failed = True
                            break
                total += kk + 1
                if total > budget:
                    break
            if total > budget:
                continue
            c = 0
            for stage in range(n, 0, -1):
                # success probability 1 - (1 - stage/n) q after tilting by q^C
                if stage == n:
                    c += 1
                else:
                    c += draw_geometric(&st, log((1.0 - (<double>stage) / n) * q))
            total += c
            if total <= budget:
                res[i] = total
    return out
