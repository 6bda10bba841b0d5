"""Pure-Python fallback for the compiled simulation loops.

Draw-for-draw identical to ``_ckernels.pyx``; roughly two orders of magnitude
slower.
"""

import math

import numpy as np

from .rng import CounterStream


def _index(st, n):
    j = int(st.next_double() * n)
    return n - 1 if j >= n else j


def _geometric(st, log_fail):
    return 1 + int(math.floor(math.log(1.0 - st.next_double()) / log_fail))


def clumsy_batch(n, q, seed, start, count, budget):
    out = np.empty(count, dtype=np.int64)
    for i in range(count):
        st = CounterStream(seed, start + i)
        present = [0] * n
        absent = n
        t = 0
        out[i] = -1
        while t < budget:
            t += 1
            j = _index(st, n)
            new = 1 if st.next_double() < q else 0
            if new != present[j]:
                present[j] = new
                absent += -1 if new else 1
            if absent == 0:
                out[i] = t
                break
    return out


def careless_batch(n, q, seed, start, count, budget):
    out = np.empty(count, dtype=np.int64)
    for i in range(count):
        st = CounterStream(seed, start + i)
        held = [0] * n
        held_count = 0
        t = 0
        out[i] = -1
        while t < budget:
            t += 1
            j = _index(st, n)
            if not held[j]:
                held[j] = 1
                held_count += 1
            for k in range(n):
                if held[k] and st.next_double() >= q:
                    held[k] = 0
                    held_count -= 1
            if held_count == n:
                out[i] = t
                break
    return out


def combined_batch(n, refresh, survival, seed, start, count, budget):
    out = np.empty(count, dtype=np.int64)
    for i in range(count):
        st = CounterStream(seed, start + i)
        held = [0] * n
        held_count = 0
        t = 0
        out[i] = -1
        while t < budget:
            t += 1
            j = _index(st, n)
            new = 1 if st.next_double() < refresh else 0
            if new != held[j]:
                held[j] = new
                held_count += 1 if new else -1
            for k in range(n):
                if held[k] and st.next_double() >= survival:
                    held[k] = 0
                    held_count -= 1
            if held_count == n:
                out[i] = t
                break
    return out


def reset_direct_batch(n, rho, cum_weights, seed, start, count, budget):
    out = np.empty(count, dtype=np.int64)
    equal = cum_weights is None
    cum = None if equal else [float(c) for c in cum_weights]
    q = 1.0 - rho
    for i in range(count):
        st = CounterStream(seed, start + i)
        held = [0] * n
        held_count = 0
        t = 0
        out[i] = -1
        while t < budget:
            t += 1
            u = st.next_double()
            if u < rho:
                if held_count:
                    held = [0] * n
                    held_count = 0
                continue
            w = (u - rho) / q
            if equal:
                j = int(w * n)
            else:
                lo, hi = 0, n - 1
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
                    out[i] = t
                    break
    return out


def reset_regen_batch(n, rho, s, seed, start, count, budget):
    out = np.empty(count, dtype=np.int64)
    q = 1.0 - rho
    log_q = math.log(q)
    log_fail_g = math.log1p(-s) if s < 1.0 else 0.0
    for i in range(count):
        st = CounterStream(seed, start + i)
        out[i] = -1
        if s >= 1.0:
            g = 1
        else:
            g_real = math.floor(math.log(1.0 - st.next_double()) / log_fail_g)
            if g_real >= budget:
                continue
            g = 1 + int(g_real)
        total = 0
        for _ in range(g - 1):
            failed = False
            while not failed:
                kk = int(math.floor(math.log(1.0 - st.next_double()) / log_q))
                c = 0
                for stage in range(n, 0, -1):
                    if stage == n:
                        c += 1
                    else:
                        c += _geometric(st, math.log1p(-stage / n))
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
            if stage == n:
                c += 1
            else:
                c += _geometric(st, math.log((1.0 - stage / n) * q))
        total += c
        if total <= budget:
            out[i] = total
    return out
