"""Compiled inner loops for candidate scans over (a, q).

Each kernel writes one result per q into caller-owned arrays, so the
reduction over q is a plain integer sum and independent of scheduling.
"""

from __future__ import annotations

import os

# Allow thread counts above the core count (determinism tests ask for 4/8
# workers even on small machines).  Must happen before numba is imported.
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(8, os.cpu_count() or 1)))
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

import numba  # noqa: E402
import numpy as np  # noqa: E402
from numba import njit, prange  # noqa: E402

MAX_THREADS = numba.config.NUMBA_NUM_THREADS


def set_threads(n: int) -> int:
    n = max(1, min(int(n), MAX_THREADS))
    numba.set_num_threads(n)
    return n


@njit(cache=True, inline="always")
def _f_float(kind, params, x):
    if kind == 0:
        acc = 0.0
        for k in range(params.shape[0] - 1, -1, -1):
            acc = acc * x + params[k]
        return acc
    elif kind == 1:
        return np.sqrt(1.0 - x * x)
    elif kind == 2:
        return np.exp(x)
    else:
        return np.log(x)


@njit(cache=True)
def _classify(y, t, guard_rel):
    """0 reject, 1 accept, 2 ambiguous (inside the guard band)."""
    d = abs(y - np.rint(y))
    g = guard_rel * max(1.0, abs(y))
    if abs(d - t) < g:
        return 2
    return 1 if d < t else 0


@njit(parallel=True, cache=True)
def scan_float(kind, params, qs, a_lo, a_hi, thr, guard_rel, counts, amb):
    for i in prange(qs.shape[0]):
        q = qs[i]
        fq = float(q)
        c = 0
        m = 0
        for a in range(a_lo[i], a_hi[i] + 1):
            y = fq * _f_float(kind, params, a / fq)
            r = _classify(y, thr[i], guard_rel)
            if r == 1:
                c += 1
            elif r == 2:
                m += 1
        counts[i] = c
        amb[i] = m


@njit(cache=True)
def float_candidates(kind, params, q, a_lo, a_hi, t, guard_rel, want):
    """a-values in one q whose classification equals ``want`` (1 or 2)."""
    out = np.empty(a_hi - a_lo + 1, dtype=np.int64)
    n = 0
    fq = float(q)
    for a in range(a_lo, a_hi + 1):
        y = fq * _f_float(kind, params, a / fq)
        if _classify(y, t, guard_rel) == want:
            out[n] = a
            n += 1
    return out[:n]


@njit(cache=True, inline="always")
def _init_table(a0, mod, terms_i, vals):
    """Forward-difference table of N(a) mod M at a0, where
    N(a) = sum_k terms_i[k] * a**k (terms already reduced mod M)."""
    deg = terms_i.shape[0] - 1
    am0 = a0 % mod
    for j in range(deg + 1):
        am = (am0 + j) % mod
        acc = terms_i[deg]
        for k in range(deg - 1, -1, -1):
            acc = (acc * am + terms_i[k]) % mod
        vals[j] = acc
    for k in range(1, deg + 1):
        for j in range(deg, k - 1, -1):
            v = vals[j] - vals[j - 1]
            if v < 0:
                v += mod
            vals[j] = v


@njit(parallel=True, cache=True)
def scan_int(qs, a_lo, a_hi, mods, terms, thr, counts):
    """Exact scan for polynomial curves.

    ``q*f(a/q) = N(a)/M`` with integer N; with r = N mod M the distance to
    the nearest integer is min(r, M-r)/M, and acceptance is min(r, M-r) < thr.
    N(a) mod M advances by a difference table, so the loop has no division.
    """
    deg = terms.shape[1] - 1
    for i in prange(qs.shape[0]):
        mod = mods[i]
        t = thr[i]
        vals = np.empty(deg + 1, dtype=np.int64)
        _init_table(a_lo[i], mod, terms[i], vals)
        c = 0
        for a in range(a_lo[i], a_hi[i] + 1):
            r = vals[0]
            m = mod - r
            if r < m:
                m = r
            if m < t:
                c += 1
            for k in range(deg):
                v = vals[k] + vals[k + 1]
                if v >= mod:
                    v -= mod
                vals[k] = v
        counts[i] = c


@njit(cache=True)
def int_accepted(a_lo, a_hi, mod, terms_i, t):
    """Accepted a-values and their residues r = N(a) mod M for one q."""
    deg = terms_i.shape[0] - 1
    vals = np.empty(deg + 1, dtype=np.int64)
    _init_table(a_lo, mod, terms_i, vals)
    out_a = np.empty(max(a_hi - a_lo + 1, 0), dtype=np.int64)
    out_r = np.empty(max(a_hi - a_lo + 1, 0), dtype=np.int64)
    n = 0
    for a in range(a_lo, a_hi + 1):
        r = vals[0]
        m = min(r, mod - r)
        if m < t:
            out_a[n] = a
            out_r[n] = r
            n += 1
        for k in range(deg):
            v = vals[k] + vals[k + 1]
            if v >= mod:
                v -= mod
            vals[k] = v
    return out_a[:n], out_r[:n]
