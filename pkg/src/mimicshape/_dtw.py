"""Compiled dynamic time warping kernels.

All kernels take multivariate inputs shaped ``(V, n)`` and use the dependent
local cost ``sum_v (a[v, i] - b[v, j])**2``. A negative ``band`` means no
Sakoe-Chiba constraint. Costs are accumulated squared differences (no root).
"""

import math

import numba as nb
import numpy as np

_jit = dict(nogil=True, cache=True)


@nb.njit(**_jit)
def dtw(a, b, band, cutoff):
    """Accumulated DTW cost, or ``inf`` once every cell of a row exceeds ``cutoff``."""
    V = a.shape[0]
    n = a.shape[1]
    m = b.shape[1]
    r = band if band >= 0 else max(n, m)
    inf = np.inf
    prev = np.full(m + 1, inf)
    cur = np.full(m + 1, inf)
    # column j of the cost matrix lives at index j + 1; index 0 is a permanent inf
    for i in range(n):
        lo = max(0, i - r)
        hi = min(m - 1, i + r)
        cur[lo] = inf
        if hi + 2 <= m:
            cur[hi + 2] = inf
        row_min = inf
        left = inf
        for j in range(lo, hi + 1):
            c = 0.0
            for v in range(V):
                d = a[v, i] - b[v, j]
                c += d * d
            if i == 0 and j == 0:
                best = 0.0
            else:
                best = prev[j + 1]
                if prev[j] < best:
                    best = prev[j]
                if left < best:
                    best = left
            left = c + best
            cur[j + 1] = left
            if left < row_min:
                row_min = left
        if row_min > cutoff:
            return inf
        tmp = prev
        prev = cur
        cur = tmp
    return prev[m]


@nb.njit(**_jit)
def envelopes(refs, band):
    """Running max/min of each reference over ``[t - band, t + band]``."""
    n, V, T = refs.shape
    upper = np.empty_like(refs)
    lower = np.empty_like(refs)
    for k in range(n):
        for v in range(V):
            for t in range(T):
                lo = max(0, t - band)
                hi = min(T, t + band + 1)
                mx = refs[k, v, lo]
                mn = mx
                for u in range(lo + 1, hi):
                    x = refs[k, v, u]
                    if x > mx:
                        mx = x
                    if x < mn:
                        mn = x
                upper[k, v, t] = mx
                lower[k, v, t] = mn
    return upper, lower


@nb.njit(**_jit)
def lb_keogh(q, upper, lower, cutoff):
    V, T = q.shape
    total = 0.0
    for t in range(T):
        for v in range(V):
            x = q[v, t]
            if x > upper[v, t]:
                d = x - upper[v, t]
                total += d * d
            elif x < lower[v, t]:
                d = lower[v, t] - x
                total += d * d
        if total > cutoff:
            return total
    return total


@nb.njit(**_jit)
def class_min_dtw(queries, refs, ref_class, n_classes, band, upper, lower):
    """Per query, the smallest DTW cost to any reference of each class.

    ``queries``: (B, V, T); ``refs``: (n, V, T); ``ref_class``: (n,) ints.
    With a band, ``upper``/``lower`` are the reference envelopes: references are
    visited in increasing LB_Keogh order and skipped once the bound reaches the
    running class minimum. Early abandoning does the rest. Both only discard
    candidates that cannot win, so results are exact.
    """
    B = queries.shape[0]
    n = refs.shape[0]
    out = np.full((B, n_classes), np.inf)
    lb = np.zeros(n)
    for q in range(B):
        if band >= 0:
            for k in range(n):
                lb[k] = lb_keogh(queries[q], upper[k], lower[k], np.inf)
            order = np.argsort(lb, kind="mergesort")
        else:
            order = np.arange(n)
        for k in order:
            c = ref_class[k]
            best = out[q, c]
            if band >= 0 and lb[k] >= best:
                continue
            d = dtw(queries[q], refs[k], band, best)
            if d < best:
                out[q, c] = d
    return out


@nb.njit(**_jit)
def pairwise_dtw(series, band):
    """Symmetric matrix of DTW costs between all ``(n, V, T)`` series."""
    n = series.shape[0]
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = dtw(series[i], series[j], band, np.inf)
            D[i, j] = d
            D[j, i] = d
    return D


@nb.njit(**_jit)
def pairwise_dtw_ragged(flat, offsets, band):
    """DTW between univariate segments packed as ``flat[offsets[i]:offsets[i+1]]``.

    The band is widened to the length difference of each pair when needed.
    """
    n = offsets.shape[0] - 1
    D = np.zeros((n, n))
    for i in range(n):
        a = flat[offsets[i]:offsets[i + 1]].reshape(1, -1)
        for j in range(i + 1, n):
            b = flat[offsets[j]:offsets[j + 1]].reshape(1, -1)
            r = band
            if r >= 0:
                r = max(r, abs(a.shape[1] - b.shape[1]))
            d = dtw(a, b, r, np.inf)
            D[i, j] = d
            D[j, i] = d
    return D


@nb.njit(**_jit)
def sliding_min_dtw(shape, row, lo, hi, band):
    """Min over windows of ``row`` (lengths ``lo..hi``) of DTW(shape, window) / (len + window len)."""
    L = shape.shape[0]
    T = row.shape[0]
    s = shape.reshape(1, -1)
    best = np.inf
    for wl in range(lo, hi + 1):
        if wl > T:
            break
        denom = L + wl
        r = band
        if r >= 0:
            r = max(r, abs(L - wl))
        for start in range(T - wl + 1):
            w = row[start:start + wl].reshape(1, -1)
            cutoff = best * denom if best < np.inf else np.inf
            d = dtw(s, w, r, cutoff)
            if d < np.inf:
                val = d / denom
                if val < best:
                    best = val
    return best


def window_range(L: int, T: int) -> tuple[int, int]:
    lo = max(1, math.ceil(0.8 * L - 1e-9))
    hi = max(lo, math.floor(1.2 * L + 1e-9))
    return min(lo, T), min(hi, T)
