"""Hot loops of the sparse simulator.

Each kernel has a numba version and a pure-numpy version with the same
signature.  Setting ``SHORLAB_DISABLE_NUMBA=1`` (or running without numba
installed) selects the numpy path.  Both paths are exercised by the tests
and compared in ``benchmarks/bench_kernels.py``.
"""
from __future__ import annotations

import os

import numpy as np

PRUNE = 1e-14

try:  # pragma: no cover - exercised implicitly
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and os.environ.get("SHORLAB_DISABLE_NUMBA", "") in ("", "0")


# ---------------------------------------------------------------- numpy ----

def merge_np(keys, amps, threshold=PRUNE):
    """Sort keys, sum amplitudes of equal keys, drop tiny amplitudes."""
    if keys.size == 0:
        return keys, amps
    order = np.argsort(keys, kind="stable")
    k = keys[order]
    a = amps[order]
    starts = np.flatnonzero(np.concatenate(([True], k[1:] != k[:-1])))
    k = k[starts]
    a = np.add.reduceat(a, starts)
    keep = np.abs(a) >= threshold
    return k[keep], a[keep]


def expand_dit_np(keys, amps, stride, radix, U):
    """Apply a radix x radix matrix to the dit at ``stride``; unmerged output."""
    d = (keys // stride) % radix
    base = keys - d * stride
    j = np.arange(radix, dtype=np.int64)
    out_keys = (base[:, None] + j[None, :] * stride).reshape(-1)
    out_amps = (U[:, d].T * amps[:, None]).reshape(-1)
    return out_keys, out_amps


def lookup_np(table_in, table_out, keys):
    """Map keys through a sorted lookup table; -1 marks misses."""
    if table_in.size == 0:
        return np.full(keys.shape, -1, dtype=np.int64)
    idx = np.searchsorted(table_in, keys)
    idx_c = np.minimum(idx, table_in.size - 1)
    hit = table_in[idx_c] == keys
    return np.where(hit, table_out[idx_c], -1)


def has_adjacent_duplicates_np(sorted_keys):
    return bool(sorted_keys.size > 1 and np.any(sorted_keys[1:] == sorted_keys[:-1]))


# ---------------------------------------------------------------- numba ----

if numba is not None:

    @numba.njit(cache=True)
    def _merge_sorted_nb(k, a, threshold):
        n = k.size
        out_k = np.empty(n, dtype=np.int64)
        out_a = np.empty(n, dtype=np.complex128)
        m = 0
        i = 0
        while i < n:
            key = k[i]
            acc = a[i]
            i += 1
            while i < n and k[i] == key:
                acc += a[i]
                i += 1
            if abs(acc) >= threshold:
                out_k[m] = key
                out_a[m] = acc
                m += 1
        return out_k[:m], out_a[:m]

    @numba.njit(cache=True)
    def _expand_dit_nb(keys, amps, stride, radix, U):
        n = keys.size
        out_k = np.empty(n * radix, dtype=np.int64)
        out_a = np.empty(n * radix, dtype=np.complex128)
        for i in range(n):
            d = (keys[i] // stride) % radix
            base = keys[i] - d * stride
            for j in range(radix):
                out_k[i * radix + j] = base + j * stride
                out_a[i * radix + j] = U[j, d] * amps[i]
        return out_k, out_a

    @numba.njit(cache=True)
    def _lookup_nb(table_in, table_out, keys):
        out = np.empty(keys.size, dtype=np.int64)
        m = table_in.size
        for i in range(keys.size):
            lo, hi = 0, m
            while lo < hi:
                mid = (lo + hi) >> 1
                if table_in[mid] < keys[i]:
                    lo = mid + 1
                else:
                    hi = mid
            if lo < m and table_in[lo] == keys[i]:
                out[i] = table_out[lo]
            else:
                out[i] = -1
        return out

    @numba.njit(cache=True)
    def _has_adjacent_duplicates_nb(k):
        for i in range(1, k.size):
            if k[i] == k[i - 1]:
                return True
        return False

    def merge_nb(keys, amps, threshold=PRUNE):
        if keys.size == 0:
            return keys, amps
        order = np.argsort(keys, kind="stable")
        return _merge_sorted_nb(keys[order], amps[order], threshold)

    def expand_dit_nb(keys, amps, stride, radix, U):
        return _expand_dit_nb(keys, amps, np.int64(stride), np.int64(radix),
                              np.ascontiguousarray(U, dtype=np.complex128))

    def lookup_nb(table_in, table_out, keys):
        return _lookup_nb(table_in, table_out, keys)

    def has_adjacent_duplicates_nb(sorted_keys):
        return bool(_has_adjacent_duplicates_nb(sorted_keys))

else:  # pragma: no cover
    merge_nb = merge_np
    expand_dit_nb = expand_dit_np
    lookup_nb = lookup_np
    has_adjacent_duplicates_nb = has_adjacent_duplicates_np


BACKENDS = {
    "numpy": (merge_np, expand_dit_np, lookup_np, has_adjacent_duplicates_np),
    "numba": (merge_nb, expand_dit_nb, lookup_nb, has_adjacent_duplicates_nb),
}

merge, expand_dit, lookup, has_adjacent_duplicates = BACKENDS["numba" if USE_NUMBA else "numpy"]


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
