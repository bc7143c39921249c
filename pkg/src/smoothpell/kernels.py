"""Hot scan kernels: smoothness masks over machine-integer ranges.

These back the brute-force verification oracle and the consecutive-run
scans, the only parts of the pipeline where a tight numeric loop dominates.
The numba path is used when importable; set SMOOTHPELL_NO_NUMBA=1 to force
the pure-numpy fallback.  Results of the two paths are identical (tested).

Everything involving actual big integers (Pell towers, regulators, compact
representations) lives elsewhere in plain Python: those values overflow any
machine word by design, so there is nothing numba could compile.
"""
from __future__ import annotations

import os

import numpy as np

# x*x - 1 must fit in int64
INT64_X_LIMIT = 3_037_000_499

_FORCE_NO_NUMBA = os.environ.get("SMOOTHPELL_NO_NUMBA", "") not in ("", "0")

if not _FORCE_NO_NUMBA:
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - environment without numba
        _HAVE_NUMBA = False
else:
    _HAVE_NUMBA = False


def active_backend() -> str:
    return "numba" if _HAVE_NUMBA else "numpy"


if _HAVE_NUMBA:

    @njit(cache=True)
    def _divide_out_x2m1(limit, primes):  # pragma: no cover - compiled
        out = np.zeros(limit + 1, dtype=np.bool_)
        for x in range(2, limit + 1):
            n = x * x - 1
            for i in range(primes.size):
                p = primes[i]
                while n % p == 0:
                    n //= p
                if n == 1:
                    break
            out[x] = n == 1
        return out

    @njit(cache=True)
    def _divide_out_range(limit, primes):  # pragma: no cover - compiled
        out = np.zeros(limit + 1, dtype=np.bool_)
        out[1] = True
        for m in range(2, limit + 1):
            n = m
            for i in range(primes.size):
                p = primes[i]
                while n % p == 0:
                    n //= p
                if n == 1:
                    break
            out[m] = n == 1
        return out


def _divide_out_x2m1_np(limit: int, primes: np.ndarray) -> np.ndarray:
    x = np.arange(limit + 1, dtype=np.int64)
    n = x * x - 1
    n[:2] = 1  # x = 0, 1 are not scanned; keep the loop total
    for p in primes:
        p = int(p)
        idx = np.nonzero(n % p == 0)[0]
        while idx.size:
            n[idx] //= p
            idx = idx[n[idx] % p == 0]
    out = n == 1
    out[:2] = False
    return out


def _divide_out_range_np(limit: int, primes: np.ndarray) -> np.ndarray:
    n = np.arange(limit + 1, dtype=np.int64)
    n[0] = 1  # placeholder; masked out below (0 is not smooth here)
    for p in primes:
        p = int(p)
        idx = np.nonzero(n % p == 0)[0]
        while idx.size:
            n[idx] //= p
            idx = idx[n[idx] % p == 0]
    out = n == 1
    out[0] = False
    return out


def smooth_x2m1_mask(limit: int, primes) -> np.ndarray:
    """Boolean mask over 0..limit: True at x iff x >= 2 and x^2 - 1 factors
    completely over `primes`.  Requires limit <= INT64_X_LIMIT."""
    if limit < 2:
        return np.zeros(max(limit + 1, 0), dtype=np.bool_)
    if limit > INT64_X_LIMIT:
        raise OverflowError(f"limit {limit} exceeds the int64 kernel range")
    parr = np.asarray(list(primes), dtype=np.int64)
    if _HAVE_NUMBA:
        return _divide_out_x2m1(limit, parr)
    return _divide_out_x2m1_np(limit, parr)


def smooth_range_mask(limit: int, primes) -> np.ndarray:
    """Boolean mask over 0..limit: True at m iff m >= 1 is smooth over
    `primes` (m = 1 counts as smooth)."""
    if limit < 1:
        return np.zeros(max(limit + 1, 0), dtype=np.bool_)
    parr = np.asarray(list(primes), dtype=np.int64)
    if _HAVE_NUMBA:
        return _divide_out_range(limit, parr)
    return _divide_out_range_np(limit, parr)
