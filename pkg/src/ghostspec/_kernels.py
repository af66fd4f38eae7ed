"""Hot numeric kernels, numba-compiled with a pure-numpy fallback.

Backend selection: the numba path is used whenever numba imports cleanly;
set ``GHOSTSPEC_NO_NUMBA=1`` (before import) to force the numpy path.
Both backends implement identical summation orders, so they agree to
floating-point noise; ``benchmarks/bench_kernels.py`` times them against
each other.
"""

import math
import os

import numpy as np
from scipy.special import gammaln

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("GHOSTSPEC_NO_NUMBA", "") != "1"

# Stop the virtual-mode series once the bounded remainder drops below this
# fraction of the accumulated mass.
CELL_TAIL_CUTOFF = 1e-15

_MAX_SERIES_TERMS = 200_000


def cell_series(n1, n2, t, n_th):
    """Joint probability of (n1, n2) for one split thermal mode behind a
    filter of transmittivity ``t``, with the virtual loss mode summed out.

    The series over the loss-mode count n0 starts from a log-space binomial
    evaluation (overflow-safe for large counts) and advances by the exact
    term ratio c*(m+1)/(n0+1) with c = q*(1-t)/2, q = n_th/(1+n_th).  The
    ratio decreases monotonically, so once it falls below 1 the remaining
    tail is bounded by a geometric series.
    """
    if n_th == 0.0:
        return 1.0 if (n1 == 0 and n2 == 0) else 0.0
    if t == 0.0 and n1 > 0:
        return 0.0
    q = n_th / (1.0 + n_th)
    half_q = 0.5 * q
    c = half_q * (1.0 - t)
    log_t0 = (
        math.lgamma(n1 + n2 + 1.0)
        - math.lgamma(n1 + 1.0)
        - math.lgamma(n2 + 1.0)
        - math.log(1.0 + n_th)
        + (n1 + n2) * math.log(half_q)
    )
    if n1 > 0:
        log_t0 += n1 * math.log(t)
    term = math.exp(log_t0)
    acc = term
    if c == 0.0 or term == 0.0:
        return acc
    n0 = 0
    while n0 < _MAX_SERIES_TERMS:
        r = c * (n1 + n2 + n0 + 1.0) / (n0 + 1.0)
        if r < 1.0 and term * r <= CELL_TAIL_CUTOFF * (1.0 - r) * acc:
            break
        term *= r
        n0 += 1
        acc += term
        if term == 0.0:
            break
    return acc


def _table_python(t, n_th, n1_max, n2_max):
    out = np.empty((n1_max + 1, n2_max + 1))
    for i in range(n1_max + 1):
        for j in range(n2_max + 1):
            out[i, j] = cell_series(i, j, t, n_th)
    return out


def _table_numpy(t, n_th, n1_max, n2_max):
    """Vectorized fallback: advance the n0 series on the whole grid at once."""
    if n_th == 0.0:
        out = np.zeros((n1_max + 1, n2_max + 1))
        out[0, 0] = 1.0
        return out
    n1 = np.arange(n1_max + 1, dtype=np.float64)[:, None]
    n2 = np.arange(n2_max + 1, dtype=np.float64)[None, :]
    q = n_th / (1.0 + n_th)
    half_q = 0.5 * q
    c = half_q * (1.0 - t)
    log_t0 = (
        gammaln(n1 + n2 + 1.0)
        - gammaln(n1 + 1.0)
        - gammaln(n2 + 1.0)
        - math.log(1.0 + n_th)
        + (n1 + n2) * math.log(half_q)
    )
    if t > 0.0:
        log_t0 = log_t0 + n1 * math.log(t)
        term = np.exp(log_t0)
    else:
        term = np.exp(log_t0)
        term[1:, :] = 0.0
    acc = term.copy()
    if c == 0.0:
        return acc
    s = n1 + n2
    for n0 in range(_MAX_SERIES_TERMS):
        r = c * (s + n0 + 1.0) / (n0 + 1.0)
        done = (r < 1.0) & (term * r <= CELL_TAIL_CUTOFF * (1.0 - r) * acc)
        if done.all():
            break
        term = term * r
        acc += term
    return acc


def _bucket_numpy(w, table):
    """out[n, c] = sum_b w[n-b] table[b, c]  (lower-triangular Toeplitz)."""
    n = table.shape[0]
    idx = np.arange(n)[:, None] - np.arange(n)[None, :]
    toe = np.where(idx >= 0, w[np.clip(idx, 0, None)], 0.0)
    return toe @ table


if HAVE_NUMBA:
    _cell_series_nb = numba.njit(cache=True)(cell_series)

    @numba.njit(cache=True)
    def _table_numba(t, n_th, n1_max, n2_max):
        out = np.empty((n1_max + 1, n2_max + 1))
        for i in range(n1_max + 1):
            for j in range(n2_max + 1):
                out[i, j] = _cell_series_nb(i, j, t, n_th)
        return out

    @numba.njit(cache=True)
    def _bucket_numba(w, table):
        n, m = table.shape
        out = np.zeros((n, m))
        for i in range(n):
            for b in range(i + 1):
                wv = w[i - b]
                if wv == 0.0:
                    continue
                for col in range(m):
                    out[i, col] += wv * table[b, col]
        return out

else:  # pragma: no cover
    _table_numba = None
    _bucket_numba = None


def single_mode_table(t, n_th, n1_max, n2_max):
    """Dense table of the single-mode joint pmf on [0, n1_max] x [0, n2_max]."""
    if USE_NUMBA:
        return _table_numba(t, n_th, n1_max, n2_max)
    return _table_numpy(t, n_th, n1_max, n2_max)


def bucket_convolve(w, table):
    """Convolve the bucket-detector axis of ``table`` with the 1-D pmf ``w``."""
    w = np.ascontiguousarray(w, dtype=np.float64)
    table = np.ascontiguousarray(table, dtype=np.float64)
    if USE_NUMBA:
        return _bucket_numba(w, table)
    return _bucket_numpy(w, table)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
