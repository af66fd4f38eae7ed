"""Exact photon-counting statistics of a split thermal mode behind a filter.

Model: a source mode with thermal photon statistics (mean ``n_th``) is split
on a balanced beam splitter.  Arm 1 passes a filter of transmittivity ``t``
and reaches a bucket detector; arm 2 is detected directly; a virtual mode
'0' absorbs the photons the filter removes.  Each photon routes
independently with probabilities t/2 (arm 1, survives), (1-t)/2 (absorbed)
and 1/2 (arm 2), so the three-way counts are multinomial given the total
draw.  The per-arm mean after the splitter is nbar = n_th / 2.

All functions are pure and safe to call concurrently.
"""

import math

import numpy as np

from . import _kernels


def _check_count(value, name):
    if value < 0 or value != int(value):
        raise ValueError(f"{name} must be a nonnegative integer, got {value!r}")
    return int(value)


def _check_nonneg(value, name):
    value = float(value)
    if not value >= 0.0:
        raise ValueError(f"{name} must be >= 0, got {value!r}")
    return value


def _check_trans(value, name="t"):
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def thermal_pmf(m, n_th):
    """Thermal (geometric) photon-number probability p(m) = n_th^m / (n_th+1)^(m+1)."""
    m = _check_count(m, "m")
    n_th = _check_nonneg(n_th, "n_th")
    if n_th == 0.0:
        return 1.0 if m == 0 else 0.0
    # ratio < 1, so the power underflows gracefully for huge m
    return (n_th / (n_th + 1.0)) ** m / (n_th + 1.0)


def thermal_pmf_vector(mean, n_max):
    """Vector of thermal probabilities p(0..n_max) for a mode of mean ``mean``."""
    n_max = _check_count(n_max, "n_max")
    mean = _check_nonneg(mean, "mean")
    if mean == 0.0:
        out = np.zeros(n_max + 1)
        out[0] = 1.0
        return out
    n = np.arange(n_max + 1, dtype=np.float64)
    return (mean / (mean + 1.0)) ** n / (mean + 1.0)


def triple_pmf(n1, n2, n0, t, n_th):
    """Probability of observing (n1, n2, n0) photons in (arm 1, arm 2, virtual mode).

    p = multinomial(n1+n2+n0; n1, n2, n0) * p_th(n1+n2+n0 | n_th)
        * (1/2)^(n1+n2+n0) * t^n1 * (1-t)^n0

    The multinomial factor equals the two binomial coefficients of the
    three-way split; the photon-routing factor is (1/2) per photon, which is
    what normalization over all (n1, n2, n0) requires.
    """
    n1 = _check_count(n1, "n1")
    n2 = _check_count(n2, "n2")
    n0 = _check_count(n0, "n0")
    t = _check_trans(t)
    n_th = _check_nonneg(n_th, "n_th")
    if n_th == 0.0:
        return 1.0 if n1 == n2 == n0 == 0 else 0.0
    if t == 0.0 and n1 > 0:
        return 0.0
    if t == 1.0 and n0 > 0:
        return 0.0
    m = n1 + n2 + n0
    q = n_th / (n_th + 1.0)
    logp = (
        math.lgamma(m + 1.0)
        - math.lgamma(n1 + 1.0)
        - math.lgamma(n2 + 1.0)
        - math.lgamma(n0 + 1.0)
        - math.log(n_th + 1.0)
        + m * math.log(0.5 * q)
    )
    if n1 > 0:
        logp += n1 * math.log(t)
    if n0 > 0:
        logp += n0 * math.log(1.0 - t)
    return math.exp(logp)


def single_mode_joint(n1, n2, t, n_th):
    """Joint probability of (n1, n2) with the virtual loss mode summed out.

    The n0 series is geometric-dominated; summation stops once the bounded
    remainder is below 1e-15 of the accumulated mass.
    """
    n1 = _check_count(n1, "n1")
    n2 = _check_count(n2, "n2")
    t = _check_trans(t)
    n_th = _check_nonneg(n_th, "n_th")
    return _kernels.cell_series(n1, n2, t, n_th)


def single_mode_joint_table(t, n_th, n_max):
    """Dense table of ``single_mode_joint`` for 0 <= n1, n2 <= n_max.

    Returns ``(table, tail_mass)`` where ``tail_mass`` is the probability
    left outside the table.
    """
    t = _check_trans(t)
    n_th = _check_nonneg(n_th, "n_th")
    n_max = _check_count(n_max, "n_max")
    table = _kernels.single_mode_table(t, n_th, n_max, n_max)
    tail = 1.0 - math.fsum(table.ravel())
    return table, max(tail, 0.0)
