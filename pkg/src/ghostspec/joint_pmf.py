"""K-mode joint photon-counting distribution P_k(n1, n2 | {t_i}).

The bucket detector (arm 1) is mode-insensitive, so its count n1 is the sum
of the analyzed mode's surviving photons and one thermal count of mean
t_j * nbar per spectator mode.  The fast path builds the single-mode joint
table for the analyzed mode and convolves the bucket axis with the spectator
thermal pmfs; a literal sum over integer compositions of n1 survives as a
small-scale oracle.

Truncation bounds are provable: the analyzer tail is an exact geometric
tail, the bucket tail a Chernoff bound on the sum of independent geometric
counts.  Inside the retained box every entry is exact (truncation removes
only cells, never contributions to kept cells), so the tail mass is simply
one minus the table sum.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .photon_stats import single_mode_joint, thermal_pmf_vector

# Entries below this are flushed to zero and booked as tail mass.
_FLUSH_LIMIT = 1e-300

_ENUM_MAX_MODES = 4
_ENUM_MAX_N1 = 15


class TruncationError(RuntimeError):
    """A requested truncation cap cannot hold the required tail tolerance."""


@dataclass(frozen=True)
class TruncationSpec:
    """Tail tolerance plus optional hard caps on the table extent."""

    tol: float = 1e-12
    n1_cap: int | None = None
    n2_cap: int | None = None

    def __post_init__(self):
        if not 0.0 < self.tol < 1.0:
            raise ValueError(f"tol must lie in (0, 1), got {self.tol!r}")


@dataclass(frozen=True)
class JointPMF:
    """Dense truncated joint pmf with the residual probability tracked."""

    table: np.ndarray
    tail_mass: float

    def __post_init__(self):
        table = np.asarray(self.table, dtype=np.float64)
        if table.ndim != 2:
            raise ValueError("pmf table must be 2-D")
        if not (table >= 0.0).all():
            raise ValueError("pmf table has negative entries")
        total = math.fsum(table.ravel()) + self.tail_mass
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"table sum + tail_mass = {total!r}, expected 1")
        table = table.copy()
        table.flags.writeable = False
        object.__setattr__(self, "table", table)

    @property
    def n1_max(self):
        return self.table.shape[0] - 1

    @property
    def n2_max(self):
        return self.table.shape[1] - 1


def _check_profile(ts):
    ts = np.asarray(ts, dtype=np.float64)
    if ts.ndim != 1 or ts.size == 0:
        raise ValueError("ts must be a nonempty 1-D sequence of transmittivities")
    if not ((ts >= 0.0) & (ts <= 1.0)).all():
        raise ValueError("transmittivities must lie in [0, 1]")
    return ts


def _geometric_bound(mean, tol):
    """Smallest N with P(n > N) = (mean/(1+mean))^(N+1) <= tol."""
    if mean <= 0.0:
        return 0
    ratio = mean / (1.0 + mean)
    n = max(0, math.ceil(math.log(tol) / math.log(ratio)) - 1)
    while ratio ** (n + 1) > tol:  # guard against rounding in the logs
        n += 1
    return n


def _sum_tail_bound(means, tol):
    """Smallest N with a Chernoff certificate P(sum of geometrics > N) <= tol."""
    means = [m for m in means if m > 0.0]
    if not means:
        return 0
    z_max = 1.0 + 1.0 / max(means)
    best = None
    log_tol = math.log(tol)
    for u in np.geomspace(1e-6, 0.999999, 200):
        z = 1.0 + (z_max - 1.0) * u
        log_mgf = -sum(math.log1p(-m * (z - 1.0)) for m in means)
        need = (log_mgf - log_tol) / math.log(z)  # N + 1 >= need
        n = max(0, math.ceil(need) - 1)
        if best is None or n < best:
            best = n
    return best


def truncation_bound(ts, nbar, tol):
    """Box (n1_max, n2_max) whose excluded probability is provably below tol."""
    ts = _check_profile(ts)
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tol must lie in (0, 1), got {tol!r}")
    if nbar < 0.0:
        raise ValueError(f"nbar must be >= 0, got {nbar!r}")
    if nbar == 0.0:
        return 0, 0
    n1_max = _sum_tail_bound(list(ts * nbar), tol / 2.0)
    n2_max = _geometric_bound(nbar, tol / 2.0)
    return n1_max, n2_max


def _resolve_box(k, ts, nbar, trunc, bounds):
    if bounds is not None:
        return int(bounds[0]), int(bounds[1])
    n1_max, n2_max = truncation_bound(ts, nbar, trunc.tol)
    if trunc.n1_cap is not None and n1_max > trunc.n1_cap:
        j_big = int(np.argmax(ts))
        raise TruncationError(
            f"mode {k}: bucket axis needs n1_max={n1_max} for tol={trunc.tol} "
            f"but the cap is {trunc.n1_cap} (largest contribution from mode {j_big})"
        )
    if trunc.n2_cap is not None and n2_max > trunc.n2_cap:
        raise TruncationError(
            f"mode {k}: analyzer axis needs n2_max={n2_max} for tol={trunc.tol} "
            f"but the cap is {trunc.n2_cap}"
        )
    return n1_max, n2_max


def _finish(table, trunc, bounds):
    table[(table > 0.0) & (table < _FLUSH_LIMIT)] = 0.0
    tail = max(1.0 - math.fsum(table.ravel()), 0.0)
    if bounds is None and tail > trunc.tol * (1.0 + 1e-6) + 1e-15:
        raise TruncationError(
            f"tail mass {tail!r} exceeds the requested tolerance {trunc.tol!r}"
        )
    return JointPMF(table=table, tail_mass=tail)


def joint_pmf_convolve(k, ts, nbar, trunc=None, *, bounds=None):
    """Fast path: single-mode table convolved with the spectator thermals.

    ``bounds`` overrides the tolerance-driven box with an explicit
    (n1_max, n2_max); callers that difference two nearby pmfs use it to pin
    both on a common grid.
    """
    ts = _check_profile(ts)
    if not (0 <= k < ts.size):
        raise IndexError(f"mode index {k} out of range for {ts.size} modes")
    trunc = trunc if trunc is not None else TruncationSpec()
    n1_max, n2_max = _resolve_box(k, ts, nbar, trunc, bounds)
    table = _kernels.single_mode_table(float(ts[k]), 2.0 * nbar, n1_max, n2_max)
    spectator = None
    for j in range(ts.size):
        if j == k:
            continue
        w = thermal_pmf_vector(float(ts[j]) * nbar, n1_max)
        spectator = w if spectator is None else np.convolve(spectator, w)[: n1_max + 1]
    if spectator is not None:
        table = _kernels.bucket_convolve(spectator, table)
    return _finish(table, trunc, bounds)


def compositions(total, parts):
    """Yield every tuple of ``parts`` nonnegative integers summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in compositions(total - head, parts - 1):
            yield (head,) + rest


def joint_pmf_enumerate(k, ts, nbar, trunc=None, *, bounds=None):
    """Oracle path: literal sum over compositions of n1 across the modes.

    Deliberately guarded to small problems; identical contract to
    :func:`joint_pmf_convolve` where it runs.
    """
    ts = _check_profile(ts)
    if not (0 <= k < ts.size):
        raise IndexError(f"mode index {k} out of range for {ts.size} modes")
    n_modes = ts.size
    if n_modes > _ENUM_MAX_MODES:
        raise ValueError(
            f"enumeration oracle is limited to {_ENUM_MAX_MODES} modes, got {n_modes}"
        )
    trunc = trunc if trunc is not None else TruncationSpec()
    n1_max, n2_max = _resolve_box(k, ts, nbar, trunc, bounds)
    if n1_max > _ENUM_MAX_N1:
        raise ValueError(
            f"enumeration oracle is limited to n1_max={_ENUM_MAX_N1}, needs {n1_max}"
        )
    n_th = 2.0 * nbar
    single = np.array(
        [
            [single_mode_joint(a, b, float(ts[k]), n_th) for b in range(n2_max + 1)]
            for a in range(n1_max + 1)
        ]
    )
    spectators = {
        j: thermal_pmf_vector(float(ts[j]) * nbar, n1_max)
        for j in range(n_modes)
        if j != k
    }
    table = np.zeros((n1_max + 1, n2_max + 1))
    for n1 in range(n1_max + 1):
        for split in compositions(n1, n_modes):
            weight = 1.0
            for j, w in spectators.items():
                weight *= w[split[j]]
            if weight == 0.0:
                continue
            table[n1, :] += weight * single[split[k], :]
    return _finish(table, trunc, bounds)


def pmf_moments(pmf, alpha, beta):
    """Moment sum(n1^alpha n2^beta p) over the table.

    Returns ``(moment, bias_bound)`` where the second entry is the
    tail-mass-scaled bound tail * n1_max^alpha * n2_max^beta on the
    truncation bias.
    """
    if alpha < 0 or beta < 0:
        raise ValueError("moment orders must be nonnegative")
    n1 = np.arange(pmf.table.shape[0], dtype=np.float64) ** alpha
    n2 = np.arange(pmf.table.shape[1], dtype=np.float64) ** beta
    moment = math.fsum((pmf.table * np.outer(n1, n2)).ravel())
    bias = pmf.tail_mass * (pmf.n1_max ** alpha) * (pmf.n2_max ** beta)
    return moment, bias
