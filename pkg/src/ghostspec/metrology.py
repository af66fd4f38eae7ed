"""Precision figures for the two ghost-spectrometry strategies.

Three error figures per mode, all at matched total resources:

* heralded (photon-pair) estimate: binomial variance t(1-t)/N_k with
  N_k = eta * N_tot analyzer counts;
* classical correlation estimate: error propagation of the c12 = <n1 n2>
  inversion, var(c12) / (dc12/dt)^2 / M over M = N_tot/nbar repetitions;
* classical Cramer-Rao bound 1/(M F_k), with the Fisher information F_k
  obtained from the squared Hellinger distance between the joint pmf and
  its transmittivity-perturbed copy, cross-checked by a log-likelihood
  finite-difference sum.

Hellinger evaluations difference two pmfs that differ at the 1e-7 level, so
both distributions are always built on one common truncation box.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .jets import correlation_stats
from .joint_pmf import TruncationSpec, joint_pmf_convolve, truncation_bound

DEFAULT_EPS = 1e-7
DEFAULT_EPS_SWEEP = (1e-6, 1e-7, 1e-8)
# relative spread across the sweep above which the estimate is flagged
EPS_STABILITY_RTOL = 1e-3
DEFAULT_FD_STEP = 1e-5
CRB_MAX_MODES = 12


@dataclass(frozen=True)
class ResourceBudget:
    """Total photons committed per mode and how each strategy spends them.

    Invariants: nbar * repetitions == n_tot (the classical strategy splits
    the budget into M repetitions of mean nbar), 0 < eta <= 1.
    """

    n_tot: float
    eta: float
    nbar: float
    repetitions: float

    def __post_init__(self):
        if not self.n_tot > 0.0:
            raise ValueError(f"n_tot must be > 0, got {self.n_tot!r}")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta!r}")
        if not self.nbar > 0.0:
            raise ValueError(f"nbar must be > 0, got {self.nbar!r}")
        if not self.repetitions > 0.0:
            raise ValueError(f"repetitions must be > 0, got {self.repetitions!r}")
        if abs(self.nbar * self.repetitions - self.n_tot) > 1e-9 * self.n_tot:
            raise ValueError(
                f"budget inconsistent: nbar*repetitions = "
                f"{self.nbar * self.repetitions!r} != n_tot = {self.n_tot!r}"
            )

    @classmethod
    def from_total(cls, n_tot, eta=0.35, nbar=1.0):
        return cls(n_tot=float(n_tot), eta=float(eta), nbar=float(nbar),
                   repetitions=float(n_tot) / float(nbar))

    @classmethod
    def from_quantum_singles(cls, singles, eta=0.35, nbar=1.0):
        """Budget granted to the classical strategy by N_k analyzer counts:
        the pair source spent N_k / eta photons per mode to deliver them."""
        n_tot = float(singles) / float(eta)
        return cls(n_tot=n_tot, eta=float(eta), nbar=float(nbar),
                   repetitions=n_tot / float(nbar))


@dataclass(frozen=True)
class ComparisonRow:
    """All precision figures for one mode, plus numeric diagnostics."""

    k: int
    t: float
    var_quantum: float
    var_classical_prop: float
    var_classical_crb: float | None = None
    fisher: float | None = None
    flags: tuple[str, ...] = ()
    tail_mass: float | None = None
    eps_used: float | None = None
    eps_variation: float | None = None


def klyshko_estimate(coincidences, singles):
    """Heralded transmission estimate t = C/N with variance t(1-t)/N."""
    if singles < 1:
        raise ValueError(f"singles must be >= 1, got {singles!r}")
    if not 0 <= coincidences <= singles:
        raise ValueError(
            f"coincidences must lie in [0, singles], got {coincidences!r} of {singles!r}"
        )
    t_hat = coincidences / singles
    return t_hat, t_hat * (1.0 - t_hat) / singles


def quantum_variance_at_budget(t, budget):
    """Heralded variance t(1-t)/(eta * N_tot): only eta*N_tot pairs herald."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t!r}")
    return t * (1.0 - t) / (budget.eta * budget.n_tot)


def classical_variance_propagation(k, ts, budget):
    """Propagated variance of the correlation-inversion estimator for mode k."""
    stats = correlation_stats(k, ts, budget.nbar)
    if stats.dc12_dt == 0.0:
        raise ZeroDivisionError(
            "correlation signal has zero sensitivity; the estimator is singular"
        )
    return stats.var_c12 / (stats.dc12_dt ** 2 * budget.repetitions)


def hellinger_distance(p, q):
    """Hellinger distance sqrt(sum (sqrt(p) - sqrt(q))^2) on a common grid."""
    if p.table.shape != q.table.shape:
        raise ValueError(
            f"pmf grids differ: {p.table.shape} vs {q.table.shape}"
        )
    diff = np.sqrt(p.table) - np.sqrt(q.table)
    return math.sqrt(math.fsum((diff * diff).ravel()))


def _fisher_box(k, ts, nbar, tol, delta):
    """Common truncation box covering both the base and the perturbed pmf."""
    bumped = np.array(ts, dtype=np.float64)
    bumped[k] = min(1.0, bumped[k] + abs(delta))
    return truncation_bound(bumped, nbar, tol)


def _perturbed(ts, k, delta):
    out = np.array(ts, dtype=np.float64)
    out[k] += delta
    return out


def fisher_hellinger(k, ts, nbar, eps=DEFAULT_EPS, trunc=None, *, bounds=None):
    """Fisher information 4 D_H^2(P, P_eps) / eps^2 for mode k.

    The perturbation is +eps, flipped to -eps when t_k + eps would leave
    [0, 1]; both pmfs share one truncation box.
    """
    ts = np.asarray(ts, dtype=np.float64)
    if eps <= 0.0:
        raise ValueError(f"eps must be > 0, got {eps!r}")
    trunc = trunc if trunc is not None else TruncationSpec()
    delta = eps if ts[k] + eps <= 1.0 else -eps
    if bounds is None:
        bounds = _fisher_box(k, ts, nbar, trunc.tol, delta)
    base = joint_pmf_convolve(k, ts, nbar, trunc, bounds=bounds)
    pert = joint_pmf_convolve(k, _perturbed(ts, k, delta), nbar, trunc, bounds=bounds)
    dh = hellinger_distance(base, pert)
    return 4.0 * dh * dh / (eps * eps)


def fisher_hellinger_sweep(k, ts, nbar, eps=DEFAULT_EPS,
                           eps_sweep=DEFAULT_EPS_SWEEP, trunc=None):
    """Fisher estimate at ``eps`` plus its relative spread across the sweep.

    Returns ``(fisher, variation, tail_mass)``; instability is reported, not
    hidden, so callers can flag rows where the spread exceeds their budget.
    """
    ts = np.asarray(ts, dtype=np.float64)
    trunc = trunc if trunc is not None else TruncationSpec()
    all_eps = sorted(set(eps_sweep) | {eps})
    delta_max = max(all_eps)
    sign = 1.0 if ts[k] + delta_max <= 1.0 else -1.0
    bounds = _fisher_box(k, ts, nbar, trunc.tol, sign * delta_max)
    base = joint_pmf_convolve(k, ts, nbar, trunc, bounds=bounds)
    values = {}
    for e in all_eps:
        pert = joint_pmf_convolve(k, _perturbed(ts, k, sign * e), nbar, trunc,
                                  bounds=bounds)
        dh = hellinger_distance(base, pert)
        values[e] = 4.0 * dh * dh / (e * e)
    fisher = values[eps]
    spread = max(values.values()) - min(values.values())
    variation = spread / fisher if fisher > 0.0 else math.inf
    return fisher, variation, base.tail_mass


def fisher_loglik_fd(k, ts, nbar, step=DEFAULT_FD_STEP, trunc=None, *, bounds=None):
    """Independent Fisher oracle: sum P (d log P / dt)^2 by finite differences.

    Central differences where t_k +- step stays in [0, 1], one-sided at the
    boundaries.  Returns ``(fisher, excluded_mass)`` where excluded_mass
    collects the tail plus any cells skipped for vanishing probability.
    """
    ts = np.asarray(ts, dtype=np.float64)
    if step <= 0.0:
        raise ValueError(f"step must be > 0, got {step!r}")
    trunc = trunc if trunc is not None else TruncationSpec()
    t_k = ts[k]
    if t_k - step < 0.0:
        lo, hi = 0.0, step
    elif t_k + step > 1.0:
        lo, hi = -step, 0.0
    else:
        lo, hi = -step, step
    if bounds is None:
        bounds = _fisher_box(k, ts, nbar, trunc.tol, hi)
    base = joint_pmf_convolve(k, ts, nbar, trunc, bounds=bounds)
    upper = joint_pmf_convolve(k, _perturbed(ts, k, hi), nbar, trunc, bounds=bounds) \
        if hi != 0.0 else base
    lower = joint_pmf_convolve(k, _perturbed(ts, k, lo), nbar, trunc, bounds=bounds) \
        if lo != 0.0 else base
    span = hi - lo
    mask = (base.table > 0.0) & (upper.table > 0.0) & (lower.table > 0.0)
    dlog = np.zeros_like(base.table)
    dlog[mask] = (np.log(upper.table[mask]) - np.log(lower.table[mask])) / span
    fisher = math.fsum((base.table * dlog * dlog)[mask])
    excluded = base.tail_mass + math.fsum(base.table[~mask])
    return fisher, excluded


def crb_bound(fisher, repetitions):
    """Cramer-Rao lower bound 1/(M F) on the variance over M repetitions."""
    if not fisher > 0.0:
        raise ValueError(f"fisher information must be > 0, got {fisher!r}")
    if not repetitions >= 1.0:
        raise ValueError(f"repetitions must be >= 1, got {repetitions!r}")
    return 1.0 / (repetitions * fisher)


def _compare_one(k, ts, budget, trunc, with_crb, eps, eps_sweep):
    t = float(ts[k])
    flags = []
    if t == 0.0 or t == 1.0:
        flags.append("degenerate_t")
    var_q = quantum_variance_at_budget(t, budget)
    var_prop = classical_variance_propagation(k, ts, budget)
    fisher = crb = tail = variation = eps_used = None
    if with_crb:
        fisher, variation, tail = fisher_hellinger_sweep(
            k, ts, budget.nbar, eps=eps, eps_sweep=eps_sweep, trunc=trunc
        )
        eps_used = eps
        if variation > EPS_STABILITY_RTOL:
            flags.append("eps_unstable")
        crb = crb_bound(fisher, budget.repetitions)
    return ComparisonRow(
        k=k, t=t, var_quantum=var_q, var_classical_prop=var_prop,
        var_classical_crb=crb, fisher=fisher, flags=tuple(flags),
        tail_mass=tail, eps_used=eps_used, eps_variation=variation,
    )


def compare_modes(ts, budget, trunc=None, with_crb=False, *,
                  eps=DEFAULT_EPS, eps_sweep=DEFAULT_EPS_SWEEP,
                  crb_max_modes=CRB_MAX_MODES, workers=None):
    """One :class:`ComparisonRow` per mode, ordered by mode index.

    ``budget`` is either a single :class:`ResourceBudget` applied to every
    mode or a per-mode sequence.  The Cramer-Rao path needs the full joint
    pmf, so it is guarded to ``crb_max_modes`` modes.
    """
    ts = np.asarray(ts, dtype=np.float64)
    if ts.ndim != 1 or ts.size == 0:
        raise ValueError("ts must be a nonempty 1-D sequence of transmittivities")
    n_modes = ts.size
    if isinstance(budget, ResourceBudget):
        budgets = [budget] * n_modes
    else:
        budgets = list(budget)
        if len(budgets) != n_modes:
            raise ValueError(
                f"got {len(budgets)} budgets for {n_modes} modes"
            )
    if with_crb and n_modes > crb_max_modes:
        raise ValueError(
            f"Cramer-Rao path is guarded to {crb_max_modes} modes, got {n_modes}; "
            "rebin first or raise crb_max_modes explicitly"
        )
    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_compare_one, k, ts, budgets[k], trunc, with_crb,
                            eps, eps_sweep)
                for k in range(n_modes)
            ]
            return [f.result() for f in futures]
    return [
        _compare_one(k, ts, budgets[k], trunc, with_crb, eps, eps_sweep)
        for k in range(n_modes)
    ]
