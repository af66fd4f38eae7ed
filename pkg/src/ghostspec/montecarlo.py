"""Stochastic simulation of both ghost-spectrometry schemes.

Classical scheme, per repetition: every mode j draws a thermal total of
mean n_th = 2*nbar, each photon then routes independently (arm 2 with
probability 1/2, arm-1 survival t_j/2, absorbed otherwise), the bucket
count n1 sums arm-1 survivors over all modes and every mode's arm-2 count
is recorded against it.  Photon-number-resolving detectors throughout.

Quantum scheme, per pair: a mode is drawn from the occupancy weights, the
analyzer photon is detected with probability eta (a single), the object
photon with probability t_k; a coincidence needs both.

Randomness comes from counter-based Philox streams: one child stream per
mode spawned from the master seed, so runs are reproducible and the
per-mode draws are independent.  Repetition batches only bound memory; the
draw sequence, and hence every output, depends only on the seed.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .metrology import klyshko_estimate

RNG_ALGORITHM = "numpy.random.Philox"
_BATCH = 65536


@dataclass
class RunConfig:
    """Inputs of one simulated run; the seed fully determines all outputs."""

    ts: np.ndarray
    nbar: float | None = None
    n_th: float | None = None
    eta: float = 1.0
    repetitions: int | None = None
    n_pairs: int | None = None
    seed: int = 0
    mode_weights: np.ndarray | None = None

    def __post_init__(self):
        self.ts = np.asarray(self.ts, dtype=np.float64)
        if self.ts.ndim != 1 or self.ts.size == 0:
            raise ValueError("ts must be a nonempty 1-D sequence")
        if not ((self.ts >= 0.0) & (self.ts <= 1.0)).all():
            raise ValueError("transmittivities must lie in [0, 1]")
        if (self.nbar is None) == (self.n_th is None):
            raise ValueError("specify exactly one of nbar or n_th")
        if self.nbar is None:
            self.nbar = float(self.n_th) / 2.0
        else:
            self.nbar = float(self.nbar)
        self.n_th = 2.0 * self.nbar
        if self.nbar < 0.0:
            raise ValueError(f"nbar must be >= 0, got {self.nbar!r}")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta!r}")
        if self.mode_weights is None:
            self.mode_weights = np.full(self.ts.size, 1.0 / self.ts.size)
        else:
            w = np.asarray(self.mode_weights, dtype=np.float64)
            if w.shape != self.ts.shape or (w < 0.0).any():
                raise ValueError("mode_weights must be nonnegative, one per mode")
            total = w.sum()
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"mode_weights must sum to 1, got {total!r}")
            self.mode_weights = w / total

    @property
    def n_modes(self):
        return self.ts.size


@dataclass
class ClassicalRunSummary:
    """Accumulated joint (n1, n2) histograms, one per analyzed mode."""

    repetitions: int
    histograms: list
    photons_drawn: int
    photons_analyzed: int
    photons_survived: int
    photons_lost: int
    seed: int | None
    rng_algorithm: str = RNG_ALGORITHM


@dataclass
class QuantumRunSummary:
    """Coincidence and analyzer-singles counters per mode."""

    coincidences: np.ndarray
    singles: np.ndarray
    n_pairs: int
    seed: int | None
    rng_algorithm: str = RNG_ALGORITHM


def _mode_streams(seed, n_modes):
    children = np.random.SeedSequence(seed).spawn(n_modes)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


def sample_thermal(n_th, rng, size=None):
    """Draw photon counts from the thermal (geometric) law of mean ``n_th``."""
    if n_th < 0.0:
        raise ValueError(f"n_th must be >= 0, got {n_th!r}")
    return rng.geometric(1.0 / (1.0 + n_th), size=size) - 1


def _grow_to(hist, shape):
    if hist.shape[0] >= shape[0] and hist.shape[1] >= shape[1]:
        return hist
    grown = np.zeros(
        (max(hist.shape[0], shape[0]), max(hist.shape[1], shape[1])), dtype=np.int64
    )
    grown[: hist.shape[0], : hist.shape[1]] = hist
    return grown


def simulate_classical_run(cfg, records_path=None):
    """Run the split-thermal scheme for ``cfg.repetitions`` repetitions.

    ``records_path`` optionally dumps every (repetition, k, n1, n2) record
    as CSV; meant for small runs only.
    """
    if cfg.repetitions is None or cfg.repetitions < 1:
        raise ValueError("cfg.repetitions must be a positive integer")
    n_modes = cfg.n_modes
    gens = _mode_streams(cfg.seed, n_modes)
    hists = [np.zeros((1, 1), dtype=np.int64) for _ in range(n_modes)]
    drawn = analyzed = survived = lost = 0
    writer = ctx = None
    if records_path is not None:
        ctx = open(records_path, "w", newline="")
        writer = csv.writer(ctx)
        writer.writerow(["repetition", "k", "n1", "n2"])
    try:
        done = 0
        while done < cfg.repetitions:
            batch = min(_BATCH, cfg.repetitions - done)
            n1 = np.zeros(batch, dtype=np.int64)
            arm2 = np.empty((n_modes, batch), dtype=np.int64)
            for j in range(n_modes):
                totals = sample_thermal(cfg.n_th, gens[j], size=batch)
                to_arm2 = gens[j].binomial(totals, 0.5)
                through = gens[j].binomial(totals - to_arm2, cfg.ts[j])
                arm2[j] = to_arm2
                n1 += through
                drawn += int(totals.sum())
                analyzed += int(to_arm2.sum())
                survived += int(through.sum())
                lost += int((totals - to_arm2 - through).sum())
            hi1 = int(n1.max()) + 1
            for k in range(n_modes):
                hists[k] = _grow_to(hists[k], (hi1, int(arm2[k].max()) + 1))
                np.add.at(hists[k], (n1, arm2[k]), 1)
            if writer is not None:
                for k in range(n_modes):
                    for i in range(batch):
                        writer.writerow([done + i, k, int(n1[i]), int(arm2[k, i])])
            done += batch
    finally:
        if ctx is not None:
            ctx.close()
    return ClassicalRunSummary(
        repetitions=int(cfg.repetitions),
        histograms=hists,
        photons_drawn=drawn,
        photons_analyzed=analyzed,
        photons_survived=survived,
        photons_lost=lost,
        seed=cfg.seed,
    )


def simulate_quantum_run(cfg):
    """Run the photon-pair scheme for ``cfg.n_pairs`` pairs."""
    if cfg.n_pairs is None or cfg.n_pairs < 1:
        raise ValueError("cfg.n_pairs must be a positive integer")
    n_modes = cfg.n_modes
    master = np.random.Generator(np.random.Philox(np.random.SeedSequence(cfg.seed)))
    pairs_per_mode = master.multinomial(cfg.n_pairs, cfg.mode_weights)
    gens = _mode_streams(cfg.seed, n_modes)
    coincidences = np.zeros(n_modes, dtype=np.int64)
    singles = np.zeros(n_modes, dtype=np.int64)
    for k in range(n_modes):
        t, eta = float(cfg.ts[k]), cfg.eta
        outcome = gens[k].multinomial(
            int(pairs_per_mode[k]),
            [eta * t, eta * (1.0 - t), (1.0 - eta) * t, (1.0 - eta) * (1.0 - t)],
        )
        coincidences[k] = outcome[0]
        singles[k] = outcome[0] + outcome[1]
    return QuantumRunSummary(
        coincidences=coincidences,
        singles=singles,
        n_pairs=int(cfg.n_pairs),
        seed=cfg.seed,
    )


def merge_summaries(a, b):
    """Combine two summaries of the same configuration; associative."""
    if isinstance(a, QuantumRunSummary) and isinstance(b, QuantumRunSummary):
        return QuantumRunSummary(
            coincidences=a.coincidences + b.coincidences,
            singles=a.singles + b.singles,
            n_pairs=a.n_pairs + b.n_pairs,
            seed=a.seed if a.seed == b.seed else None,
        )
    if isinstance(a, ClassicalRunSummary) and isinstance(b, ClassicalRunSummary):
        if len(a.histograms) != len(b.histograms):
            raise ValueError("summaries analyze different numbers of modes")
        hists = []
        for ha, hb in zip(a.histograms, b.histograms):
            shape = (max(ha.shape[0], hb.shape[0]), max(ha.shape[1], hb.shape[1]))
            hists.append(_grow_to(ha, shape) + _grow_to(hb, shape))
        return ClassicalRunSummary(
            repetitions=a.repetitions + b.repetitions,
            histograms=hists,
            photons_drawn=a.photons_drawn + b.photons_drawn,
            photons_analyzed=a.photons_analyzed + b.photons_analyzed,
            photons_survived=a.photons_survived + b.photons_survived,
            photons_lost=a.photons_lost + b.photons_lost,
            seed=a.seed if a.seed == b.seed else None,
        )
    raise TypeError("cannot merge summaries of different kinds")


@dataclass(frozen=True)
class EmpiricalMoments:
    """Histogram-derived moment estimates with standard errors."""

    repetitions: int
    mean1: float
    mean2: float
    mean1_se: float
    mean2_se: float
    c12: float
    c12_se: float
    m22: float
    m22_se: float
    var_c12: float
    histogram: np.ndarray = field(repr=False)


def _hist_moment(hist, reps, alpha, beta):
    n1 = np.arange(hist.shape[0], dtype=np.float64) ** alpha
    n2 = np.arange(hist.shape[1], dtype=np.float64) ** beta
    return float((hist * np.outer(n1, n2)).sum()) / reps


def empirical_stats(summary):
    """Per-mode moment estimates from a run summary.

    Classical summaries yield :class:`EmpiricalMoments` per mode; quantum
    summaries yield (t_hat, variance) heralded estimates per mode.
    """
    if isinstance(summary, QuantumRunSummary):
        return [
            klyshko_estimate(int(c), int(n))
            for c, n in zip(summary.coincidences, summary.singles)
        ]
    if not isinstance(summary, ClassicalRunSummary):
        raise TypeError(f"unsupported summary type {type(summary)!r}")
    if summary.repetitions < 1:
        raise ValueError("summary holds no repetitions")
    out = []
    m = summary.repetitions
    for hist in summary.histograms:
        mean1 = _hist_moment(hist, m, 1, 0)
        mean2 = _hist_moment(hist, m, 0, 1)
        c12 = _hist_moment(hist, m, 1, 1)
        m22 = _hist_moment(hist, m, 2, 2)
        m44 = _hist_moment(hist, m, 4, 4)
        var1 = max(_hist_moment(hist, m, 2, 0) - mean1 ** 2, 0.0)
        var2 = max(_hist_moment(hist, m, 0, 2) - mean2 ** 2, 0.0)
        var_c12 = max(m22 - c12 ** 2, 0.0)
        var_m22 = max(m44 - m22 ** 2, 0.0)
        out.append(
            EmpiricalMoments(
                repetitions=m,
                mean1=mean1,
                mean2=mean2,
                mean1_se=(var1 / m) ** 0.5,
                mean2_se=(var2 / m) ** 0.5,
                c12=c12,
                c12_se=(var_c12 / m) ** 0.5,
                m22=m22,
                m22_se=(var_m22 / m) ** 0.5,
                var_c12=var_c12,
                histogram=hist,
            )
        )
    return out
