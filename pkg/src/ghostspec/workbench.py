"""Scenario construction, count-data ingestion, rebinning and reports.

File formats
------------
profile CSV : header ``wavelength_nm,transmittivity``
counts CSV  : header ``wavelength_nm,coincidences,singles,window_s``
reports     : CSV with ``# key = value`` metadata lines followed by the
              columns ``k,T,var_quantum,var_classical_prop,
              var_classical_crb,fisher,flags``, or the JSON equivalent
              with a ``meta`` block and a ``rows`` list.

Reports are deterministic for a fixed seed and fixed flags; floats are
written with 17 significant digits so byte comparison is meaningful.  All
file writes go through a write-temp-then-rename so readers never see a
partial file.
"""

import csv
import json
import math
import os
import tempfile
import warnings
from dataclasses import dataclass

import numpy as np

from . import __version__, _kernels
from .joint_pmf import TruncationSpec
from .metrology import (
    ComparisonRow,
    ResourceBudget,
    compare_modes,
    crb_bound,
    fisher_hellinger_sweep,
    klyshko_estimate,
    EPS_STABILITY_RTOL,
)
from .montecarlo import RNG_ALGORITHM, RunConfig, simulate_quantum_run

PROFILE_HEADER = ["wavelength_nm", "transmittivity"]
COUNTS_HEADER = ["wavelength_nm", "coincidences", "singles", "window_s"]
REPORT_COLUMNS = [
    "k", "T", "var_quantum", "var_classical_prop",
    "var_classical_crb", "fisher", "flags",
]


@dataclass(frozen=True)
class TransmissionProfile:
    """Per-mode transmittivities on a uniform wavelength grid."""

    wavelengths_nm: np.ndarray
    transmittivities: np.ndarray

    def __post_init__(self):
        wl = np.asarray(self.wavelengths_nm, dtype=np.float64)
        ts = np.asarray(self.transmittivities, dtype=np.float64)
        if wl.ndim != 1 or wl.size == 0 or wl.shape != ts.shape:
            raise ValueError("profile needs matching 1-D wavelength and value arrays")
        if wl.size > 1:
            steps = np.diff(wl)
            if not (steps > 0).all():
                raise ValueError("wavelength grid must be strictly increasing")
            if not np.allclose(steps, steps[0], rtol=1e-6, atol=0.0):
                raise ValueError("wavelength grid must be uniformly spaced")
        if not ((ts >= 0.0) & (ts <= 1.0)).all():
            raise ValueError("transmittivities must lie in [0, 1]")
        for name, arr in (("wavelengths_nm", wl), ("transmittivities", ts)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_modes(self):
        return self.wavelengths_nm.size


@dataclass(frozen=True)
class CountRecord:
    """One spectrometer point: coincidences and analyzer singles in a window."""

    wavelength_nm: float
    coincidences: int
    singles: int
    window_s: float = 1.0

    def __post_init__(self):
        if self.coincidences < 0 or self.singles < 0:
            raise ValueError("counts must be nonnegative")
        if self.coincidences > self.singles:
            raise ValueError(
                f"coincidences ({self.coincidences}) exceed singles ({self.singles})"
            )
        if not self.window_s > 0.0:
            raise ValueError(f"window_s must be > 0, got {self.window_s!r}")


def uniform_grid(center_nm=810.0, n_points=100, spacing_nm=None, span_nm=None):
    """Uniform wavelength grid centered on ``center_nm``.

    The default span of 33 nm gives the reference 100-point grid a 0.33 nm
    spacing; for other point counts the same span is subdivided evenly.
    """
    if n_points < 1:
        raise ValueError(f"n_points must be >= 1, got {n_points!r}")
    if spacing_nm is None:
        span = 33.0 if span_nm is None else float(span_nm)
        spacing_nm = span / n_points
    if not spacing_nm > 0.0:
        raise ValueError(f"spacing must be > 0, got {spacing_nm!r}")
    offsets = np.arange(n_points, dtype=np.float64) - (n_points - 1) / 2.0
    return center_nm + offsets * spacing_nm


def supergaussian_profile(center_nm, fwhm_nm, order, peak_t, grid):
    """Supergaussian bandpass: T = peak * exp(-ln2 (2 dl/fwhm)^(2 order)).

    The half-width normalization is exact: T(center +- fwhm/2) = peak/2.
    """
    if not fwhm_nm > 0.0:
        raise ValueError(f"fwhm_nm must be > 0, got {fwhm_nm!r}")
    if order < 1 or order != int(order):
        raise ValueError(f"order must be a positive integer, got {order!r}")
    if not 0.0 < peak_t <= 1.0:
        raise ValueError(f"peak_t must lie in (0, 1], got {peak_t!r}")
    grid = np.asarray(grid, dtype=np.float64)
    arg = (2.0 * (grid - center_nm) / fwhm_nm) ** (2 * int(order))
    return TransmissionProfile(grid, peak_t * np.exp(-math.log(2.0) * arg))


def _fmt(x):
    return f"{x:.17g}"


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ghostspec-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def save_profile(profile, path):
    lines = [",".join(PROFILE_HEADER)]
    for wl, t in zip(profile.wavelengths_nm, profile.transmittivities):
        lines.append(f"{_fmt(wl)},{_fmt(t)}")
    _atomic_write(path, "\n".join(lines) + "\n")


def load_profile(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != PROFILE_HEADER:
        raise ValueError(f"{path}: line 1: expected header {','.join(PROFILE_HEADER)}")
    wl, ts = [], []
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            wl.append(float(row[0]))
            ts.append(float(row[1]))
        except (ValueError, IndexError) as exc:
            raise ValueError(f"{path}: line {i}: malformed row {row!r}") from exc
    return TransmissionProfile(np.array(wl), np.array(ts))


def save_counts(records, path):
    lines = [",".join(COUNTS_HEADER)]
    for r in records:
        lines.append(
            f"{_fmt(r.wavelength_nm)},{r.coincidences},{r.singles},{_fmt(r.window_s)}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def load_counts(path):
    """Read and validate a counts CSV; parse errors carry line numbers."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != COUNTS_HEADER:
        raise ValueError(f"{path}: line 1: expected header {','.join(COUNTS_HEADER)}")
    records = []
    last_wl = None
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 4:
            raise ValueError(f"{path}: line {i}: expected 4 fields, got {len(row)}")
        try:
            wl = float(row[0])
            coincidences = int(row[1])
            singles = int(row[2])
            window = float(row[3])
        except ValueError as exc:
            raise ValueError(f"{path}: line {i}: malformed row {row!r}") from exc
        try:
            record = CountRecord(wl, coincidences, singles, window)
        except ValueError as exc:
            raise ValueError(f"{path}: line {i}: {exc}") from exc
        if last_wl is not None and wl <= last_wl:
            raise ValueError(f"{path}: line {i}: wavelengths must increase")
        last_wl = wl
        records.append(record)
    if not records:
        warnings.warn(f"{path}: counts file has a header but no data rows")
    return records


def _divisors(n):
    return [d for d in range(1, n + 1) if n % d == 0]


def rebin(data, j):
    """Regroup ``j`` consecutive points into one mode.

    Counts (and windows) add within a group; a profile's transmittivity is
    averaged, which matches count-weighted recombination when every point
    carries the same singles budget.  ``j`` must divide the point count.
    """
    if j < 1 or j != int(j):
        raise ValueError(f"group size must be a positive integer, got {j!r}")
    j = int(j)
    if isinstance(data, TransmissionProfile):
        n = data.n_modes
        if n % j:
            raise ValueError(
                f"group size {j} does not divide {n} points; valid sizes: {_divisors(n)}"
            )
        wl = data.wavelengths_nm.reshape(-1, j).mean(axis=1)
        ts = data.transmittivities.reshape(-1, j).mean(axis=1)
        return TransmissionProfile(wl, ts)
    records = list(data)
    n = len(records)
    if n == 0:
        raise ValueError("cannot rebin an empty record list")
    if n % j:
        raise ValueError(
            f"group size {j} does not divide {n} points; valid sizes: {_divisors(n)}"
        )
    out = []
    for g in range(0, n, j):
        group = records[g : g + j]
        out.append(
            CountRecord(
                wavelength_nm=sum(r.wavelength_nm for r in group) / j,
                coincidences=sum(r.coincidences for r in group),
                singles=sum(r.singles for r in group),
                window_s=sum(r.window_s for r in group),
            )
        )
    return out


def _base_meta(**overrides):
    meta = {
        "tool": "ghostspec",
        "version": __version__,
        "backend": _kernels.backend_name(),
        "source": None,
        "modes": None,
        "rebin": 1,
        "eta": None,
        "nbar": None,
        "n_tot": None,
        "n_pairs": None,
        "window_s": None,
        "budget_mode": None,
        "with_crb": False,
        "eps": None,
        "tol": None,
        "seed": None,
        "rng": None,
    }
    meta.update(overrides)
    return meta


def _row_dict(row):
    return {
        "k": row.k,
        "T": row.t,
        "var_quantum": row.var_quantum,
        "var_classical_prop": row.var_classical_prop,
        "var_classical_crb": row.var_classical_crb,
        "fisher": row.fisher,
        "flags": ";".join(row.flags),
        "tail_mass": row.tail_mass,
        "eps_used": row.eps_used,
        "eps_variation": row.eps_variation,
    }


def _record_budgets(records, eta, nbar, budget_mode):
    if budget_mode == "per-mode":
        return [
            ResourceBudget.from_quantum_singles(r.singles, eta=eta, nbar=nbar)
            for r in records
        ]
    if budget_mode == "shared":
        total = sum(r.singles for r in records) / (eta * len(records))
        shared = ResourceBudget.from_total(total, eta=eta, nbar=nbar)
        return [shared] * len(records)
    raise ValueError(f"budget_mode must be 'per-mode' or 'shared', got {budget_mode!r}")


def run_comparison(profile=None, counts=None, *, eta=0.35, nbar=1.0, n_tot=None,
                   rebin_j=1, with_crb=False, eps=1e-7, tol=1e-12, seed=None,
                   n_pairs=None, window_s=1.0, budget_mode="per-mode",
                   crb_max_modes=None, workers=None):
    """Full comparison pipeline; returns the report as a plain dict.

    Exactly one of ``profile`` / ``counts`` must be given.  A profile with a
    ``seed`` and ``n_pairs`` first synthesizes heralded counts; a profile
    alone needs ``n_tot`` and compares at that fixed budget.
    """
    if (profile is None) == (counts is None):
        raise ValueError("pass exactly one of profile or counts")
    trunc = TruncationSpec(tol=tol)
    source = "counts"
    if profile is not None:
        if seed is not None or n_pairs is not None:
            if seed is None or n_pairs is None:
                raise ValueError("synthesizing counts needs both seed and n_pairs")
            summary = simulate_quantum_run(
                RunConfig(ts=profile.transmittivities, nbar=nbar, eta=eta,
                          n_pairs=int(n_pairs), seed=int(seed))
            )
            counts = [
                CountRecord(wl, int(c), int(n), window_s)
                for wl, c, n in zip(profile.wavelengths_nm, summary.coincidences,
                                    summary.singles)
            ]
            source = "synthetic"
        else:
            source = "profile"
    kwargs = dict(with_crb=with_crb, eps=eps, trunc=trunc, workers=workers)
    if crb_max_modes is not None:
        kwargs["crb_max_modes"] = crb_max_modes
    if counts is not None:
        records = rebin(counts, rebin_j) if rebin_j != 1 else list(counts)
        for idx, r in enumerate(records):
            if r.singles < 1:
                raise ValueError(
                    f"mode {idx} has no singles; rebin more coarsely"
                )
        ts = np.array([r.coincidences / r.singles for r in records])
        budgets = _record_budgets(records, eta, nbar, budget_mode)
        rows = compare_modes(ts, budgets, **kwargs)
    else:
        prof = rebin(profile, rebin_j) if rebin_j != 1 else profile
        if n_tot is None:
            raise ValueError("profile comparison needs n_tot")
        budget = ResourceBudget.from_total(n_tot, eta=eta, nbar=nbar)
        rows = compare_modes(prof.transmittivities, budget, **kwargs)
    meta = _base_meta(
        source=source, modes=len(rows), rebin=int(rebin_j), eta=float(eta),
        nbar=float(nbar), n_tot=None if n_tot is None else float(n_tot),
        n_pairs=None if n_pairs is None else int(n_pairs),
        window_s=float(window_s) if source == "synthetic" else None,
        budget_mode=budget_mode if counts is not None else "fixed-n_tot",
        with_crb=bool(with_crb), eps=float(eps) if with_crb else None,
        tol=float(tol), seed=None if seed is None else int(seed),
        rng=RNG_ALGORITHM if source == "synthetic" else None,
    )
    return {"meta": meta, "rows": [_row_dict(r) for r in rows]}


def estimate_report(records, rebin_j=1):
    """Heralded estimates alone: the quantum columns of the report schema."""
    records = rebin(records, rebin_j) if rebin_j != 1 else list(records)
    rows = []
    for k, r in enumerate(records):
        t_hat, var = klyshko_estimate(r.coincidences, r.singles)
        flags = ("degenerate_t",) if t_hat in (0.0, 1.0) else ()
        rows.append(ComparisonRow(k=k, t=t_hat, var_quantum=var,
                                  var_classical_prop=None, flags=flags))
    meta = _base_meta(source="counts", modes=len(rows), rebin=int(rebin_j))
    return {"meta": meta, "rows": [_row_dict(r) for r in rows]}


def classical_report(profile, n_tot, nbar=1.0, rebin_j=1, eta=0.35):
    """Propagated classical variances for a known profile at a fixed budget."""
    prof = rebin(profile, rebin_j) if rebin_j != 1 else profile
    budget = ResourceBudget.from_total(n_tot, eta=eta, nbar=nbar)
    rows = compare_modes(prof.transmittivities, budget)
    rows = [
        ComparisonRow(k=r.k, t=r.t, var_quantum=None,
                      var_classical_prop=r.var_classical_prop, flags=r.flags)
        for r in rows
    ]
    meta = _base_meta(source="profile", modes=len(rows), rebin=int(rebin_j),
                      eta=float(eta), nbar=float(nbar), n_tot=float(n_tot),
                      budget_mode="fixed-n_tot")
    return {"meta": meta, "rows": [_row_dict(r) for r in rows]}


def crb_report(profile, n_tot, nbar=1.0, rebin_j=1, eta=0.35, eps=1e-7,
               tol=1e-12, crb_max_modes=None):
    """Fisher information and Cramer-Rao bounds for a known profile."""
    prof = rebin(profile, rebin_j) if rebin_j != 1 else profile
    ts = prof.transmittivities
    limit = 12 if crb_max_modes is None else crb_max_modes
    if ts.size > limit:
        raise ValueError(
            f"Cramer-Rao path is guarded to {limit} modes, got {ts.size}; rebin first"
        )
    budget = ResourceBudget.from_total(n_tot, eta=eta, nbar=nbar)
    trunc = TruncationSpec(tol=tol)
    rows = []
    for k in range(ts.size):
        fisher, variation, tail = fisher_hellinger_sweep(
            k, ts, nbar, eps=eps, trunc=trunc
        )
        flags = []
        if ts[k] in (0.0, 1.0):
            flags.append("degenerate_t")
        if variation > EPS_STABILITY_RTOL:
            flags.append("eps_unstable")
        rows.append(
            ComparisonRow(k=k, t=float(ts[k]), var_quantum=None,
                          var_classical_prop=None,
                          var_classical_crb=crb_bound(fisher, budget.repetitions),
                          fisher=fisher, flags=tuple(flags), tail_mass=tail,
                          eps_used=eps, eps_variation=variation)
        )
    meta = _base_meta(source="profile", modes=len(rows), rebin=int(rebin_j),
                      eta=float(eta), nbar=float(nbar), n_tot=float(n_tot),
                      budget_mode="fixed-n_tot", with_crb=True, eps=float(eps),
                      tol=float(tol))
    return {"meta": meta, "rows": [_row_dict(r) for r in rows]}


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return _fmt(float(value))


def render_report_csv(report):
    lines = [f"# {key} = {value}" for key, value in report["meta"].items()]
    lines.append(",".join(REPORT_COLUMNS))
    for row in report["rows"]:
        lines.append(",".join(_csv_cell(row[col]) for col in REPORT_COLUMNS))
    return "\n".join(lines) + "\n"


def _jsonable(value):
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def render_report_json(report):
    clean = {
        "meta": {k: _jsonable(v) for k, v in report["meta"].items()},
        "rows": [{k: _jsonable(v) for k, v in row.items()} for row in report["rows"]],
    }
    return json.dumps(clean, indent=2) + "\n"


def write_report(report, path, fmt="csv"):
    if fmt == "csv":
        _atomic_write(path, render_report_csv(report))
    elif fmt == "json":
        _atomic_write(path, render_report_json(report))
    else:
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
