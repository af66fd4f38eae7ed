"""Command-line surface: ghostspec <subcommand>.

Subcommands: profile (emit a synthetic supergaussian), estimate (counts CSV
to heralded estimates), classical (profile to propagation variances), crb
(profile to Fisher/Cramer-Rao, mode-count guarded), simulate (either
scheme), compare (full pipeline).

A ``--config`` file holds flat ``key = value`` lines using the long flag
names; command-line flags win on conflict.
"""

import argparse
import sys

from .joint_pmf import TruncationError
from .montecarlo import RunConfig, empirical_stats, simulate_classical_run, \
    simulate_quantum_run
from .workbench import (
    CountRecord,
    classical_report,
    crb_report,
    estimate_report,
    load_counts,
    load_profile,
    render_report_csv,
    render_report_json,
    run_comparison,
    save_counts,
    save_profile,
    supergaussian_profile,
    uniform_grid,
    write_report,
    _atomic_write,
    _fmt,
)

DEFAULTS = {
    "modes": 100,
    "rebin": 1,
    "nbar": 1.0,
    "eta": 0.35,
    "eps": 1e-7,
    "tol": 1e-12,
    "format": "csv",
    "center": 810.0,
    "fwhm": 7.3,
    "order": 4,
    "peak_t": 0.8,
    "span": 33.0,
    "window": 1.0,
    "budget_mode": "per-mode",
    "scheme": "quantum",
}

def _cast_bool(text):
    return text.lower() in ("1", "true", "yes", "on")


_CASTS = {
    "modes": int, "rebin": int, "order": int, "seed": int,
    "nbar": float, "eta": float, "eps": float, "tol": float,
    "center": float, "fwhm": float, "peak_t": float, "span": float,
    "spacing": float, "window": float, "ntot": float, "pairs": float,
    "repetitions": float, "format": str, "budget_mode": str, "scheme": str,
    "out": str, "records": str, "with_crb": _cast_bool,
}


def load_config(path):
    values = {}
    with open(path) as fh:
        for i, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {i}: expected 'key = value'")
            key, _, val = line.partition("=")
            key = key.strip().replace("-", "_")
            values[key] = val.strip().strip("\"'")
    return values


class _Options:
    """Layered option lookup: command line, then config file, then defaults."""

    def __init__(self, args, config):
        self.args = args
        self.config = config

    def get(self, name, required=False):
        value = getattr(self.args, name, None)
        if value is None and name in self.config:
            cast = _CASTS.get(name, str)
            value = cast(self.config[name])
        if value is None:
            value = DEFAULTS.get(name)
        if value is None and required:
            raise ValueError(f"missing required option --{name.replace('_', '-')}")
        return value


def _add_output(p):
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=["csv", "json"], help="report format")


def _emit_report(report, opts):
    fmt = opts.get("format")
    out = opts.get("out")
    if out:
        write_report(report, out, fmt)
    else:
        text = render_report_csv(report) if fmt == "csv" else render_report_json(report)
        sys.stdout.write(text)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ghostspec",
        description="Quantum vs. classical ghost-spectrometry precision toolkit",
    )
    parser.add_argument("--config", help="flat key = value option file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="emit a synthetic supergaussian profile")
    p.add_argument("-K", "--modes", type=int, help="number of grid points")
    p.add_argument("--center", type=float, help="center wavelength (nm)")
    p.add_argument("--fwhm", type=float, help="full width at half maximum (nm)")
    p.add_argument("--order", type=int, help="supergaussian order")
    p.add_argument("--peak-t", dest="peak_t", type=float, help="peak transmittivity")
    p.add_argument("--span", type=float, help="grid span (nm)")
    p.add_argument("--spacing", type=float, help="grid spacing (nm), overrides span")
    p.add_argument("--out", help="output path (default: stdout)")

    p = sub.add_parser("estimate", help="heralded estimates from a counts CSV")
    p.add_argument("counts", help="counts CSV path")
    p.add_argument("--rebin", type=int, help="points per rebinned mode")
    _add_output(p)

    p = sub.add_parser("classical", help="propagation variances for a profile")
    p.add_argument("profile", help="profile CSV path")
    p.add_argument("--nbar", type=float, help="mean photons per mode per repetition")
    p.add_argument("--ntot", type=float, help="total photons per mode")
    p.add_argument("--eta", type=float, help="analyzer detection efficiency")
    p.add_argument("--rebin", type=int, help="points per rebinned mode")
    _add_output(p)

    p = sub.add_parser("crb", help="Fisher information and Cramer-Rao bounds")
    p.add_argument("profile", help="profile CSV path")
    p.add_argument("--nbar", type=float)
    p.add_argument("--ntot", type=float, help="total photons per mode")
    p.add_argument("--eta", type=float)
    p.add_argument("--eps", type=float, help="Hellinger perturbation")
    p.add_argument("--tol", type=float, help="pmf tail tolerance")
    p.add_argument("--rebin", type=int)
    p.add_argument("--max-modes", dest="max_modes", type=int,
                   help="override the mode-count guard (default 12)")
    _add_output(p)

    p = sub.add_parser("simulate", help="simulate either scheme")
    p.add_argument("profile", help="profile CSV path")
    p.add_argument("--scheme", choices=["quantum", "classical"])
    p.add_argument("--seed", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--nbar", type=float)
    p.add_argument("--pairs", type=float, help="photon pairs (quantum scheme)")
    p.add_argument("-M", "--repetitions", type=float,
                   help="repetitions (classical scheme)")
    p.add_argument("--window", type=float, help="acquisition window (s) for counts")
    p.add_argument("--records", help="raw (repetition,k,n1,n2) CSV dump path")
    _add_output(p)

    p = sub.add_parser("compare", help="full quantum/classical comparison")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--counts", help="counts CSV path")
    src.add_argument("--profile", help="profile CSV path")
    p.add_argument("--ntot", type=float, help="budget for profile comparisons")
    p.add_argument("--pairs", type=float, help="synthesize counts from the profile")
    p.add_argument("--seed", type=int)
    p.add_argument("--nbar", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--rebin", type=int)
    p.add_argument("--with-crb", dest="with_crb", action="store_true", default=None)
    p.add_argument("--eps", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--window", type=float)
    p.add_argument("--budget-mode", dest="budget_mode",
                   choices=["per-mode", "shared"])
    _add_output(p)

    return parser


def _cmd_profile(opts):
    n = int(opts.get("modes"))
    grid = uniform_grid(
        center_nm=opts.get("center"),
        n_points=n,
        spacing_nm=opts.get("spacing"),
        span_nm=opts.get("span"),
    )
    prof = supergaussian_profile(
        opts.get("center"), opts.get("fwhm"), opts.get("order"),
        opts.get("peak_t"), grid,
    )
    out = opts.get("out")
    if out:
        save_profile(prof, out)
    else:
        sys.stdout.write("wavelength_nm,transmittivity\n")
        for wl, t in zip(prof.wavelengths_nm, prof.transmittivities):
            sys.stdout.write(f"{_fmt(wl)},{_fmt(t)}\n")
    return 0


def _cmd_estimate(opts):
    records = load_counts(opts.args.counts)
    report = estimate_report(records, rebin_j=int(opts.get("rebin")))
    _emit_report(report, opts)
    return 0


def _cmd_classical(opts):
    prof = load_profile(opts.args.profile)
    report = classical_report(
        prof, n_tot=opts.get("ntot", required=True), nbar=opts.get("nbar"),
        rebin_j=int(opts.get("rebin")), eta=opts.get("eta"),
    )
    _emit_report(report, opts)
    return 0


def _cmd_crb(opts):
    prof = load_profile(opts.args.profile)
    report = crb_report(
        prof, n_tot=opts.get("ntot", required=True), nbar=opts.get("nbar"),
        rebin_j=int(opts.get("rebin")), eta=opts.get("eta"),
        eps=opts.get("eps"), tol=opts.get("tol"),
        crb_max_modes=getattr(opts.args, "max_modes", None),
    )
    _emit_report(report, opts)
    return 0


def _cmd_simulate(opts):
    prof = load_profile(opts.args.profile)
    scheme = opts.get("scheme")
    seed = opts.get("seed")
    seed = 0 if seed is None else int(seed)
    if scheme == "quantum":
        pairs = opts.get("pairs", required=True)
        summary = simulate_quantum_run(
            RunConfig(ts=prof.transmittivities, nbar=opts.get("nbar"),
                      eta=opts.get("eta"), n_pairs=int(pairs), seed=seed)
        )
        window = opts.get("window")
        records = [
            CountRecord(wl, int(c), int(n), window)
            for wl, c, n in zip(prof.wavelengths_nm, summary.coincidences,
                                summary.singles)
        ]
        out = opts.get("out")
        if out:
            save_counts(records, out)
        else:
            sys.stdout.write("wavelength_nm,coincidences,singles,window_s\n")
            for r in records:
                sys.stdout.write(
                    f"{_fmt(r.wavelength_nm)},{r.coincidences},{r.singles},"
                    f"{_fmt(r.window_s)}\n"
                )
        return 0
    reps = opts.get("repetitions", required=True)
    summary = simulate_classical_run(
        RunConfig(ts=prof.transmittivities, nbar=opts.get("nbar"),
                  repetitions=int(reps), seed=seed),
        records_path=opts.get("records"),
    )
    stats = empirical_stats(summary)
    import json as _json

    payload = {
        "meta": {
            "tool": "ghostspec", "scheme": "classical", "seed": seed,
            "repetitions": summary.repetitions, "rng": summary.rng_algorithm,
            "nbar": float(opts.get("nbar")),
        },
        "modes": [
            {
                "k": k, "mean1": s.mean1, "mean2": s.mean2, "c12": s.c12,
                "c12_se": s.c12_se, "m22": s.m22, "var_c12": s.var_c12,
            }
            for k, s in enumerate(stats)
        ],
    }
    text = _json.dumps(payload, indent=2) + "\n"
    out = opts.get("out")
    if out:
        _atomic_write(out, text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_compare(opts):
    args = opts.args
    pairs = opts.get("pairs")
    seed = opts.get("seed")
    if pairs is not None and seed is None:
        seed = 0
    kwargs = dict(
        eta=opts.get("eta"), nbar=opts.get("nbar"), n_tot=opts.get("ntot"),
        rebin_j=int(opts.get("rebin")), with_crb=bool(opts.get("with_crb")),
        eps=opts.get("eps"), tol=opts.get("tol"),
        budget_mode=opts.get("budget_mode"),
        window_s=opts.get("window"),
    )
    if args.counts:
        report = run_comparison(counts=load_counts(args.counts), **kwargs)
    else:
        prof = load_profile(args.profile)
        report = run_comparison(
            profile=prof, seed=None if seed is None else int(seed),
            n_pairs=None if pairs is None else int(pairs), **kwargs,
        )
    _emit_report(report, opts)
    return 0


_HANDLERS = {
    "profile": _cmd_profile,
    "estimate": _cmd_estimate,
    "classical": _cmd_classical,
    "crb": _cmd_crb,
    "simulate": _cmd_simulate,
    "compare": _cmd_compare,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    config = load_config(args.config) if args.config else {}
    opts = _Options(args, config)
    try:
        return _HANDLERS[args.command](opts)
    except (ValueError, TruncationError, OSError) as exc:
        print(f"ghostspec: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
