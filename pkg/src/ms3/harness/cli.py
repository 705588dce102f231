"""Command-line entry point: ``ms3 <subcommand>``."""

from __future__ import annotations

import argparse
import hashlib
import io
import math
import sys

import numpy as np

from ..aliasing import no_overlap_probability_sqrt, overlap_probability, select_primes
from ..bounds import BoundSpec, FadingSpec
from ..detection import threshold_for_pfa
from ..exceptions import DomainError
from ..specfun import SeriesControl, reg_upper_gamma
from .adc import adc_table
from .canned import FIGURES, SCALES, canned_configs
from .config import load_config
from .experiment import run_trials
from .overlap import simulate_overlap

CSV_VERSION = "ms3-csv/1"


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _header(out, config_hash, items):
    out.write(f"# {CSV_VERSION} config_hash={config_hash}\n")
    for key, value in items:
        out.write(f"# {key}={value}\n")


def _table(out, columns, rows):
    out.write(",".join(columns) + "\n")
    for row in rows:
        out.write(",".join(_fmt(x) for x in row) + "\n")


def _args_hash(items):
    text = "\n".join(f"{k}={v}" for k, v in items)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _curve_rows(curve, label=None):
    cols = curve.columns()
    names = list(cols)
    data = [np.asarray(cols[n]) for n in names]
    rows = []
    for g in range(curve.lam.size):
        row = [d[g] for d in data]
        rows.append(([label] if label is not None else []) + row)
    return (["curve"] if label is not None else []) + names, rows


def _parse_sets(pairs):
    out = {}
    for p in pairs or []:
        if "=" not in p:
            raise DomainError(f"--set expects key=value, got {p!r}")
        k, v = p.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def cmd_simulate(args, out):
    overrides = _parse_sets(args.set)
    if args.trials is not None:
        overrides["run.trials"] = str(args.trials)
    if args.seed is not None:
        overrides["run.seed"] = str(args.seed)
    cfg = load_config(args.config, overrides)
    curve = run_trials(cfg)
    _header(out, cfg.config_hash(), cfg.items())
    cols, rows = _curve_rows(curve)
    _table(out, cols, rows)


def _grid(args, dof_half):
    if args.lambdas:
        return np.array(sorted(float(x) for x in args.lambdas.split(",")))
    alphas = sorted(float(x) for x in args.alphas.split(","))
    return np.array(sorted(threshold_for_pfa(a, dof_half, 1) for a in alphas))


def cmd_bounds(args, out):
    if args.psi is not None:
        psi = args.psi
        mean_count = psi * args.N / 2.0
    else:
        plan = select_primes(args.N, args.v, args.a)
        psi, mean_count = plan.psi, plan.mean_count
    dof = args.J * args.v
    lam = _grid(args, dof)
    # per-segment SNR in dB -> total bin SNR over J segments
    total_db = args.snr_db + 10.0 * math.log10(args.J) if args.snr_units == "per-segment" else args.snr_db
    if args.fading == "lognormal":
        fading = FadingSpec.lognormal(total_db, args.sigma_db)
    else:
        fading = FadingSpec(args.fading, 10.0 ** (total_db / 10.0))
    ctl = SeriesControl(max_terms=args.max_terms, abs_tol=args.tol)
    s = min(args.s, args.v)
    upper = BoundSpec(s, dof, psi, fading, ctl).evaluate(lam)
    lower = BoundSpec(args.v, dof, psi, fading, ctl).evaluate(lam)
    items = [
        ("bounds.J", args.J), ("bounds.v", args.v), ("bounds.N", args.N), ("bounds.psi", psi),
        ("bounds.mean_count", mean_count), ("bounds.s", args.s), ("fading.kind", args.fading),
        ("fading.snr_db", args.snr_db), ("fading.snr_units", args.snr_units),
        ("fading.sigma_db", args.sigma_db if args.fading == "lognormal" else ""),
        ("series.max_terms", args.max_terms), ("series.abs_tol", args.tol),
    ]
    _header(out, _args_hash(items), items)
    pf_lo = np.atleast_1d(reg_upper_gamma(dof, lam / 2.0))
    up, lo = np.atleast_1d(upper.value), np.atleast_1d(lower.value)
    err = max(upper.truncation_bound, lower.truncation_bound)
    terms = max(upper.terms, lower.terms)
    _table(
        out,
        ["lambda", "pf_lower", "pf_upper", "pd_lower", "trunc_err", "terms_used"],
        [(lam[g], pf_lo[g], up[g], lo[g], err, terms) for g in range(lam.size)],
    )


def cmd_primes(args, out):
    plan = select_primes(args.N, args.v, args.a)
    rates = plan.rates(args.T, args.J)
    items = [("plan.N", args.N), ("plan.v", args.v), ("plan.a", args.a), ("scenario.T", args.T), ("scenario.J", args.J)]
    _header(out, _args_hash(items), items)
    out.write(f"# mean_compression={plan.compression!r} psi={plan.psi!r}\n")
    _table(
        out,
        ["channel", "M", "rate_hz", "compression"],
        [(i + 1, m, float(f), m / args.N) for i, (m, f) in enumerate(zip(plan.sample_counts, rates))],
    )


def cmd_overlap(args, out):
    items = [("overlap.N", args.N), ("overlap.s", args.s), ("overlap.M", args.M), ("overlap.trials", args.trials), ("run.seed", args.seed)]
    _header(out, _args_hash(items), items)
    formula = overlap_probability(args.N, args.s, args.M)
    sqrt_form = 1.0 - no_overlap_probability_sqrt(args.N, args.s)
    row = [args.N, args.s, args.M, formula, sqrt_form]
    cols = ["N", "s", "M", "overlap_formula", "overlap_sqrtN_form"]
    if args.trials:
        rng = np.random.default_rng(args.seed)
        p, se = simulate_overlap(args.N, args.s, args.M, args.trials, rng)
        row += [p, se]
        cols += ["overlap_mc", "overlap_mc_stderr"]
    _table(out, cols, [row])


def cmd_adc_table(args, out):
    items = [("adc.total_bandwidth", args.W)]
    _header(out, _args_hash(items), items)
    rows = adc_table(total_bandwidth=args.W)
    _table(
        out,
        ["v", "average_rate_mhz", "ms3_adcs", "type1_adcs", "type2_adcs", "reduction_type1", "reduction_type2"],
        [(r.channels, r.average_rate / 1e6, r.ms3_adcs, r.type1_adcs, r.type2_adcs, r.reduction_type1, r.reduction_type2) for r in rows],
    )


def cmd_reproduce(args, out):
    if args.figure == "table1":
        return cmd_adc_table(argparse.Namespace(W=10e9), out)
    configs = canned_configs(args.figure, args.scale, args.trials, args.seed)
    items = [("reproduce.figure", args.figure), ("reproduce.scale", args.scale)]
    for label, cfg in configs:
        items += [(f"{label}:{k}", v) for k, v in cfg.items()]
    _header(out, _args_hash(items), items)
    header_done = False
    for label, cfg in configs:
        curve = run_trials(cfg)
        cols, rows = _curve_rows(curve, label)
        if not header_done:
            columns = cols
            out.write(",".join(columns) + "\n")
            header_done = True
        data = curve.columns()
        for g in range(curve.lam.size):
            out.write(",".join(_fmt(x) for x in [label] + [data[c][g] if c in data else "" for c in columns[1:]]) + "\n")


def build_parser():
    p = argparse.ArgumentParser(prog="ms3", description="Multi-rate sub-Nyquist cooperative spectrum sensing toolkit.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", "-o", help="write CSV here instead of stdout")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo ROC from a config file")
    s.add_argument("config")
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bounds", parents=[common], help="analytic false-alarm and detection bounds")
    b.add_argument("--J", type=int, default=5)
    b.add_argument("--v", type=int, default=22)
    b.add_argument("--N", type=int, default=80000)
    b.add_argument("--a", type=float, default=5.7, help="first prime near a*sqrt(N)")
    b.add_argument("--psi", type=float, help="use this psi instead of building a plan")
    b.add_argument("--s", type=int, default=22, help="support size for the false-alarm upper bound")
    b.add_argument("--fading", choices=("none", "rayleigh", "lognormal"), default="none")
    b.add_argument("--snr-db", type=float, default=5.0)
    b.add_argument("--snr-units", choices=("per-segment", "total"), default="per-segment")
    b.add_argument("--sigma-db", type=float, default=4.0)
    b.add_argument("--alphas", default="0.001,0.01,0.05,0.1,0.2,0.5,0.9")
    b.add_argument("--lambdas")
    b.add_argument("--max-terms", type=int, default=16384)
    b.add_argument("--tol", type=float, default=1e-12)
    b.set_defaults(func=cmd_bounds)

    r = sub.add_parser("primes", parents=[common], help="consecutive-prime channel plan")
    r.add_argument("--N", type=int, default=80000)
    r.add_argument("--v", type=int, default=22)
    r.add_argument("--a", type=float, default=5.7)
    r.add_argument("--T", type=float, default=20e-6)
    r.add_argument("--J", type=int, default=5)
    r.set_defaults(func=cmd_primes)

    o = sub.add_parser("overlap", parents=[common], help="folded-bin overlap probability")
    o.add_argument("--N", type=int, required=True)
    o.add_argument("--s", type=int, required=True)
    o.add_argument("--M", type=int, required=True)
    o.add_argument("--trials", type=int, default=0, help="Monte Carlo trials (0 skips)")
    o.add_argument("--seed", type=int, default=0)
    o.set_defaults(func=cmd_overlap)

    a = sub.add_parser("adc-table", parents=[common], help="ADC counts of sub-Nyquist vs Nyquist networks")
    a.add_argument("--W", type=float, default=10e9)
    a.set_defaults(func=cmd_adc_table)

    f = sub.add_parser("reproduce", parents=[common], help="canned figure configurations")
    f.add_argument("figure", choices=FIGURES)
    f.add_argument("--scale", choices=SCALES, default="desk")
    f.add_argument("--trials", type=int)
    f.add_argument("--seed", type=int, default=0)
    f.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    buf = io.StringIO()
    try:
        args.func(args, buf)
    except DomainError as exc:
        print(f"ms3: error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


if __name__ == "__main__":
    sys.exit(main())
