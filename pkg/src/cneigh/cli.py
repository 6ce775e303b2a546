"""Command-line front end: point estimates, intervals and the experiment harness.

Exit codes: 0 success, 2 usage or input error, 3 I/O error. All randomness
sits behind --seed; when no seed is given one is drawn from system entropy
and echoed so the run can be reproduced.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import os
import secrets
import sys

import numpy as np

from cneigh.geometry import DesignSample, SamplingMeasure, unit_cube
from cneigh.infer import SubsampleConfig, clt_ci, subsample_pi
from cneigh.integrate import (
    IntegrandEvaluations,
    integrate_control,
    integrate_control_threeterm,
    integrate_mean,
    integrate_trapezoid,
)
from cneigh.regularity import Curve, CurveSet, estimate_local_regularity, select_beta
from cneigh.simulate import Scenario, run_experiment, summarize, write_csv
from cneigh.weights import control_weights_nn, control_weights_unbiased


class InputError(Exception):
    """User-facing input problem; maps to exit code 2."""


def _read_table(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file")
        header = [h.strip() for h in header]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise InputError(f"{path}:{lineno}: non-numeric field")
        if not rows:
            raise InputError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(data)):
        bad = int(np.argwhere(~np.isfinite(data).all(axis=1))[0, 0]) + 2
        raise InputError(f"{path}:{bad}: non-finite value")
    return header, data


def _point_columns(header):
    cols = []
    d = 0
    while f"t{d + 1}" in header:
        cols.append(header.index(f"t{d + 1}"))
        d += 1
    if d == 0:
        raise InputError("input needs coordinate columns t1..td")
    return cols


def _parse_density(spec):
    if spec is None or spec == "uniform":
        return SamplingMeasure.uniform()
    if spec.startswith("linear:"):
        try:
            b = float(spec.split(":", 1)[1])
        except ValueError:
            raise InputError(f"bad density spec {spec!r}")
        try:
            return SamplingMeasure.linear(b)
        except ValueError as exc:
            raise InputError(str(exc))
    # otherwise a CSV with columns t, density
    header, data = _read_table(spec)
    if "t" not in header or "density" not in header:
        raise InputError(f"{spec}: tabulated density needs columns t, density")
    try:
        return SamplingMeasure.tabulated(
            data[:, header.index("t")], data[:, header.index("density")]
        )
    except ValueError as exc:
        raise InputError(f"{spec}: {exc}")


def _load_evaluations(args, sigma_col=None):
    header, data = _read_table(args.input)
    cols = _point_columns(header)
    d = len(cols)
    if getattr(args, "dim", None) is not None and args.dim != d:
        raise InputError(f"--dim {args.dim} conflicts with {d} coordinate column(s)")
    if "value" not in header:
        raise InputError("input needs a value column")
    measure = _parse_density(getattr(args, "density", None))
    if measure.kind != "uniform" and d != 1:
        raise InputError("non-uniform densities are univariate")
    pts = data[:, cols]
    try:
        sample = DesignSample(unit_cube(d), pts, measure)
    except ValueError as exc:
        raise InputError(str(exc))
    values = data[:, header.index("value")]
    if sigma_col is not None:
        if sigma_col not in header:
            raise InputError(f"missing noise column {sigma_col!r}")
        scale = data[:, header.index(sigma_col)]
        if np.any(scale < 0):
            raise InputError("noise scales must be nonnegative")
        return IntegrandEvaluations(sample, values, noisy=True, noise_scale=scale)
    return IntegrandEvaluations(sample, values)


def _estimate(ev, method):
    d = ev.sample.domain.d
    if method == "nn":
        if d == 1:
            return integrate_control(ev, control_weights_unbiased(ev.sample)), "unbiased-loo"
        return integrate_control(ev, control_weights_nn(ev.sample)), "nn-variant"
    if method == "nn-fast":
        return integrate_control_threeterm(ev), "nn-variant-threeterm"
    if method == "mean":
        return integrate_mean(ev), "sample-mean"
    if method == "trapezoid":
        if d != 1:
            raise InputError("trapezoid requires univariate domain")
        return integrate_trapezoid(ev), "trapezoid"
    raise InputError(f"unknown method {method!r}")


def cmd_integrate(args):
    ev = _load_evaluations(args)
    estimate, rule = _estimate(ev, args.method)
    print(f"estimate {estimate!r}")
    print(f"method {args.method} ({rule})")
    print(f"points {ev.M} dim {ev.sample.domain.d}")
    return 0


def _resolve_seed(args):
    if args.seed is not None:
        return args.seed
    seed = secrets.randbits(32)
    print(f"seed {seed}")
    return seed


def cmd_interval(args):
    if args.mode == "pi" and args.sigma_col:
        raise InputError("--sigma-col applies to ci mode only")
    if args.mode == "ci" and not args.sigma_col:
        raise InputError("ci mode requires --sigma-col")
    if not 0.0 < args.level < 1.0:
        raise InputError("--level must lie in (0, 1)")
    delta = 1.0 - args.level
    seed = _resolve_seed(args)

    if args.mode == "ci":
        ev = _load_evaluations(args, sigma_col=args.sigma_col)
        w = (
            control_weights_unbiased(ev.sample)
            if ev.sample.domain.d == 1
            else control_weights_nn(ev.sample)
        )
        iv = clt_ci(ev, w, delta, mode=args.ci_mode)
    else:
        ev = _load_evaluations(args)
        if args.beta is not None and args.beta_auto:
            raise InputError("--beta and --beta-auto are mutually exclusive")
        if args.beta is not None:
            beta = args.beta
        elif args.beta_auto:
            if ev.sample.domain.d != 1:
                raise InputError("--beta-auto needs a univariate input curve")
            reg = estimate_local_regularity(CurveSet([Curve(ev.sample, ev.values)]))
            beta = select_beta(reg.H_min, ev.M)
            print(f"beta-auto {beta!r} (H_min {reg.H_min!r})")
        else:
            raise InputError("pi mode needs --beta or --beta-auto")
        if args.mstar is not None and args.mstar >= ev.M:
            raise InputError(f"--mstar must be below the point count {ev.M}")
        try:
            cfg = SubsampleConfig(beta=beta, B=args.B, mstar=args.mstar, seed=seed)
            iv = subsample_pi(ev, "auto", cfg, delta)
        except ValueError as exc:
            raise InputError(str(exc))

    print(f"point {iv.point!r}")
    print(f"lower {iv.lower!r}")
    print(f"upper {iv.upper!r}")
    print(f"method {iv.method} level {args.level}")
    return 0


SCENARIO_KEYS = {
    "id": str, "dim": int, "m": int, "nu": float, "gamma1": float, "gamma2": float,
    "b": float, "sigma": float, "methods": str, "reps": int, "big_b": int,
    "level": float, "beta": float, "mstar": int, "seed": int, "p_slope": float,
    "k": int, "k1": int, "k2": int, "score_j": int, "timing": bool,
}
# config-file spelling -> Scenario field
KEY_TO_FIELD = {
    "id": "scenario_id", "m": "M", "big_b": "B", "k": "K", "k1": "K1", "k2": "K2",
}


def load_scenario(path, overrides=None):
    """Parse a [scenario] INI section with CNEIGH_ env overrides on top."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise InputError(f"{path}: {exc}")
    if "scenario" not in parser:
        raise InputError(f"{path}: missing [scenario] section")
    raw = dict(parser["scenario"])
    for key in raw:
        if key not in SCENARIO_KEYS:
            raise InputError(f"{path}: unknown scenario key {key!r}")
    for key in SCENARIO_KEYS:
        env = os.environ.get(f"CNEIGH_{key.upper()}")
        if env is not None:
            raw[key] = env
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})

    kwargs = {}
    for key, val in raw.items():
        typ = SCENARIO_KEYS[key]
        field = KEY_TO_FIELD.get(key, key)
        try:
            if typ is bool:
                kwargs[field] = str(val).strip().lower() in ("1", "true", "yes", "on")
            elif key == "methods":
                kwargs[field] = tuple(
                    m.strip() for m in str(val).split(",") if m.strip()
                )
            else:
                kwargs[field] = typ(val)
        except (TypeError, ValueError):
            raise InputError(f"{path}: bad value for {key}: {val!r}")
    try:
        return Scenario(**kwargs)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}")


def cmd_bench(args):
    overrides = {"reps": args.reps, "seed": args.seed}
    scn = load_scenario(args.config, overrides)
    records = list(run_experiment(scn, jobs=args.jobs))
    out = args.out or f"{scn.scenario_id}.csv"
    write_csv(records, out)
    print(f"wrote {len(records)} records to {out}")
    if records:
        print(f"{'method':10s} {'coverage':>9s} {'mean-len':>10s} {'med-logratio':>13s}")
        for method, stats in summarize(records).items():
            print(
                f"{method:10s} {stats['coverage']:9.3f} {stats['mean_length']:10.4f} "
                f"{stats['median_log_ratio']:13.4f}"
            )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cneigh",
        description="Nearest-neighbor control-variate integration toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("integrate", help="point estimate of the integral from a CSV")
    p.add_argument("--input", required=True, help="CSV with columns t1..td, value")
    p.add_argument("--method", default="nn",
                   choices=["nn", "nn-fast", "mean", "trapezoid"],
                   help="integration rule (nn picks the dimension default)")
    p.add_argument("--density", help="uniform (default), linear:<b>, or a CSV path")
    p.add_argument("--dim", type=int, help="expected dimension (validated)")
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("interval", help="prediction or confidence interval")
    p.add_argument("--input", required=True, help="CSV with columns t1..td, value[, sigma]")
    p.add_argument("--mode", required=True, choices=["pi", "ci"])
    p.add_argument("--beta", type=float, help="Holder exponent for pi mode")
    p.add_argument("--beta-auto", action="store_true",
                   help="estimate beta from the input curve")
    p.add_argument("--B", type=int, default=1000, help="subsample replicates")
    p.add_argument("--mstar", type=int, help="subsample size (default M//2)")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--sigma-col", help="noise-scale column (ci mode)")
    p.add_argument("--ci-mode", default="conditional", choices=["conditional", "limit-1d"])
    p.add_argument("--density", help="uniform (default), linear:<b>, or a CSV path")
    p.add_argument("--dim", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_interval)

    p = sub.add_parser("bench", help="run an experiment scenario to CSV")
    p.add_argument("--config", required=True, help="INI file with a [scenario] section")
    p.add_argument("--reps", type=int, help="override replication count")
    p.add_argument("--seed", type=int, help="override scenario seed")
    p.add_argument("--out", help="output CSV path (default <id>.csv)")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="parallel workers (records stay in replication order)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
