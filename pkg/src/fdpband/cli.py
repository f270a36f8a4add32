"""Command-line interface.

Score data travels as TSV (either target<TAB>decoy pairs or label<TAB>score
lines), procedure reports as versioned JSON, and quantile tables in the
line-oriented text format of mc_quantiles.  All randomness is driven by an
explicit --seed (default 1729), so identical invocations produce identical
bytes.  Exit codes: 0 success, 2 usage error, 3 data error, 4 configuration
error (missing table coverage or bad table files).
"""

import argparse
import json
import sys

import numpy as np

from ._util import DEFAULT_SEED, ConfigurationError, DomainError
from .bands import BandSpec, bound_tdc_fdp, run_fdp_band, run_tdc
from .core import DiscoveryReport, build_sequence, compete
from .harness import BOUND_METHODS, PROCEDURES, GeneratorSpec, TableSet, run_evaluation
from .mc_quantiles import (DEFAULT_GAMMAS, StandardizedQuantileTable,
                           UniformQuantileTable, build_tables, load_table, save_table)
from .simgen import (SpectrumIdParams, default_location_scale_pool,
                     gen_generic_null, gen_spectrum_id, load_pool)
from .stepdown import run_fdp_sd, run_fdp_sd_randomized

REPORT_SCHEMA = "fdpband-report v1"


class _UsageError(Exception):
    pass


def _read_tsv_rows(path):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise DomainError(f"{path}:{lineno}: expected two tab-separated fields")
            try:
                rows.append((float(fields[0]), float(fields[1])))
            except ValueError as exc:
                raise DomainError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise DomainError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64)


def _looks_labeled(rows):
    return bool(np.all(np.isin(rows[:, 0], (-1.0, 1.0))))


def _load_sequence(path, fmt, tie_policy, rng):
    """Read either input layout and return the sorted sequence."""
    rows = _read_tsv_rows(path)
    if fmt == "auto":
        fmt = "labeled" if _looks_labeled(rows) else "pairs"
    if fmt == "labeled":
        labels = rows[:, 0].astype(np.int64)
        if not np.all(np.isin(labels, (-1, 1))):
            raise DomainError(f"{path}: labels must be +1 or -1")
        from .core import _build_sequence_arrays
        return _build_sequence_arrays(rows[:, 1], labels, rng)
    labeled, idx = compete(rows, tie_policy, rng)
    return build_sequence(labeled, rng, orig_index=np.asarray(idx))


def _report_json(report, extra=None):
    payload = {
        "schema": REPORT_SCHEMA,
        "procedure": report.procedure_id,
        "alpha": report.alpha,
        "gamma": report.gamma,
        "k": report.k,
        "num_targets": report.num_targets,
        "num_decoys": report.num_decoys,
        "bound": report.bound,
        "reported_indices": np.asarray(report.reported_indices).tolist(),
        "original_ids": (None if report.original_ids is None
                         else np.asarray(report.original_ids).tolist()),
    }
    if extra:
        payload.update(extra)
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _emit(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _add_io_args(p, with_format=True):
    p.add_argument("--input", required=True, help="input TSV file")
    p.add_argument("--output", default="-", help="output path (default stdout)")
    if with_format:
        p.add_argument("--format", choices=("auto", "pairs", "labeled"), default="auto",
                       help="input layout; auto treats all-(+/-1) first columns as labels")
    p.add_argument("--tie-policy", choices=("random_break", "drop"), default="random_break")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                   help=f"RNG seed (default {DEFAULT_SEED})")


def _cmd_compete(args):
    rows = _read_tsv_rows(args.input)
    rng = np.random.default_rng(args.seed)
    labeled, idx = compete(rows, args.tie_policy, rng)
    lines = [f"{h.label:+d}\t{h.score!r}" for h in labeled]
    _emit("".join(line + "\n" for line in lines), args.output)
    return 0


def _cmd_tdc(args):
    rng = np.random.default_rng(args.seed)
    seq = _load_sequence(args.input, args.format, args.tie_policy, rng)
    report = run_tdc(seq, args.alpha)
    _emit(_report_json(report), args.output)
    return 0


def _cmd_fdp_sd(args):
    rng = np.random.default_rng(args.seed)
    seq = _load_sequence(args.input, args.format, args.tie_policy, rng)
    if args.randomized:
        report = run_fdp_sd_randomized(seq, args.alpha, args.gamma, rng)
    else:
        report = run_fdp_sd(seq, args.alpha, args.gamma)
    _emit(_report_json(report), args.output)
    return 0


def _load_band(kind, args, gamma):
    table = None
    if kind == "uniform":
        if args.uniform_table is None:
            raise ConfigurationError("--uniform-table is required for the uniform band")
        table = load_table(args.uniform_table)
        if not isinstance(table, UniformQuantileTable):
            raise ConfigurationError(f"{args.uniform_table} is not a uniform table")
    elif kind == "standardized":
        if args.z_table is None:
            raise ConfigurationError("--z-table is required for the standardized band")
        table = load_table(args.z_table)
        if not isinstance(table, StandardizedQuantileTable):
            raise ConfigurationError(f"{args.z_table} is not a standardized table")
    return BandSpec(kind, gamma, quantile_source=table, mode=args.mode)


def _cmd_fdp_band(args):
    rng = np.random.default_rng(args.seed)
    seq = _load_sequence(args.input, args.format, args.tie_policy, rng)
    band = _load_band(args.band, args, args.gamma)
    report = run_fdp_band(seq, args.alpha, args.gamma, band, rng)
    _emit(_report_json(report), args.output)
    return 0


def _cmd_bound(args):
    if args.tdc_report is None and args.alpha is None:
        raise _UsageError("bound needs --alpha (inline TDC) or --tdc-report")
    rng = np.random.default_rng(args.seed)
    seq = _load_sequence(args.input, args.format, args.tie_policy, rng)
    if args.tdc_report is not None:
        with open(args.tdc_report, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        k = int(data["k"])
        if k > seq.m:
            raise DomainError("TDC report index exceeds the input size")
        if k > 0 and (int(data["num_decoys"]) != int(seq.decoy_counts[k - 1])
                      or int(data["num_targets"]) != int(seq.target_counts[k - 1])):
            raise DomainError("TDC report counts do not match the input data")
        tdc_report = DiscoveryReport(
            k=k, num_targets=int(data["num_targets"]),
            num_decoys=int(data["num_decoys"]),
            reported_indices=np.empty(0, dtype=np.int64),
            procedure_id="tdc", alpha=float(data["alpha"]))
    else:
        tdc_report = run_tdc(seq, args.alpha)
    kind = {"ub": "uniform", "sb": "standardized", "krb": "kr"}[args.method]
    band = _load_band(kind, args, args.gamma)
    eta = bound_tdc_fdp(seq, tdc_report, args.gamma, args.method, band, rng)
    payload = {
        "schema": REPORT_SCHEMA,
        "procedure": f"tdc-{args.method}",
        "alpha": tdc_report.alpha,
        "gamma": args.gamma,
        "k": tdc_report.k,
        "num_targets": tdc_report.num_targets,
        "num_decoys": tdc_report.num_decoys,
        "bound": eta,
    }
    _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", args.output)
    return 0


def _cmd_precompute(args):
    gammas = [float(g) for g in args.gammas.split(",")]
    uniform, standardized = build_tables(args.d0, gammas, args.samples, args.seed,
                                         parallelism=args.parallelism)
    upath = f"{args.out}.uniform.tsv"
    zpath = f"{args.out}.standardized.tsv"
    save_table(uniform, upath)
    save_table(standardized, zpath)
    sys.stdout.write(f"{upath}\n{zpath}\n")
    return 0


def _cmd_simulate(args):
    if args.model == "spectrum-id":
        pool = None
        if not args.calibrated:
            pool = load_pool(args.pool) if args.pool else default_location_scale_pool(seed=args.seed)
        params = SpectrumIdParams(
            m=args.m, pi0=args.pi0, a=args.a, b=args.b,
            n_candidates=args.n_candidates, calibrated=args.calibrated,
            location_scale_pool=pool, seed=args.seed)
        pairs, truth = gen_spectrum_id(params)
        lines = [f"{p.target_score!r}\t{p.decoy_score!r}" for p in pairs]
    else:
        labeled, truth = gen_generic_null(args.m, args.num_false, args.seed)
        lines = [f"{h.label:+d}\t{h.score!r}" for h in labeled]
    _emit("".join(line + "\n" for line in lines), args.output)
    if args.truth_out:
        _emit("".join(f"{int(t)}\n" for t in truth.is_true_null), args.truth_out)
    return 0


def _cmd_evaluate(args):
    spec = GeneratorSpec(
        model=args.model, m=args.m, pi0=args.pi0, a=args.a, b=args.b,
        n_candidates=args.n_candidates, calibrated=args.calibrated,
        location_scale_pool=(load_pool(args.pool) if args.pool else
                             (None if args.calibrated
                              else default_location_scale_pool(seed=args.seed))),
        num_false=args.num_false)
    procedures = [p for p in args.procedures.split(",") if p]
    bound_methods = [b for b in args.bounds.split(",")] if args.bounds else []
    bound_methods = [b for b in bound_methods if b]
    uniform = load_table(args.uniform_table) if args.uniform_table else None
    standardized = load_table(args.z_table) if args.z_table else None
    tables = TableSet(uniform=uniform, standardized=standardized)
    summary = run_evaluation(
        spec, procedures, bound_methods, args.alpha, args.gamma,
        args.replicates, args.seed, parallelism=args.parallelism,
        tables=tables, csv_path=args.csv_out)
    _emit(summary.to_json(), args.output)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fdpband",
        description="Competition-based false discovery proportion control")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compete", help="turn score pairs into labeled hypotheses")
    _add_io_args(p, with_format=False)
    p.set_defaults(func=_cmd_compete)

    p = sub.add_parser("tdc", help="FDR control by target-decoy competition")
    p.add_argument("--alpha", type=float, required=True)
    _add_io_args(p)
    p.set_defaults(func=_cmd_tdc)

    p = sub.add_parser("fdp-sd", help="FDP control by stepdown")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--randomized", action="store_true",
                   help="use the randomized, more powerful variant")
    _add_io_args(p)
    p.set_defaults(func=_cmd_fdp_sd)

    p = sub.add_parser("fdp-band", help="FDP control via an upper prediction band")
    p.add_argument("--band", choices=("uniform", "standardized", "kr"), required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--uniform-table", help="table file from precompute (uniform band)")
    p.add_argument("--z-table", help="table file from precompute (standardized band)")
    p.add_argument("--mode", choices=("randomized", "conservative"), default="randomized")
    _add_io_args(p)
    p.set_defaults(func=_cmd_fdp_band)

    p = sub.add_parser("bound", help="upper prediction bound on TDC's FDP")
    p.add_argument("--method", choices=BOUND_METHODS, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--alpha", type=float,
                   help="TDC threshold for the inline TDC run (unless --tdc-report)")
    p.add_argument("--tdc-report", help="JSON report of a prior tdc run")
    p.add_argument("--uniform-table")
    p.add_argument("--z-table")
    p.add_argument("--mode", choices=("randomized", "conservative"), default="randomized")
    _add_io_args(p)
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("precompute", help="build and save the Monte-Carlo quantile tables")
    p.add_argument("--d0", type=int, required=True, help="largest decoy index covered")
    p.add_argument("--gammas", default=",".join(str(g) for g in DEFAULT_GAMMAS),
                   help="comma-separated confidence parameters")
    p.add_argument("--samples", type=int, default=100_000, help="Monte-Carlo paths")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--out", required=True,
                   help="output prefix; writes <out>.uniform.tsv and <out>.standardized.tsv")
    p.set_defaults(func=_cmd_precompute)

    p = sub.add_parser("simulate", help="draw a dataset from a generator")
    p.add_argument("--model", choices=("spectrum-id", "generic-null"), required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--pi0", type=float, default=0.5)
    p.add_argument("--a", type=float, default=0.05)
    p.add_argument("--b", type=float, default=10.0)
    p.add_argument("--n-candidates", type=int, default=100)
    p.add_argument("--uncalibrated", dest="calibrated", action="store_false")
    p.add_argument("--pool", help="location<TAB>scale pool file (uncalibrated)")
    p.add_argument("--num-false", type=int, default=0, help="generic-null false nulls")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--output", default="-")
    p.add_argument("--truth-out", help="also write the 0/1 true-null indicator")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("evaluate", help="replicate a generator and summarize control")
    p.add_argument("--model", choices=("spectrum-id", "generic-null"), required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--pi0", type=float, default=0.5)
    p.add_argument("--a", type=float, default=0.05)
    p.add_argument("--b", type=float, default=10.0)
    p.add_argument("--n-candidates", type=int, default=100)
    p.add_argument("--uncalibrated", dest="calibrated", action="store_false")
    p.add_argument("--pool")
    p.add_argument("--num-false", type=int, default=0)
    p.add_argument("--procedures", default="tdc,fdp-sd",
                   help=f"comma-separated subset of: {','.join(PROCEDURES)}")
    p.add_argument("--bounds", default="",
                   help=f"comma-separated subset of: {','.join(BOUND_METHODS)}")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--replicates", type=int, required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--uniform-table")
    p.add_argument("--z-table")
    p.add_argument("--csv-out", help="per-replicate rows as CSV")
    p.add_argument("--output", default="-", help="summary JSON path (default stdout)")
    p.set_defaults(func=_cmd_evaluate)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"fdpband: usage error: {exc}", file=sys.stderr)
        return 2
    except ConfigurationError as exc:
        print(f"fdpband: configuration error: {exc}", file=sys.stderr)
        return 4
    except DomainError as exc:
        print(f"fdpband: data error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"fdpband: data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
