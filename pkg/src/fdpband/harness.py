"""Replicate evaluation engine.

Runs a generator x procedure grid over R seeded replicates and summarizes
empirical FDP control (exceedance rates with exact binomial confidence
intervals), power, power loss relative to TDC, and the coverage and
tightness of the post hoc FDP bounds.  Every procedure sees the identical
dataset within a replicate, so comparisons are paired; replicate seeds
derive from (master_seed, replicate index), so the summary is reproducible
bit for bit and independent of the parallelism degree.
"""

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import beta as _beta_dist

from ._util import ConfigurationError, DomainError, child_rng, splitmix64
from .bands import BandSpec, bound_tdc_fdp, run_fdp_band, run_tdc
from .core import _build_sequence_arrays, _compete_arrays
from .simgen import SpectrumIdParams, _generic_null_arrays, _spectrum_id_arrays, _validate_params
from .stepdown import run_fdp_sd, run_fdp_sd_randomized

PROCEDURES = ("tdc", "fdp-sd", "fdp-sd-rand", "fdp-ub", "fdp-sb", "fdp-krb")
BOUND_METHODS = ("ub", "sb", "krb")
POWER_LOSS_EPSILON = 1e-12
CSV_SCHEMA = "fdpband-replicates v1"
SUMMARY_SCHEMA = "fdpband-summary v1"


@dataclass(frozen=True)
class GeneratorSpec:
    """Which generator the harness replicates; seeds are supplied per replicate."""

    model: str  # "spectrum-id" or "generic-null"
    m: int
    pi0: float = 0.5
    a: float = 0.05
    b: float = 10.0
    n_candidates: int = 100
    calibrated: bool = True
    location_scale_pool: tuple = None
    num_false: int = 0

    def describe(self):
        d = {"model": self.model, "m": self.m}
        if self.model == "spectrum-id":
            d.update(pi0=self.pi0, a=self.a, b=self.b,
                     n_candidates=self.n_candidates, calibrated=self.calibrated)
        else:
            d.update(num_false=self.num_false)
        return d


@dataclass(frozen=True)
class TableSet:
    """The two Monte-Carlo quantile tables the band procedures read."""

    uniform: object = None
    standardized: object = None


@dataclass
class ProcedureStats:
    mean_fdp: float
    median_fdp: float
    exceedance_rate: float
    exceedance_ci: tuple
    violation_flagged: bool
    mean_true_discoveries: float
    median_true_discoveries: float
    median_discoveries: float
    median_relative_power_loss_vs_tdc: float | None
    fdp_histogram: list


@dataclass
class BoundStats:
    violation_rate: float
    violation_ci: tuple
    violation_flagged: bool
    median_bound: float
    median_tdc_fdp: float
    bound_histogram: list


@dataclass
class EvaluationSummary:
    schema: str
    replicates: int
    alpha: float
    gamma: float
    master_seed: int
    histogram_bins: int
    generator: dict
    procedures: dict
    bounds: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"


def clopper_pearson(successes, n, level=0.95):
    """Exact binomial confidence interval for a proportion."""
    tail = (1.0 - level) / 2.0
    lo = 0.0 if successes == 0 else float(_beta_dist.ppf(tail, successes, n - successes + 1))
    hi = 1.0 if successes == n else float(_beta_dist.ppf(1.0 - tail, successes + 1, n - successes))
    return lo, hi


def relative_power_loss(t_true, t_true_baseline):
    """1 - (T' + eps)/(T'_baseline + eps), the regularized paired power loss."""
    return 1.0 - (t_true + POWER_LOSS_EPSILON) / (t_true_baseline + POWER_LOSS_EPSILON)


def generate_replicate(spec, rng):
    """One dataset: (sequence, true-null indicator aligned to the sequence)."""
    if spec.model == "generic-null":
        scores, labels, is_null = _generic_null_arrays(spec.m, spec.num_false, rng)
        seq = _build_sequence_arrays(scores, labels, rng)
    elif spec.model == "spectrum-id":
        params = SpectrumIdParams(
            m=spec.m, pi0=spec.pi0, a=spec.a, b=spec.b,
            n_candidates=spec.n_candidates, calibrated=spec.calibrated,
            location_scale_pool=spec.location_scale_pool)
        _validate_params(params)
        target, decoy, is_null = _spectrum_id_arrays(params, rng)
        scores, labels, idx = _compete_arrays(target, decoy, "random_break", rng)
        seq = _build_sequence_arrays(scores, labels, rng, orig_index=idx)
    else:
        raise DomainError(f"unknown generator model {spec.model!r}")
    aligned = np.asarray(is_null, dtype=bool)[seq.orig_index]
    return seq, aligned


def _bands_for(tables, gamma):
    bands = {"kr": BandSpec("kr", gamma)}
    if tables is not None and tables.uniform is not None:
        bands["uniform"] = BandSpec("uniform", gamma, quantile_source=tables.uniform)
    if tables is not None and tables.standardized is not None:
        bands["standardized"] = BandSpec("standardized", gamma,
                                         quantile_source=tables.standardized)
    return bands


def _run_one(proc, seq, alpha, gamma, bands, rng):
    if proc == "tdc":
        return run_tdc(seq, alpha)
    if proc == "fdp-sd":
        return run_fdp_sd(seq, alpha, gamma)
    if proc == "fdp-sd-rand":
        return run_fdp_sd_randomized(seq, alpha, gamma, rng)
    if proc == "fdp-ub":
        return run_fdp_band(seq, alpha, gamma, bands["uniform"], rng)
    if proc == "fdp-sb":
        return run_fdp_band(seq, alpha, gamma, bands["standardized"], rng)
    if proc == "fdp-krb":
        return run_fdp_band(seq, alpha, gamma, bands["kr"], rng)
    raise DomainError(f"unknown procedure {proc!r}")


def _replicate_range(args):
    (spec, procs, methods, alpha, gamma, tables, master_seed, r_lo, r_hi) = args
    bands = _bands_for(tables, gamma)
    need_tdc = "tdc" in procs or bool(methods)
    run_list = [p for p in PROCEDURES if p in procs]
    out = []
    for r in range(r_lo, r_hi):
        seed_r = splitmix64(master_seed, r)
        rng_data = child_rng(seed_r, 0)
        rng_proc = child_rng(seed_r, 1)
        seq, is_null = generate_replicate(spec, rng_data)
        rec = {}
        tdc_report = None
        for proc in (["tdc"] if need_tdc and "tdc" not in run_list else []) + run_list:
            report = _run_one(proc, seq, alpha, gamma, bands, rng_proc)
            n_false = int(is_null[report.reported_indices - 1].sum()) if report.k else 0
            fdp = n_false / max(report.num_targets, 1)
            entry = (report.k, report.num_targets, report.num_decoys, fdp,
                     report.num_targets - n_false)
            if proc == "tdc":
                tdc_report = report
                tdc_fdp = fdp
            if proc in procs:
                rec[proc] = entry
        brec = {}
        for method in [mth for mth in BOUND_METHODS if mth in methods]:
            band = bands.get(METHOD_BAND[method])
            eta = bound_tdc_fdp(seq, tdc_report, gamma, method, band, rng_proc)
            brec[method] = (tdc_report.k, tdc_report.num_targets,
                            tdc_report.num_decoys, tdc_fdp, eta)
        out.append((r, rec, brec))
    return out


METHOD_BAND = {"ub": "uniform", "sb": "standardized", "krb": "kr"}


def _require_tables(procs, methods, tables):
    need_uniform = "fdp-ub" in procs or "ub" in methods
    need_std = "fdp-sb" in procs or "sb" in methods
    if need_uniform and (tables is None or tables.uniform is None):
        raise ConfigurationError("a uniform quantile table is required for fdp-ub/ub")
    if need_std and (tables is None or tables.standardized is None):
        raise ConfigurationError("a standardized quantile table is required for fdp-sb/sb")


def run_evaluation(gen_spec, procedure_list, bound_method_list, alpha, gamma,
                   replicates, master_seed, parallelism=1, tables=None,
                   csv_path=None, histogram_bins=50):
    """Replicate gen_spec and evaluate each procedure and bound method.

    Returns an EvaluationSummary; optionally writes the per-replicate rows as
    CSV.  Deterministic given master_seed, for any parallelism degree.
    """
    if replicates < 100:
        raise DomainError(f"at least 100 replicates are required, got {replicates}")
    procs = tuple(dict.fromkeys(procedure_list))
    methods = tuple(dict.fromkeys(bound_method_list))
    for p in procs:
        if p not in PROCEDURES:
            raise DomainError(f"unknown procedure {p!r} (known: {', '.join(PROCEDURES)})")
    for mth in methods:
        if mth not in BOUND_METHODS:
            raise DomainError(f"unknown bound method {mth!r} (known: {', '.join(BOUND_METHODS)})")
    _require_tables(procs, methods, tables)

    if parallelism > 1:
        n_chunks = min(parallelism * 4, replicates)
        bounds_idx = np.linspace(0, replicates, n_chunks + 1, dtype=int)
        jobs = [(gen_spec, procs, methods, alpha, gamma, tables, master_seed,
                 int(lo), int(hi))
                for lo, hi in zip(bounds_idx[:-1], bounds_idx[1:]) if hi > lo]
        results = []
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            for chunk in pool.map(_replicate_range, jobs):
                results.extend(chunk)
        results.sort(key=lambda t: t[0])
    else:
        results = _replicate_range(
            (gen_spec, procs, methods, alpha, gamma, tables, master_seed,
             0, replicates))

    if csv_path is not None:
        _write_csv(csv_path, results, procs, methods)

    proc_stats = {}
    run_order = [p for p in PROCEDURES if p in procs]
    arrays = {p: np.array([rec[p] for _, rec, _ in results], dtype=np.float64)
              for p in run_order}
    tdc_tprime = arrays["tdc"][:, 4] if "tdc" in arrays else None
    for p in run_order:
        a = arrays[p]
        fdp, t_k, tprime = a[:, 3], a[:, 1], a[:, 4]
        exceed = int(np.count_nonzero(fdp > alpha))
        ci = clopper_pearson(exceed, replicates)
        if tdc_tprime is None:
            loss = None
        else:
            loss = float(np.median(relative_power_loss(tprime, tdc_tprime)))
        hist, _ = np.histogram(fdp, bins=histogram_bins, range=(0.0, 1.0))
        proc_stats[p] = ProcedureStats(
            mean_fdp=float(fdp.mean()),
            median_fdp=float(np.median(fdp)),
            exceedance_rate=exceed / replicates,
            exceedance_ci=ci,
            violation_flagged=bool(ci[0] > gamma),
            mean_true_discoveries=float(tprime.mean()),
            median_true_discoveries=float(np.median(tprime)),
            median_discoveries=float(np.median(t_k)),
            median_relative_power_loss_vs_tdc=loss,
            fdp_histogram=hist.tolist(),
        )

    bound_stats = {}
    for mth in [mm for mm in BOUND_METHODS if mm in methods]:
        a = np.array([brec[mth] for _, _, brec in results], dtype=np.float64)
        tdc_fdp, eta = a[:, 3], a[:, 4]
        viol = int(np.count_nonzero(tdc_fdp > eta))
        ci = clopper_pearson(viol, replicates)
        hist, _ = np.histogram(eta, bins=histogram_bins, range=(0.0, 1.0))
        bound_stats[mth] = BoundStats(
            violation_rate=viol / replicates,
            violation_ci=ci,
            violation_flagged=bool(ci[0] > gamma),
            median_bound=float(np.median(eta)),
            median_tdc_fdp=float(np.median(tdc_fdp)),
            bound_histogram=hist.tolist(),
        )

    return EvaluationSummary(
        schema=SUMMARY_SCHEMA,
        replicates=replicates,
        alpha=alpha,
        gamma=gamma,
        master_seed=master_seed,
        histogram_bins=histogram_bins,
        generator=gen_spec.describe(),
        procedures=proc_stats,
        bounds=bound_stats,
    )


def _write_csv(path, results, procs, methods):
    run_order = [p for p in PROCEDURES if p in procs]
    method_order = [mth for mth in BOUND_METHODS if mth in methods]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {CSV_SCHEMA}\n")
        fh.write("replicate,procedure,k,num_targets,num_decoys,fdp,bound\n")
        for r, rec, brec in results:
            for p in run_order:
                k, t_k, d_k, fdp, _ = rec[p]
                fh.write(f"{r},{p},{k},{t_k},{d_k},{fdp!r},\n")
            for mth in method_order:
                k, t_k, d_k, fdp, eta = brec[mth]
                fh.write(f"{r},tdc-{mth},{k},{t_k},{d_k},{fdp!r},{eta!r}\n")
