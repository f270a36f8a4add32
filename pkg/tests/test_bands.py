"""TDC, band procedure, and FDP bound tests."""

import math

import numpy as np
import pytest

from fdpband import (BandSpec, ConfigurationError, DomainError, bound_tdc_fdp,
                     compute_d_infty, compute_d_max_tdc, kr_constant, nb_quantile,
                     run_fdp_band, run_tdc)
from fdpband.core import _build_sequence_arrays, _report_at
from fdpband.simgen import _generic_null_arrays


def seq_from_labels(labels, seed=0):
    labels = np.asarray(labels)
    scores = np.arange(len(labels), 0, -1).astype(float)
    return _build_sequence_arrays(scores, labels, np.random.default_rng(seed))


def tdc_oracle(labels, alpha):
    """Exhaustive scan of the defining max property."""
    best = 0
    d = t = 0
    for k, lab in enumerate(labels, start=1):
        d += lab == -1
        t += lab == 1
        est = (d + 1) / t if t else math.inf
        if est <= alpha:
            best = k
    return best


def test_run_tdc_examples():
    seq = seq_from_labels([1, 1, 1, -1, 1])
    assert run_tdc(seq, 0.5).k == 5
    assert run_tdc(seq, 0.34).k == 3
    assert run_tdc(seq_from_labels([-1, -1, -1]), 0.2).k == 0


def test_run_tdc_matches_exhaustive_scan():
    rng = np.random.default_rng(17)
    for trial in range(250):
        m = int(rng.integers(1, 500))
        labels = rng.choice([-1, 1], size=m)
        alpha = float(rng.uniform(0.02, 0.9))
        seq = seq_from_labels(labels, seed=trial)
        assert run_tdc(seq, alpha).k == tdc_oracle(seq.labels, alpha)


def test_tdc_threshold_decoy_guard():
    rng = np.random.default_rng(23)
    for trial in range(300):
        m = int(rng.integers(1, 400))
        labels = rng.choice([-1, 1], size=m)
        alpha = float(rng.uniform(0.02, 0.6))
        seq = seq_from_labels(labels, seed=trial)
        rep = run_tdc(seq, alpha)
        if rep.k > 0:
            assert rep.num_decoys + 1 <= compute_d_max_tdc(alpha, m)


def test_kr_constant():
    assert kr_constant(0.05) == pytest.approx(4.4857, abs=1e-4)
    assert kr_constant(0.5) == pytest.approx(math.log(2) / math.log(1.5), rel=1e-12)
    assert kr_constant(0.9999) < kr_constant(0.99)
    with pytest.raises(DomainError):
        kr_constant(1.0)


def test_compute_d_max_tdc():
    assert compute_d_max_tdc(0.1, 10_000) == 909
    assert compute_d_max_tdc(0.05, 500) == 23
    assert compute_d_max_tdc(0.5, 1) == 0
    with pytest.raises(DomainError):
        compute_d_max_tdc(0.0, 10)


def test_d_infty_analytic_floor(uniform_table):
    # the exact entry at d=1 is beta = 4, and 4/1000 <= 0.05, so the scan
    # must keep at least d0 = 1
    band = BandSpec("uniform", 0.05, quantile_source=uniform_table)
    assert compute_d_infty(1000, 0.05, 0.05, band) >= 1


def test_d_infty_matches_full_scan(uniform_table, standardized_table):
    from fdpband.bands import _band_value_at

    for kind, table in (("uniform", uniform_table), ("standardized", standardized_table)):
        band = BandSpec(kind, 0.05, quantile_source=table)
        for m in (50, 120, 200):
            got = compute_d_infty(m, 0.1, 0.05, band)
            best = 0
            for d0 in range(1, m + 1):
                if _band_value_at(band, table, 0.05, d0) / (m - d0 + 1) <= 0.1:
                    best = d0
            assert got == best


def test_d_infty_errors(uniform_table):
    band = BandSpec("kr", 0.05)
    with pytest.raises(DomainError):
        compute_d_infty(100, 0.05, 0.05, band)
    small = BandSpec("uniform", 0.05, quantile_source=uniform_table)
    with pytest.raises(ConfigurationError):
        # m far beyond the table's coverage and a budget that keeps the scan
        # alive past it
        compute_d_infty(100_000, 0.05, 0.05, small)


def test_fdp_band_all_decoys(uniform_table, standardized_table):
    seq = seq_from_labels([-1] * 50)
    rng = np.random.default_rng(0)
    for band in (BandSpec("kr", 0.05),
                 BandSpec("uniform", 0.05, quantile_source=uniform_table),
                 BandSpec("standardized", 0.05, quantile_source=standardized_table)):
        assert run_fdp_band(seq, 0.1, 0.05, band, rng).k == 0


def test_fdp_band_kr_closed_form():
    # C(0.05) ~= 4.486: with 100 straight target wins the ratio C/k drops
    # below alpha = 0.05 from k = 90 on, so everything is reported
    seq = seq_from_labels([1] * 100)
    rep = run_fdp_band(seq, 0.05, 0.05, BandSpec("kr", 0.05), np.random.default_rng(0))
    assert rep.k == 100 and rep.num_targets == 100
    # alpha just below C/100 reports nothing
    rep = run_fdp_band(seq, 0.04, 0.05, BandSpec("kr", 0.05), np.random.default_rng(0))
    assert rep.k == 0


def test_fdp_band_guards_and_ids(uniform_table, standardized_table):
    rng = np.random.default_rng(3)
    for trial in range(60):
        m = int(rng.integers(20, 400))
        labels = rng.choice([-1, 1], size=m, p=[0.2, 0.8])
        seq = seq_from_labels(labels, seed=trial)
        for kind, table, pid in (("uniform", uniform_table, "fdp-ub"),
                                 ("standardized", standardized_table, "fdp-sb")):
            band = BandSpec(kind, 0.05, quantile_source=table)
            rep = run_fdp_band(seq, 0.1, 0.05, band, rng)
            assert rep.procedure_id == pid
            if rep.k > 0:
                d_inf = compute_d_infty(m, 0.1, 0.05, band)
                assert rep.num_decoys + 1 <= d_inf


def test_band_gamma_mismatch_rejected(uniform_table):
    band = BandSpec("uniform", 0.05, quantile_source=uniform_table)
    seq = seq_from_labels([1, 1, -1])
    with pytest.raises(DomainError):
        run_fdp_band(seq, 0.1, 0.01, band, np.random.default_rng(0))


def test_bound_trivial_and_krb():
    seq = seq_from_labels([-1] * 10)
    rep = run_tdc(seq, 0.5)
    assert bound_tdc_fdp(seq, rep, 0.05, "krb") == 0.0

    seq = seq_from_labels([1] * 100)
    rep = run_tdc(seq, 0.05)
    eta = bound_tdc_fdp(seq, rep, 0.05, "krb")
    assert eta == pytest.approx(4.4857 / 100, abs=1e-4)


def test_bound_ub_analytic_chain(d1_uniform_table):
    # m = 21, alpha = 0.05: d_max = floor(0.05 * 22 / 1.05) = 1, so the exact
    # d = 1 table entry u = 2^-5 applies and beta_1 = 4
    assert compute_d_max_tdc(0.05, 21) == 1
    seq = seq_from_labels([1] * 21)
    rep = run_tdc(seq, 0.05)
    assert rep.k == 21 and rep.num_decoys == 0
    band = BandSpec("uniform", 0.05, quantile_source=d1_uniform_table, mode="conservative")
    eta = bound_tdc_fdp(seq, rep, 0.05, "ub", band)
    assert eta == 4 / 21
    assert nb_quantile(1, 1 - 2.0 ** -5) == 4


def test_bound_sb_formula(standardized_table):
    seq = seq_from_labels([1] * 200)
    rep = run_tdc(seq, 0.05)
    d_max = compute_d_max_tdc(0.05, 200)
    band = BandSpec("standardized", 0.05, quantile_source=standardized_table)
    eta = bound_tdc_fdp(seq, rep, 0.05, "sb", band)
    z = standardized_table.entry(0.05, d_max)
    assert eta == pytest.approx(min((z * math.sqrt(2.0) + 1) / 200, 1.0), rel=1e-12)


def test_bound_caps_at_one(uniform_table):
    seq = seq_from_labels([1, 1, -1, 1] * 3)
    rep = run_tdc(seq, 0.6)
    assert rep.k > 0
    eta_kr = bound_tdc_fdp(seq, rep, 0.05, "krb")
    band = BandSpec("uniform", 0.05, quantile_source=uniform_table, mode="conservative")
    eta_ub = bound_tdc_fdp(seq, rep, 0.05, "ub", band)
    assert eta_kr == 1.0  # C * (1 + 3) far exceeds 9 targets
    assert 0.0 <= eta_ub <= 1.0


def test_bound_monotone_in_targets():
    etas = []
    for t in (10, 20, 40, 80):
        seq = seq_from_labels([1] * t)
        rep = run_tdc(seq, 0.5)
        etas.append(bound_tdc_fdp(seq, rep, 0.05, "krb"))
    assert all(a >= b for a, b in zip(etas, etas[1:]))


def test_bound_method_validation(uniform_table):
    seq = seq_from_labels([1] * 10)
    rep = run_tdc(seq, 0.5)
    with pytest.raises(DomainError):
        bound_tdc_fdp(seq, rep, 0.05, "zz")
    with pytest.raises(ConfigurationError):
        bound_tdc_fdp(seq, rep, 0.05, "ub", None)
    with pytest.raises(DomainError):
        band = BandSpec("standardized", 0.05, quantile_source=uniform_table)
        bound_tdc_fdp(seq, rep, 0.05, "ub", band)


def test_uniform_band_exceedance_on_exact_nulls(uniform_table):
    # all-null data at alpha = gamma = 0.1: any nonempty report exceeds, and
    # that event must stay below gamma (+3 SE at this replicate count)
    alpha = gamma = 0.1
    reps, m = 800, 400
    rng = np.random.default_rng(88)
    band = BandSpec("uniform", None, quantile_source=uniform_table)
    exceed = 0
    for _ in range(reps):
        scores, labels, _ = _generic_null_arrays(m, 0, rng)
        seq = _build_sequence_arrays(scores, labels, rng)
        exceed += run_fdp_band(seq, alpha, 0.05, band, rng).k > 0
    se = math.sqrt(0.05 * 0.95 / reps)
    assert exceed / reps <= 0.05 + 3 * se
