"""Stepdown control of the false discovery proportion in competition data.

The procedure scans hypotheses in decreasing score order and compares the
running decoy-win count D_i against precomputed bounds delta(i).  Rejections
are all target wins in the top k scores, where k is the last index before
the first violation.  delta(i) is the largest d in {-1, 0, ..., i} with

    P[B(k(i,d) + d, 1/2) <= d] <= gamma,   k(i,d) = floor((i-d)*alpha) + 1,

which makes the unobserved number of true-null target wins stochastically
controlled whenever the scan is still alive.  A randomized variant replaces
delta(i) with gamma_i in {delta(i), delta(i)+1}, drawn with probabilities
calibrated so the mixed stopping level is exactly gamma; across indices the
draws are coupled so gamma_i can only move up while delta stays flat.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ._util import DomainError, as_rng, check_unit_open
from .core import _empty_report, _report_at
from .distributions import binom_cdf_half


def compute_i0(alpha, gamma):
    """First index at which the stepdown bound is non-negative.

    max{1, ceil((ceil(log2(1/gamma)) - 1) / alpha)}: below this index no
    rejection can carry the required confidence.
    """
    alpha = check_unit_open("alpha", alpha)
    gamma = check_unit_open("gamma", gamma)
    need = math.ceil(math.log2(1.0 / gamma)) - 1
    return max(1, math.ceil(need / alpha))


@dataclass(frozen=True)
class DeltaTable:
    """Stepdown bounds delta(i) for i = 1..m; delta[i-1] >= 0 iff i >= i0."""

    alpha: float
    gamma: float
    m: int
    i0: int
    delta: np.ndarray


def _k_of(i, d, alpha_frac):
    # Exact floor((i - d) * alpha) for the given float alpha; float products
    # can land on the wrong side of an integer, Fractions cannot.
    return math.floor((i - d) * alpha_frac) + 1


def _qualifies(i, d, alpha_frac, gamma):
    return binom_cdf_half(_k_of(i, d, alpha_frac) + d, d) <= gamma


@lru_cache(maxsize=64)
def compute_delta_table(m, alpha, gamma):
    """Bound table for FDP-SD, computed incrementally.

    delta is non-decreasing in i and the set of qualifying d at fixed i is
    downward closed, so each index only has to test whether the current bound
    can be incremented.
    """
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    alpha = check_unit_open("alpha", alpha)
    gamma = check_unit_open("gamma", gamma)
    alpha_frac = Fraction(alpha)
    delta = np.empty(m, dtype=np.int64)
    d = -1
    for i in range(1, m + 1):
        while d + 1 <= i and _qualifies(i, d + 1, alpha_frac, gamma):
            d += 1
        delta[i - 1] = d
    return DeltaTable(alpha, gamma, m, compute_i0(alpha, gamma), delta)


@dataclass(frozen=True)
class _RandomizedPlan:
    """Per-index randomization state shared by all runs at fixed (m, alpha, gamma).

    w[i-1] is the marginal probability that gamma_i = delta(i) given a fresh
    draw; eff_w[i-1] is the probability that gamma_i is still at delta(i)
    within its constant-delta block.  Because eff_w is non-increasing inside
    a block, one uniform per block reproduces the coupled chain exactly: the
    indicator {u > eff_w} can only switch from low to high, with the correct
    conditional transition probabilities.
    """

    m: int
    alpha: float
    gamma: float
    i0: int
    delta: np.ndarray
    p0: np.ndarray
    p1: np.ndarray
    w: np.ndarray
    block_id: np.ndarray
    eff_w: np.ndarray
    n_blocks: int


@lru_cache(maxsize=64)
def _randomized_plan(m, alpha, gamma):
    table = compute_delta_table(m, alpha, gamma)
    alpha_frac = Fraction(alpha)
    delta = table.delta
    p0 = np.empty(m)
    p1 = np.empty(m)
    w = np.empty(m)
    block_id = np.empty(m, dtype=np.int64)
    eff_w = np.empty(m)
    block = -1
    for i in range(1, m + 1):
        d = int(delta[i - 1])
        p0[i - 1] = binom_cdf_half(_k_of(i, d, alpha_frac) + d, d)
        p1[i - 1] = binom_cdf_half(_k_of(i, d + 1, alpha_frac) + d + 1, d + 1)
        if p1[i - 1] <= gamma:
            # cannot happen for delta at its defining maximum; clamp keeps the
            # mixture conservative if it ever did
            w[i - 1] = 0.0
        else:
            w[i - 1] = (p1[i - 1] - gamma) / (p1[i - 1] - p0[i - 1])
        if i == 1 or d > delta[i - 2]:
            block += 1
            eff_w[i - 1] = w[i - 1]
        else:
            prev = eff_w[i - 2]
            if prev == 0.0:
                eff_w[i - 1] = 0.0
            else:
                if w[i - 2] == 0.0:
                    raise RuntimeError("randomization weight vanished mid-block")
                eff_w[i - 1] = prev * min(w[i - 1] / w[i - 2], 1.0)
        block_id[i - 1] = block
    return _RandomizedPlan(m, alpha, gamma, table.i0, delta, p0, p1, w,
                           block_id, eff_w, block + 1)


def _first_violation_to_k(i0, first, m):
    """Map the first failing index (or None) to the rejection index."""
    if first is None:
        return m
    return 0 if first == i0 else first - 1


def run_fdp_sd(seq, alpha, gamma):
    """Deterministic stepdown run; P(FDP > alpha) <= gamma under the fair-coin
    null-label assumption."""
    table = compute_delta_table(seq.m, alpha, gamma)
    i0 = table.i0
    if i0 > seq.m:
        return _empty_report("fdp-sd", alpha, gamma)
    viol = seq.decoy_counts[i0 - 1:] > table.delta[i0 - 1:]
    first = i0 + int(np.argmax(viol)) if viol.any() else None
    k = _first_violation_to_k(i0, first, seq.m)
    return _report_at(seq, k, "fdp-sd", alpha, gamma)


def run_fdp_sd_randomized(seq, alpha, gamma, rng):
    """Randomized stepdown run; never rejects less than the deterministic one.

    gamma_i = delta(i) + {0, 1} with one uniform drawn per constant-delta
    block; the scan stops at the first i >= i0 with D_i > gamma_i.
    """
    plan = _randomized_plan(seq.m, alpha, gamma)
    i0 = plan.i0
    if i0 > seq.m:
        return _empty_report("fdp-sd-rand", alpha, gamma)
    u = as_rng(rng).random(plan.n_blocks)
    bumped = u[plan.block_id] > plan.eff_w
    gamma_i = plan.delta + bumped
    viol = seq.decoy_counts[i0 - 1:] > gamma_i[i0 - 1:]
    first = i0 + int(np.argmax(viol)) if viol.any() else None
    k = _first_violation_to_k(i0, first, seq.m)
    return _report_at(seq, k, "fdp-sd-rand", alpha, gamma)
