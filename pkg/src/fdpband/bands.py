"""Target-decoy competition, upper prediction bands, and FDP bounds.

Three 1-gamma upper prediction bands on the decoy-indexed count of true-null
target wins are supported: the uniform band (negative-binomial quantiles at a
common Monte-Carlo-estimated level), the standardized band (mean-variance
normalization with a Monte-Carlo max-quantile), and the closed-form KR band
C*(1+d) with C = -log(gamma)/log(2-gamma).  Each band yields both an FDP-
controlling rejection rule and a post hoc upper bound on the FDP of the
competition (TDC) rejection list.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._util import ConfigurationError, DomainError, check_unit_open
from .core import _empty_report, _report_at
from .distributions import nb_quantile
from .mc_quantiles import draw_u_gamma, z_quantile

BAND_UNIFORM = "uniform"
BAND_STANDARDIZED = "standardized"
BAND_KR = "kr"

METHOD_TO_KIND = {"ub": BAND_UNIFORM, "sb": BAND_STANDARDIZED, "krb": BAND_KR}


@dataclass(frozen=True)
class BandSpec:
    """Which band to use and where its quantiles come from.

    quantile_source is the Monte-Carlo table matching the kind (unused for
    kr); mode picks between the randomized and conservative level draw for
    the uniform band; d_max, when set, is validated against the value the
    procedure derives.
    """

    kind: str
    gamma: float | None = None
    d_max: int | None = None
    quantile_source: object = None
    mode: str = "randomized"

    def require_table(self):
        if self.quantile_source is None:
            raise ConfigurationError(
                f"the {self.kind} band needs a precomputed quantile table")
        return self.quantile_source


def _check_band_gamma(band, gamma):
    if band.gamma is not None and band.gamma != gamma:
        raise DomainError(
            f"band was built for gamma={band.gamma} but the call uses gamma={gamma}")


def _largest_passing(values, targets, alpha):
    """max{k : values[k]/T_k <= alpha or k = 0}, with T_k = 0 meaning +inf."""
    ratio = np.where(targets > 0, values / np.maximum(targets, 1), np.inf)
    passing = np.nonzero(ratio <= alpha)[0]
    return int(passing[-1]) + 1 if passing.size else 0


def run_tdc(seq, alpha):
    """Largest k whose estimated FDR (D_k + 1)/T_k is at most alpha.

    The +1 on the decoy count is what makes the estimate conservative enough
    for rigorous FDR control under the fair-coin null-label assumption.
    """
    alpha = check_unit_open("alpha", alpha)
    k = _largest_passing(seq.decoy_counts + 1.0, seq.target_counts, alpha)
    if k > 0:
        # decoy count at the threshold is bounded by construction
        assert seq.decoy_counts[k - 1] + 1 <= compute_d_max_tdc(alpha, seq.m)
    return _report_at(seq, k, "tdc", alpha)


def kr_constant(gamma):
    """The KR band's slope -log(gamma)/log(2 - gamma)."""
    gamma = check_unit_open("gamma", gamma)
    return -math.log(gamma) / math.log(2.0 - gamma)


def compute_d_max_tdc(alpha, m):
    """floor(alpha * (m + 1)/(1 + alpha)): covers TDC's decoy count + 1."""
    alpha = check_unit_open("alpha", alpha)
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    a = Fraction(alpha)
    return int(a * (m + 1) / (1 + a))


def _band_value_at(band, table, gamma, d):
    """The band's value at index d during the d_infty scan (conservative)."""
    if band.kind == BAND_UNIFORM:
        rho = table.entry(gamma, d)[0]
        if rho <= 0.0:
            return math.inf
        return float(nb_quantile(d, 1.0 - rho))
    return z_quantile(table, d, gamma) * math.sqrt(2.0 * d) + d


_D_INFTY_CACHE = {}


def compute_d_infty(m, alpha, gamma, band):
    """Largest d0 whose self-covering band value fits the budget at level alpha.

    Scans d0 = 0, 1, 2, ... testing band_value(d0; d_max=d0)/(m - d0 + 1) <=
    alpha, where d0 = 0 always qualifies.  The scan stops once 50 consecutive
    candidates past the ceiling ceil(alpha*(m+1)/(1+alpha)) have failed: the
    band value grows at least linearly in d0 while the budget shrinks, so no
    later candidate can recover.
    """
    alpha = check_unit_open("alpha", alpha)
    gamma = check_unit_open("gamma", gamma)
    if band.kind not in (BAND_UNIFORM, BAND_STANDARDIZED):
        raise DomainError(f"d_infty is defined for quantile bands, not {band.kind!r}")
    table = band.require_table()
    key = (m, alpha, gamma, band.kind, id(table), table.seed, table.n_samples, table.d0)
    if key in _D_INFTY_CACHE:
        return _D_INFTY_CACHE[key]

    a = Fraction(alpha)
    ceiling = math.ceil(a * (m + 1) / (1 + a))
    best = 0
    consecutive_failures = 0
    for d0 in range(1, m + 1):
        if d0 > table.d0:
            raise ConfigurationError(
                f"d_infty scan needs table coverage at d={d0} "
                f"(table covers d up to {table.d0})")
        if _band_value_at(band, table, gamma, d0) / (m - d0 + 1) <= alpha:
            best = d0
            consecutive_failures = 0
        else:
            consecutive_failures += 1
            if d0 > ceiling and consecutive_failures >= 50:
                break
    _D_INFTY_CACHE[key] = best
    return best


def run_fdp_band(seq, alpha, gamma, band, rng=None):
    """FDP control via an upper prediction band.

    Rejects all target wins in the top tau scores, where tau is the largest k
    whose band value at D_k + 1 fits within alpha * T_k; the band value is
    +inf beyond the band's own feasibility index, so tau never outruns it.
    P(FDP > alpha) <= gamma under the fair-coin null-label assumption.
    """
    alpha = check_unit_open("alpha", alpha)
    gamma = check_unit_open("gamma", gamma)
    _check_band_gamma(band, gamma)
    d_arr = seq.decoy_counts + 1

    if band.kind == BAND_KR:
        values = kr_constant(gamma) * d_arr
        tau = _largest_passing(values, seq.target_counts, alpha)
        return _report_at(seq, tau, "fdp-krb", alpha, gamma)

    if band.kind not in (BAND_UNIFORM, BAND_STANDARDIZED):
        raise DomainError(f"unknown band kind {band.kind!r}")
    table = band.require_table()
    proc_id = "fdp-ub" if band.kind == BAND_UNIFORM else "fdp-sb"
    d_inf = compute_d_infty(seq.m, alpha, gamma, band)
    if d_inf == 0:
        return _empty_report(proc_id, alpha, gamma)

    if band.kind == BAND_UNIFORM:
        u = draw_u_gamma(table, d_inf, gamma, band.mode, rng)
        if u <= 0.0:
            return _empty_report(proc_id, alpha, gamma)
        cap = min(d_inf, int(d_arr.max()))
        beta = np.array([nb_quantile(d, 1.0 - u) for d in range(1, cap + 1)],
                        dtype=np.float64)
        values = np.where(d_arr <= d_inf, beta[np.minimum(d_arr, cap) - 1], np.inf)
    else:
        z = z_quantile(table, d_inf, gamma)
        values = np.where(d_arr <= d_inf,
                          z * np.sqrt(2.0 * d_arr) + d_arr, np.inf)

    tau = _largest_passing(values, seq.target_counts, alpha)
    if tau > 0:
        assert seq.decoy_counts[tau - 1] + 1 <= d_inf
    return _report_at(seq, tau, proc_id, alpha, gamma)


def bound_tdc_fdp(seq, tdc_report, gamma, method, band=None, rng=None):
    """1-gamma upper prediction bound on the FDP of a TDC rejection list.

    method is one of ub / sb / krb.  For ub and sb a quantile table covering
    d_max = floor(alpha*(m+1)/(1+alpha)) is required, where alpha is the
    threshold the TDC report was produced at.
    """
    gamma = check_unit_open("gamma", gamma)
    if method not in METHOD_TO_KIND:
        raise DomainError(f"unknown bound method {method!r}")
    if band is not None:
        if band.kind != METHOD_TO_KIND[method]:
            raise DomainError(
                f"bound method {method!r} needs a {METHOD_TO_KIND[method]} band, "
                f"got {band.kind!r}")
        _check_band_gamma(band, gamma)
    t_tau = tdc_report.num_targets
    if t_tau < 1:
        return 0.0
    d_tau = tdc_report.num_decoys

    if method == "krb":
        return min(kr_constant(gamma) * (1 + d_tau) / t_tau, 1.0)

    if band is None:
        raise ConfigurationError(f"bound method {method!r} needs a quantile table")
    table = band.require_table()
    d_max = compute_d_max_tdc(tdc_report.alpha, seq.m)
    if band.d_max is not None and band.d_max != d_max:
        raise DomainError(
            f"band.d_max={band.d_max} does not match the TDC-derived d_max={d_max}")
    assert d_tau + 1 <= d_max

    if method == "ub":
        u = draw_u_gamma(table, d_max, gamma, band.mode, rng)
        if u <= 0.0:
            return 1.0
        return min(nb_quantile(d_tau + 1, 1.0 - u) / t_tau, 1.0)

    z = z_quantile(table, d_max, gamma)
    return min((z * math.sqrt(2.0 * (1 + d_tau)) + d_tau + 1) / t_tau, 1.0)
