"""Binomial(n, 1/2) and negative-binomial(d, 1/2) CDFs, tails, and quantiles.

Every procedure in this package reduces its distributional needs to the fair
coin p = 1/2, so no general-p machinery is provided.  The two families are
linked by an exact identity at p = 1/2: the d-th failure occurs within the
first k + d tosses iff at most k of those tosses are successes, hence

    P[NB(d, 1/2) <= k] = P[B(k + d, 1/2) <= k].

Small-n values (n <= 4096 tosses) are computed with exact integer arithmetic
and correctly rounded to double, which keeps CDFs monotone in k and makes
dyadic values such as P[B(5,1/2) <= 0] = 1/32 exact.  Larger n sums the
smaller tail in linear space anchored at its largest term (evaluated once in
extended precision, since double log-gamma differences cancel too badly),
with the remaining O(sqrt(n)) contributing terms reconstructed from a
cumulative sum of log ratios.
"""

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ._util import DomainError

_EXACT_N = 4096


def _exact_tail_sum(n, j_hi):
    """Sum of C(n, j) for j = 0..j_hi as an exact integer (j_hi < n)."""
    term = 1
    total = 1
    for j in range(j_hi):
        term = term * (n - j) // (j + 1)
        total += term
    return total


def _anchor_term(n, k):
    """C(n, k) * 2^-n correctly rounded for practical purposes, any n.

    log C(n, k) - n log 2 is a difference of ~n-sized quantities whose
    result is O(log n): double-precision log-gamma cannot deliver 1e-12
    relative accuracy after that cancellation, so the anchor is evaluated
    at 40 significant digits and rounded once.
    """
    import mpmath

    with mpmath.workdps(40):
        log_t = (mpmath.loggamma(n + 1) - mpmath.loggamma(k + 1)
                 - mpmath.loggamma(n - k + 1) - n * mpmath.log(2))
        return float(mpmath.exp(log_t))


def _anchored_tail_sum(n, j_hi):
    """sum_{j=0}^{j_hi} C(n, j) 2^-n for j_hi <= (n-1)//2 and large n.

    The tail's largest term sits at j = j_hi and the rest decay at least
    geometrically, so only O(sqrt(n)) of them rise above double noise.  Each
    term is reconstructed from the anchor and a cumulative sum of log ratios
    rather than a running product, which keeps rounding from compounding.
    """
    t = _anchor_term(n, j_hi)
    if t == 0.0 or j_hi == 0:
        return t
    count = min(j_hi, int(5.2 * math.sqrt(n)) + 60)
    j = np.arange(j_hi, j_hi - count, -1.0)
    cum = np.cumsum(np.log(j / (n - j + 1.0)))
    return t + float(t * np.sum(np.exp(cum)))


@lru_cache(maxsize=1 << 16)
def _binom_half(n, k, upper):
    """P[B(n,1/2) <= k] (upper=False) or P[B(n,1/2) > k] (upper=True).

    Assumes 0 <= k < n.  Always sums over the smaller of the two tails so
    tiny probabilities keep full relative precision.
    """
    # P[B > k] = P[B <= n-k-1] by the symmetry of p = 1/2.
    if upper:
        return _binom_half(n, n - k - 1, False)
    if k > (n - 1) // 2:
        # complement is the smaller tail
        if n <= _EXACT_N:
            return float(1 - Fraction(_exact_tail_sum(n, n - k - 1), 2 ** n))
        return 1.0 - _anchored_tail_sum(n, n - k - 1)
    if n <= _EXACT_N:
        return float(Fraction(_exact_tail_sum(n, k), 2 ** n))
    return _anchored_tail_sum(n, k)


def binom_cdf_half(n, k):
    """P[B(n, 1/2) <= k] for integer k; 0 below the support, 1 at or above n."""
    n = int(n)
    if n < 0:
        raise DomainError(f"binomial trial count must be >= 0, got {n}")
    k = int(k)
    if k < 0:
        return 0.0
    if k >= n:
        return 1.0
    return _binom_half(n, k, False)


def nb_cdf_half(d, k):
    """P[NB(d, 1/2) <= k]: at most k successes before the d-th failure."""
    d = int(d)
    if d < 1:
        raise DomainError(f"negative-binomial failure count must be >= 1, got {d}")
    k = int(k)
    if k < 0:
        return 0.0
    return binom_cdf_half(d + k, k)


def nb_upper_tail(d, k):
    """P[NB(d, 1/2) >= k]; equals 1 for k <= 0.

    Computed by summing the upper binomial tail directly rather than as
    1 - nb_cdf_half(d, k-1), so values deep in the tail keep full relative
    precision.
    """
    d = int(d)
    if d < 1:
        raise DomainError(f"negative-binomial failure count must be >= 1, got {d}")
    k = int(k)
    if k <= 0:
        return 1.0
    # P[NB >= k] = P[B(k-1+d, 1/2) > k-1]
    return _binom_half(k - 1 + d, k - 1, True)


@lru_cache(maxsize=1 << 15)
def nb_quantile(d, q):
    """Smallest integer i with P[NB(d, 1/2) <= i] >= q, for q in (0, 1).

    Exponential bracketing followed by binary search on the integer CDF;
    the result is exact (verified against the CDF at i and i - 1).
    """
    d = int(d)
    if d < 1:
        raise DomainError(f"negative-binomial failure count must be >= 1, got {d}")
    if not (0.0 < q < 1.0):
        raise DomainError(f"quantile level must be in (0, 1), got {q!r}")
    lo = -1  # CDF(-1) = 0 < q
    hi = max(1, d)
    while nb_cdf_half(d, hi) < q:
        lo = hi
        hi = 2 * hi + 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if nb_cdf_half(d, mid) >= q:
            hi = mid
        else:
            lo = mid
    return hi
