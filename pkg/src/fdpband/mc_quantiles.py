"""Monte-Carlo estimation of the band quantiles, with persisted tables.

A simulated path tracks U_d, the number of successes before the d-th failure
in a fair-coin sequence, for d = 1..d0.  Two per-path running statistics are
kept: the running minimum of the tail-probability transform G_d(U_d) (whose
empirical gamma-quantile neighborhood gives the uniform band's common level)
and the running maximum of the standardized transform (U_d - d)/sqrt(2d)
(whose empirical 1-gamma quantile gives the standardized band's multiplier).

For each (gamma, d) the uniform table stores the two attained values rho <
sigma that straddle coverage gamma, together with their empirical coverages
r <= gamma < s.  A randomized draw mixes them with weight w = (s - gamma) /
(s - r) on rho, which makes the mixed coverage exactly gamma.

Tables are deterministic given (d0, gammas, N, seed): paths are simulated in
fixed-size blocks whose generators derive from (seed, block index), so the
result does not depend on the degree of parallelism.
"""

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._util import ConfigurationError, DomainError, as_rng, child_rng
from .distributions import nb_upper_tail

_BLOCK_PATHS = 16384
_EXACT_WINDOW_LIMIT = 8192
DEFAULT_GAMMAS = (0.1, 0.05, 0.01, 0.001)
DEFAULT_SAMPLES = 100_000
DEFAULT_D0 = 1000


@dataclass(frozen=True)
class UniformQuantileTable:
    """Per (gamma, d): columns rho, r, sigma, s, each array indexed by d-1."""

    gammas: tuple
    d0: int
    n_samples: int
    seed: int
    entries: dict

    def entry(self, gamma, d):
        if gamma not in self.entries or not (1 <= d <= self.d0):
            raise ConfigurationError(
                f"uniform quantile table has no entry for gamma={gamma}, d={d} "
                f"(covers gammas={list(self.gammas)}, d up to {self.d0})")
        cols = self.entries[gamma]
        return tuple(float(cols[name][d - 1]) for name in ("rho", "r", "sigma", "s"))


@dataclass(frozen=True)
class StandardizedQuantileTable:
    """Per gamma: the empirical 1-gamma quantile of the running max, by d."""

    gammas: tuple
    d0: int
    n_samples: int
    seed: int
    z: dict

    def entry(self, gamma, d):
        if gamma not in self.z or not (1 <= d <= self.d0):
            raise ConfigurationError(
                f"standardized quantile table has no entry for gamma={gamma}, d={d} "
                f"(covers gammas={list(self.gammas)}, d up to {self.d0})")
        return float(self.z[gamma][d - 1])


def _tail_window(d, k_min, k_max):
    """G_d(k) = P[NB(d,1/2) >= k] for k = k_min..k_max, as float64.

    Exact big-integer evaluation when the window is small enough (values are
    then correctly rounded doubles and exactly monotone); otherwise a float
    recurrence seeded by one accurate tail evaluation.
    """
    size = k_max - k_min + 1
    if k_max + d <= _EXACT_WINDOW_LIMIT:
        out = np.empty(size)
        c = 1  # C(k + d - 1, k), advanced incrementally from k = 0
        if k_min == 0:
            g = Fraction(1)
        else:
            # G(k_min) = 1 - CDF(k_min - 1), with the CDF terms C(j+d-1, j)
            # 2^-(j+d) accumulated over a common power-of-two denominator
            acc = 0
            for j in range(k_min):
                acc += c * 2 ** (k_min - 1 - j)
                c = c * (j + d) // (j + 1)
            g = 1 - Fraction(acc, 2 ** (k_min - 1 + d))
        for k in range(k_min, k_max + 1):
            out[k - k_min] = float(g)
            g -= Fraction(c, 2 ** (k + d))
            c = c * (k + d) // (k + 1)
        return out
    out = np.empty(size)
    g = nb_upper_tail(d, k_min)
    f = math.exp(
        math.lgamma(k_min + d) - math.lgamma(k_min + 1) - math.lgamma(d)
        - (k_min + d) * math.log(2.0))
    for k in range(k_min, k_max + 1):
        out[k - k_min] = g
        g = max(g - f, 0.0)
        f *= (k + d) / (2.0 * (k + 1))
    return out


def _select_neighborhood(m_values, gamma, n):
    """(rho, r, sigma, s) for the coverage-gamma neighborhood of sorted ranks.

    rho is the largest attained value whose empirical coverage is <= gamma,
    sigma the next attained value.  If no attained value qualifies, fall back
    to rho = 0 with r = 0 (a conservative, never-attained threshold).
    """
    q = int(Fraction(gamma) * n)  # floor, exact for the given float gamma
    if q <= 0:
        v_hi = m_values.min()
    else:
        v_hi = np.partition(m_values, q)[q]
    c_lt = int(np.count_nonzero(m_values < v_hi))
    c_le = int(np.count_nonzero(m_values <= v_hi))
    if c_lt == 0:
        return 0.0, 0.0, float(v_hi), c_le / n
    rho = float(m_values[m_values < v_hi].max())
    return rho, c_lt / n, float(v_hi), c_le / n


def build_tables(d0=DEFAULT_D0, gammas=DEFAULT_GAMMAS, n_samples=DEFAULT_SAMPLES,
                 seed=0, parallelism=1):
    """Simulate n_samples paths out to d0 failures and extract both tables.

    gammas must lie in (0, 0.5]; n_samples >= 1000.  Memory is O(n_samples):
    per-path state is updated failure by failure and each d is reduced to its
    order statistics before moving on.
    """
    if d0 < 1:
        raise DomainError(f"d0 must be >= 1, got {d0}")
    if n_samples < 1000:
        raise DomainError(f"n_samples must be >= 1000, got {n_samples}")
    gammas = tuple(float(g) for g in gammas)
    if len(set(gammas)) != len(gammas):
        raise DomainError("gammas must be distinct")
    for g in gammas:
        if not (0.0 < g <= 0.5):
            raise DomainError(f"gamma values must be in (0, 0.5], got {g}")
    seed = int(seed)

    n_blocks = (n_samples + _BLOCK_PATHS - 1) // _BLOCK_PATHS
    slices = [slice(b * _BLOCK_PATHS, min((b + 1) * _BLOCK_PATHS, n_samples))
              for b in range(n_blocks)]
    rngs = [child_rng(seed, b) for b in range(n_blocks)]

    u = np.zeros(n_samples, dtype=np.int64)       # U_d per path
    run_min = np.ones(n_samples)                  # min of G_d(U_d) so far
    run_max = np.full(n_samples, -np.inf)         # max of standardized U_d

    uniform_cols = {g: {name: np.empty(d0) for name in ("rho", "r", "sigma", "s")}
                    for g in gammas}
    z_cols = {g: np.empty(d0) for g in gammas}

    def advance(block):
        sl = slices[block]
        u[sl] += rngs[block].geometric(0.5, size=sl.stop - sl.start) - 1

    pool = ThreadPoolExecutor(max_workers=parallelism) if parallelism > 1 else None
    try:
        for d in range(1, d0 + 1):
            if pool is None:
                for b in range(n_blocks):
                    advance(b)
            else:
                list(pool.map(advance, range(n_blocks)))
            window = _tail_window(d, int(u.min()), int(u.max()))
            np.minimum(run_min, window[u - int(u.min())], out=run_min)
            np.maximum(run_max, (u - d) / math.sqrt(2.0 * d), out=run_max)
            for g in gammas:
                rho, r, sigma, s = _select_neighborhood(run_min, g, n_samples)
                cols = uniform_cols[g]
                cols["rho"][d - 1] = rho
                cols["r"][d - 1] = r
                cols["sigma"][d - 1] = sigma
                cols["s"][d - 1] = s
                rank = math.ceil((1 - Fraction(g)) * n_samples)
                z_cols[g][d - 1] = np.partition(run_max, rank - 1)[rank - 1]
    finally:
        if pool is not None:
            pool.shutdown()

    uniform = UniformQuantileTable(gammas, d0, n_samples, seed, uniform_cols)
    standardized = StandardizedQuantileTable(gammas, d0, n_samples, seed, z_cols)
    return uniform, standardized


def draw_u_gamma(table, d_max, gamma, mode="randomized", rng=None):
    """The uniform band's common level for the index set {1..d_max}.

    conservative: the attained value rho with coverage <= gamma.  randomized:
    rho with probability w = (s - gamma)/(s - r), else sigma, so the expected
    coverage is exactly gamma.
    """
    rho, r, sigma, s = table.entry(gamma, d_max)
    if mode == "conservative":
        return rho
    if mode != "randomized":
        raise DomainError(f"unknown draw mode {mode!r}")
    if r == gamma:
        return rho
    w = (s - gamma) / (s - r)
    return rho if as_rng(rng).random() < w else sigma


def z_quantile(table, d_max, gamma):
    """Stored 1-gamma quantile of the running max out to d_max (lookup only)."""
    return table.entry(gamma, d_max)


_MAGIC = "fdpband-table v1"


def _format_float(x):
    return repr(float(x))


def save_table(table, path):
    """Write a table in the versioned line-oriented text format.

    Records are tab-separated full-precision decimals, one per (gamma, d),
    and the file ends with a sha256 checksum of everything before it.
    """
    lines = [_MAGIC]
    if isinstance(table, UniformQuantileTable):
        lines.append("kind=uniform")
    elif isinstance(table, StandardizedQuantileTable):
        lines.append("kind=standardized")
    else:
        raise DomainError(f"not a quantile table: {type(table).__name__}")
    lines.append(f"seed={table.seed} N={table.n_samples} d0={table.d0}")
    for g in table.gammas:
        for d in range(1, table.d0 + 1):
            if isinstance(table, UniformQuantileTable):
                rho, r, sigma, s = table.entry(g, d)
                fields = (g, d, rho, r, sigma, s)
            else:
                fields = (g, d, table.entry(g, d))
            lines.append("\t".join(
                str(f) if isinstance(f, int) else _format_float(f) for f in fields))
    body = "".join(line + "\n" for line in lines)
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(body)
        fh.write(f"checksum={digest}\n")


def _parse_header(lines):
    if not lines or lines[0] != _MAGIC:
        found = lines[0] if lines else "<empty file>"
        raise ConfigurationError(f"unsupported table version: {found!r}")
    if len(lines) < 3 or not lines[1].startswith("kind="):
        raise ConfigurationError("table header is missing the kind line")
    kind = lines[1][len("kind="):]
    if kind not in ("uniform", "standardized"):
        raise ConfigurationError(f"unknown table kind {kind!r}")
    meta = {}
    for tok in lines[2].split():
        key, _, val = tok.partition("=")
        meta[key] = int(val)
    for key in ("seed", "N", "d0"):
        if key not in meta:
            raise ConfigurationError(f"table header is missing {key}")
    return kind, meta


def load_table(path):
    """Read a table written by save_table, verifying checksum and invariants."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        content = fh.read()
    lines = content.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != _MAGIC:
        found = lines[0] if lines else "<empty file>"
        raise ConfigurationError(f"unsupported table version: {found!r}")
    if not lines[-1].startswith("checksum="):
        raise ConfigurationError("table file is missing its checksum line")
    claimed = lines[-1][len("checksum="):]
    body = "".join(line + "\n" for line in lines[:-1])
    actual = hashlib.sha256(body.encode("utf-8")).hexdigest()
    if claimed != actual:
        raise ConfigurationError("table checksum mismatch: file is corrupted")
    kind, meta = _parse_header(lines[:-1])
    d0, n_samples, seed = meta["d0"], meta["N"], meta["seed"]

    gammas = []
    records = {}
    for line in lines[3:-1]:
        fields = line.split("\t")
        g = float(fields[0])
        d = int(fields[1])
        if g not in records:
            gammas.append(g)
            records[g] = {}
        records[g][d] = tuple(float(f) for f in fields[2:])

    expected_ds = set(range(1, d0 + 1))
    for g in gammas:
        if set(records[g]) != expected_ds:
            raise ConfigurationError(f"table records for gamma={g} do not cover d=1..{d0}")

    if kind == "uniform":
        entries = {}
        for g in gammas:
            cols = {name: np.empty(d0) for name in ("rho", "r", "sigma", "s")}
            for d in range(1, d0 + 1):
                rho, r, sigma, s = records[g][d]
                if not (rho < sigma):
                    raise ConfigurationError(
                        f"invalid table entry at gamma={g}, d={d}: rho >= sigma")
                if not (0.0 <= r <= g < s <= 1.0):
                    raise ConfigurationError(
                        f"invalid table entry at gamma={g}, d={d}: "
                        f"coverages must satisfy r <= gamma < s")
                cols["rho"][d - 1] = rho
                cols["r"][d - 1] = r
                cols["sigma"][d - 1] = sigma
                cols["s"][d - 1] = s
            entries[g] = cols
        return UniformQuantileTable(tuple(gammas), d0, n_samples, seed, entries)

    z = {}
    for g in gammas:
        col = np.empty(d0)
        for d in range(1, d0 + 1):
            (zval,) = records[g][d]
            col[d - 1] = zval
        if np.any(np.diff(col) < 0):
            raise ConfigurationError(
                f"invalid table entries for gamma={g}: z must be non-decreasing in d")
        z[g] = col
    return StandardizedQuantileTable(tuple(gammas), d0, n_samples, seed, z)
