"""Seeded data generators with ground truth.

The spectrum-ID model draws, per spectrum, a generating-peptide score X
(native spectra only; foreign spectra get the -inf sentinel), a best-other-
target score Y, and a best-decoy score Z~.  The observed target score is
max(X, Y), and the hypothesis is a true null exactly when max(Y, Z~) > X.
With calibrated scores Y and Z~ come from nearly the same null law, so true
nulls are (approximately) fair coins in the target/decoy competition; the
uncalibrated variant additionally warps each spectrum's three scores through
one inverse Gumbel CDF, which changes the score scale but not any
within-spectrum comparison.

The generic-null generator places a chosen number of always-target-win false
nulls at the top of the score order and gives every true null an exact fair-
coin label, so the fair-coin assumption holds exactly rather than
approximately; sharp calibration tests use it.
"""

from dataclasses import dataclass

import numpy as np

from ._util import DEFAULT_SEED, DomainError, as_rng
from .core import LabeledHypothesis, ScorePair, SimulationTruth


@dataclass(frozen=True)
class SpectrumIdParams:
    """Knobs of the spectrum-ID generator.

    pi0 is the foreign fraction; a, b shape the native generating-peptide
    score 1 - Beta(a, b); n_candidates is the candidate-list size behind the
    null scores.  location_scale_pool supplies per-spectrum Gumbel parameters
    for the uncalibrated variant.
    """

    m: int
    pi0: float
    a: float = 0.05
    b: float = 10.0
    n_candidates: int = 100
    calibrated: bool = True
    location_scale_pool: tuple = None
    seed: int = DEFAULT_SEED


def default_location_scale_pool(size=500, seed=DEFAULT_SEED):
    """Synthetic stand-in pool: location ~ U[20, 40], scale ~ U[3, 8].

    The published pool behind the uncalibrated variant is not distributable;
    any pool works because the transform is per-spectrum monotone.
    """
    rng = np.random.default_rng(seed)
    loc = rng.uniform(20.0, 40.0, size)
    scale = rng.uniform(3.0, 8.0, size)
    return tuple((float(l), float(s)) for l, s in zip(loc, scale))


def load_pool(path):
    """Read a location<TAB>scale pool file."""
    pool = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise DomainError(f"{path}:{lineno}: expected location<TAB>scale")
            pool.append((float(fields[0]), float(fields[1])))
    if not pool:
        raise DomainError(f"{path}: pool file has no entries")
    return tuple(pool)


def _validate_params(params):
    if params.m < 1:
        raise DomainError(f"m must be >= 1, got {params.m}")
    if not (0.0 <= params.pi0 <= 1.0):
        raise DomainError(f"pi0 must be in [0, 1], got {params.pi0}")
    if params.a <= 0 or params.b <= 0:
        raise DomainError("Beta shape parameters must be positive")
    if params.n_candidates < 2:
        raise DomainError("n_candidates must be >= 2")
    if not params.calibrated:
        pool = params.location_scale_pool
        if not pool:
            raise DomainError("uncalibrated scores need a location/scale pool")
        if any(s <= 0 for _, s in pool):
            raise DomainError("pool scale parameters must be positive")


def _gumbel_ppf(p, loc, scale):
    p = np.clip(p, 1e-300, 1.0 - 1e-16)
    return loc - scale * np.log(-np.log(p))


def _spectrum_id_arrays(params, rng):
    """(target, decoy, is_true_null) arrays for one draw of the model."""
    m, n = params.m, params.n_candidates
    native = rng.random(m) > params.pi0
    x = np.where(native, 1.0 - rng.beta(params.a, params.b, m), -np.inf)
    y = np.where(native,
                 1.0 - rng.beta(1.0, n - 1.0, m),
                 1.0 - rng.beta(1.0, float(n), m))
    z_decoy = 1.0 - rng.beta(1.0, float(n), m)
    is_null = np.maximum(y, z_decoy) > x
    target = np.maximum(x, y)

    if not params.calibrated:
        pool = np.asarray(params.location_scale_pool, dtype=np.float64)
        pick = rng.integers(0, len(pool), m)
        loc, scale = pool[pick, 0], pool[pick, 1]
        orig_label = target > z_decoy
        finite_x = np.isfinite(x)
        x = np.where(finite_x, _gumbel_ppf(np.where(finite_x, x, 0.5), loc, scale), -np.inf)
        y = _gumbel_ppf(y, loc, scale)
        z_decoy = _gumbel_ppf(z_decoy, loc, scale)
        target = np.maximum(x, y)
        # the per-spectrum transform is strictly increasing, so no
        # competition outcome may change
        assert np.array_equal(target > z_decoy, orig_label)
        assert np.array_equal(np.maximum(y, z_decoy) > x, is_null)

    return target, z_decoy, is_null


def gen_spectrum_id(params):
    """Draw one spectrum-ID dataset: (score pairs, ground truth)."""
    _validate_params(params)
    rng = as_rng(params.seed)
    target, decoy, is_null = _spectrum_id_arrays(params, rng)
    pairs = [ScorePair(float(t), float(d)) for t, d in zip(target, decoy)]
    return pairs, SimulationTruth(is_null)


def _generic_null_arrays(m, num_false, rng):
    """(scores, labels, is_true_null) with scores strictly decreasing.

    The num_false false nulls sit at the top of the score order with label +1
    (worst-case placement); every true null's label is an independent fair
    coin, exactly as the stepdown analysis assumes.
    """
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    if not (0 <= num_false <= m):
        raise DomainError(f"num_false must be in [0, m], got {num_false}")
    # integer parts from a permutation guarantee distinctness
    scores = np.sort(rng.permutation(m) + rng.random(m))[::-1]
    labels = np.ones(m, dtype=np.int8)
    labels[num_false:] = rng.integers(0, 2, m - num_false, dtype=np.int8) * 2 - 1
    is_null = np.ones(m, dtype=bool)
    is_null[:num_false] = False
    return scores, labels, is_null


def gen_generic_null(m, num_false, seed=DEFAULT_SEED):
    """Draw one generic-null dataset: (labeled hypotheses, ground truth)."""
    rng = as_rng(seed)
    scores, labels, is_null = _generic_null_arrays(m, num_false, rng)
    labeled = [LabeledHypothesis(float(s), int(l)) for s, l in zip(scores, labels)]
    return labeled, SimulationTruth(is_null)
