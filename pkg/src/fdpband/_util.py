"""Shared plumbing: error types, seed derivation, RNG coercion."""

import numpy as np

# Default seed used by the CLI when none is given; documented in --help and README.
DEFAULT_SEED = 1729


class DomainError(ValueError):
    """A value is outside the domain an operation is defined on."""


class ConfigurationError(RuntimeError):
    """A required resource (quantile table coverage, file version) is missing."""


_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(seed, index):
    """Mix (seed, index) into a 64-bit child seed.

    splitmix64 finalizer applied to seed + (index+1) * golden-ratio increment.
    Children for distinct indices are statistically independent streams, and
    the mapping does not depend on how work is later partitioned, so derived
    results are reproducible under any degree of parallelism.
    """
    z = (int(seed) + (int(index) + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def child_rng(seed, index):
    """Generator seeded from splitmix64(seed, index)."""
    return np.random.default_rng(splitmix64(seed, index))


def as_rng(rng):
    """Coerce an int seed or Generator into a numpy Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        raise DomainError("an explicit seed or Generator is required")
    return np.random.default_rng(rng)


def check_unit_open(name, value):
    """Require value in the open interval (0, 1)."""
    if not (0.0 < value < 1.0):
        raise DomainError(f"{name} must be in (0, 1), got {value!r}")
    return float(value)
