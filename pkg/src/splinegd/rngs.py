"""Deterministic random streams.

All randomness in the package flows through PCG64 generators keyed by
(seed, domain) pairs, with explicit transforms on top of raw 53-bit
integers.  Gaussian variates use the inverse CDF rather than numpy's
ziggurat sampler, so a stored seed reproduces noise vectors bit-for-bit
regardless of numpy's internal normal() implementation.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

# Domain tags keep independent purposes on independent streams even when
# the user passes the same integer seed to each of them.
DOMAIN_INIT = 0
DOMAIN_NOISE = 1
DOMAIN_TEST = 2
DOMAIN_PROBE = 3

_TWO53 = 1 << 53


def generator(seed: int, domain: int = 0) -> np.random.Generator:
    """PCG64 generator keyed by (seed, domain)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, domain])))


def uniforms(rng: np.random.Generator, size) -> np.ndarray:
    """Uniform draws in [0, 1) built from raw 53-bit integers."""
    return rng.integers(0, _TWO53, size=size, dtype=np.int64) / _TWO53


def open_uniforms(rng: np.random.Generator, size) -> np.ndarray:
    """Uniform draws in the open interval (0, 1), safe for inverse CDFs."""
    return rng.integers(1, _TWO53, size=size, dtype=np.int64) / _TWO53


def uniform_range(rng: np.random.Generator, lo: float, hi: float, size) -> np.ndarray:
    return lo + (hi - lo) * uniforms(rng, size)


def gaussians(rng: np.random.Generator, sigma: float, size) -> np.ndarray:
    """N(0, sigma^2) draws via the inverse normal CDF."""
    return sigma * ndtri(open_uniforms(rng, size))


def unit_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    """A uniformly random direction (Gaussian normalized)."""
    v = ndtri(open_uniforms(rng, dim))
    return v / np.linalg.norm(v)
