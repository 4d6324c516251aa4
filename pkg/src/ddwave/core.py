"""Shared numeric primitives: shift generator matrices, DFT, seeded RNG streams.

Complex vectors and matrices are plain ``numpy.ndarray`` with dtype complex128.
All equality checks in tests take explicit absolute tolerances; the two
defaults below separate exact algebraic identities from error accumulated in
chained matrix products.
"""

from __future__ import annotations

import numpy as np

# absolute tolerances: exact single identities vs chained products
ATOL_EXACT = 1e-10
ATOL_CHAIN = 1e-9


def forward_cyclic_shift(N: int, p: int = 1) -> np.ndarray:
    """Return the N x N forward cyclic-shift matrix raised to the power p.

    The one-step matrix maps basis vector e_n to e_{(n+1) mod N}, i.e. it has
    ones on the subdiagonal and in the top-right corner; acting on a vector,
    (Pi x)[n] = x[(n-1) mod N].  Any integer p is reduced mod N.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    mat = np.zeros((N, N), dtype=complex)
    cols = np.arange(N)
    mat[(cols + p) % N, cols] = 1.0
    return mat


def doppler_shift(N: int, k: float) -> np.ndarray:
    """Return the N x N digital frequency-shift matrix diag(e^{j2pi k n/N}).

    k may be fractional.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    n = np.arange(N)
    return np.diag(np.exp(2j * np.pi * k * n / N))


def dft_matrix(N: int) -> np.ndarray:
    """Return the unitary N x N DFT matrix with entries e^{-j2pi mn/N}/sqrt(N)."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    m = np.arange(N)
    return np.exp(-2j * np.pi * np.outer(m, m) / N) / np.sqrt(N)


def rng_stream(master_seed: int, *stream_key: int) -> np.random.Generator:
    """Return a Generator for the sub-stream identified by stream_key.

    Identical (master_seed, stream_key) reproduce identical draw sequences;
    distinct keys give statistically independent streams.  Negative key parts
    are not allowed (SeedSequence spawn keys are non-negative).
    """
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(stream_key))
    return np.random.default_rng(seq)


def crandn(rng: np.random.Generator, *shape: int) -> np.ndarray:
    """Draw circularly symmetric complex Gaussian CN(0, 1) samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
