"""Chirp-multiplexed (DAFT-domain) modulation and its effective channel.

The transform matrix is A = Lambda_{c2} F Lambda_{c1} with
Lambda_c = diag(e^{-j2pi c q^2}); modulation is s = A^H x, demodulation
y = A d.  With c1 = (2(k_max + k_space) + 1)/(2N) and a large enough frame,
every integer-grid path lands on its own cyclic offset in the transform
domain (the separability property the diversity results rest on).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .channel import ChannelRealization, time_channel_matrix


@dataclass(frozen=True)
class AfdmConfig:
    """Frame length and chirp parameters; 2*N*c1 must be an integer.

    k_max/k_space/l_max describe the channel the frame is dimensioned for and
    are only needed by layout and planning helpers.
    """

    N: int
    c1: float
    c2: float = 0.0
    k_max: int | None = None
    k_space: int = 0
    l_max: int | None = None

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        # accept exact rationals (e.g. from optimal_c1) but store plain floats
        object.__setattr__(self, "c1", float(self.c1))
        object.__setattr__(self, "c2", float(self.c2))
        two_n_c1 = 2 * self.N * self.c1
        if abs(two_n_c1 - round(two_n_c1)) > 1e-9:
            raise ValueError(f"2*N*c1 = {two_n_c1} is not an integer")

    @property
    def two_n_c1(self) -> int:
        return round(2 * self.N * self.c1)


@dataclass(frozen=True)
class DaftDomainChannel:
    """Effective transform-domain channel plus per-path cyclic offsets."""

    matrix: np.ndarray
    per_path_indicators: tuple[int, ...]


_daft_cache: dict[tuple[int, float, float], np.ndarray] = {}


def daft_matrix(cfg: AfdmConfig) -> np.ndarray:
    """Return A with entries A[m, n] = e^{-j2pi(c2 m^2 + mn/N + c1 n^2)}/sqrt(N)."""
    key = (cfg.N, cfg.c1, cfg.c2)
    if key not in _daft_cache:
        q = np.arange(cfg.N)
        lam1 = np.exp(-2j * np.pi * cfg.c1 * q * q)
        lam2 = np.exp(-2j * np.pi * cfg.c2 * q * q)
        F = np.exp(-2j * np.pi * np.outer(q, q) / cfg.N) / np.sqrt(cfg.N)
        _daft_cache[key] = lam2[:, None] * F * lam1[None, :]
    return _daft_cache[key]


def afdm_modulate(x: np.ndarray, cfg: AfdmConfig) -> np.ndarray:
    """s = A^H x, computed with an FFT (A^H = Lambda_{c1}^H F^H Lambda_{c2}^H)."""
    if len(x) != cfg.N:
        raise ValueError(f"len(x) = {len(x)} != N = {cfg.N}")
    q = np.arange(cfg.N)
    lam1c = np.exp(2j * np.pi * cfg.c1 * q * q)
    lam2c = np.exp(2j * np.pi * cfg.c2 * q * q)
    return lam1c * (np.fft.ifft(lam2c * x) * np.sqrt(cfg.N))


def afdm_demodulate(d: np.ndarray, cfg: AfdmConfig) -> np.ndarray:
    """y = A d, computed with an FFT."""
    if len(d) != cfg.N:
        raise ValueError(f"len(d) = {len(d)} != N = {cfg.N}")
    q = np.arange(cfg.N)
    lam1 = np.exp(-2j * np.pi * cfg.c1 * q * q)
    lam2 = np.exp(-2j * np.pi * cfg.c2 * q * q)
    return lam2 * (np.fft.fft(lam1 * d) / np.sqrt(cfg.N))


def optimal_c1(
    k_max: int, k_space: int, N: int, l_max: int | None = None
) -> tuple[Fraction, bool | None]:
    """Return the diversity-optimal c1 = (2(k_max+k_space)+1)/(2N).

    The second element reports whether the frame-size condition
    N >= (l_max+1)(2(k_max+k_space)+1) holds (None if l_max is not given).
    Violation is the caller's problem to act on; it is not an error here.
    """
    c1 = Fraction(2 * (k_max + k_space) + 1, 2 * N)
    fits = None
    if l_max is not None:
        fits = N >= (l_max + 1) * (2 * (k_max + k_space) + 1)
    return c1, fits


def index_indicator(l: int, k: int, cfg: AfdmConfig) -> int:
    """Cyclic offset ind = (2Nc1*l - k) mod N at which a path places symbols."""
    k_int = round(k)
    if abs(k - k_int) > 1e-9:
        raise ValueError(f"index indicator needs integer Doppler, got {k}")
    return (cfg.two_n_c1 * l - k_int) % cfg.N


def afdm_effective_channel(ch: ChannelRealization, cfg: AfdmConfig) -> DaftDomainChannel:
    """Exact transform-domain channel A H A^H (valid for fractional Doppler).

    Per-path indicators are reported for integer-Doppler paths; a fractional
    path contributes None in that slot.
    """
    A = daft_matrix(cfg)
    H = time_channel_matrix(ch, cfg.N)
    inds = tuple(
        index_indicator(p.delay, p.doppler, cfg)
        if abs(p.doppler - round(p.doppler)) < 1e-9
        else None
        for p in ch.paths
    )
    return DaftDomainChannel(matrix=A @ H @ A.conj().T, per_path_indicators=inds)


# --- closed-form tap route (integer Doppler only) ----------------------------
#
# For an integer-grid path (h, l, k) the transform-domain channel has one
# entry per row: row m takes column m' = (m + ind) mod N with coefficient
# h * e^{j(2pi/N)(N c1 l^2 - m' l + N c2 (m'^2 - m^2))}.  This is the fast
# route the Monte-Carlo harness uses at large N; it is cross-checked against
# the exact A H A^H product in the tests.


def afdm_tap_arrays(
    gains: np.ndarray, delays: np.ndarray, dopplers: np.ndarray, cfg: AfdmConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-path row coefficients of the effective channel.

    Returns (inds, cols, vals): inds (P,) int, cols (P, N) int with
    cols[i, m] = (m + ind_i) mod N, and vals (P, N) complex with the row-m
    coefficient of path i.
    """
    N = cfg.N
    gains = np.asarray(gains)
    delays = np.asarray(delays, dtype=int)
    kk = np.asarray(dopplers, dtype=float)
    k_int = np.round(kk).astype(int)
    if np.any(np.abs(kk - k_int) > 1e-9):
        raise ValueError("closed-form taps need integer Doppler")
    if (cfg.two_n_c1 * N) % 2:
        # cyclic delay wrap contributes e^{j 2 pi c1 N^2} = (-1)^{2Nc1 * N},
        # so the per-row form is exact only when 2Nc1 * N is even
        raise ValueError("closed-form taps need 2*N*c1 * N even; use the dense route")
    inds = (cfg.two_n_c1 * delays - k_int) % N
    m = np.arange(N)
    cols = (m[None, :] + inds[:, None]) % N
    phase = (
        N * cfg.c1 * delays[:, None] ** 2
        - cols * delays[:, None]
        + N * cfg.c2 * (cols.astype(float) ** 2 - m[None, :].astype(float) ** 2)
    )
    vals = gains[:, None] * np.exp(2j * np.pi * phase / N)
    return inds, cols, vals


def afdm_matrix_from_taps(
    gains: np.ndarray, delays: np.ndarray, dopplers: np.ndarray, cfg: AfdmConfig
) -> np.ndarray:
    """Dense effective channel assembled from the closed-form taps."""
    _, cols, vals = afdm_tap_arrays(gains, delays, dopplers, cfg)
    H = np.zeros((cfg.N, cfg.N), dtype=complex)
    m = np.arange(cfg.N)
    for i in range(cols.shape[0]):
        # += via add.at: two paths may share an offset when not separable
        np.add.at(H, (m, cols[i]), vals[i])
    return H


def afdm_apply_taps(
    x: np.ndarray,
    gains: np.ndarray,
    delays: np.ndarray,
    dopplers: np.ndarray,
    cfg: AfdmConfig,
) -> np.ndarray:
    """y = H_eff x using the closed-form taps, O(P N)."""
    _, cols, vals = afdm_tap_arrays(gains, delays, dopplers, cfg)
    return np.sum(vals * x[cols], axis=0)
