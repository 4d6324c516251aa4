"""Delay-Doppler grid modulation over K Doppler x L delay bins.

Symbols X[k, l] (row = Doppler, column = delay) are carried to the time
domain by an inverse SFFT followed by a rectangular-pulse Heisenberg
transform; on the sample grid the chain collapses to a per-delay-column
inverse DFT across the Doppler axis,

    s[n L + u] = (1/sqrt(K)) sum_k X[k, u] e^{j 2 pi n k / K},

whose exact adjoint is the demodulator, so D = M^H and D M = I.  Vectors use
the column-major (delay-major) convention vec index = l*K + k; the
Doppler-shift precoder structure (I_L kron Pi_K) depends on it.

Two pulse modes exist for the *channel* map.  "rect" conjugates the
time-domain channel by the exact discrete transforms.  "biorth" imposes the
ideal bi-orthogonal input-output relation

    Y[k, l] = sum_i h_i e^{-j 2 pi k_i l_i / (KL)} X[(k - k_i)_K, (l - l_i)_L]

directly as the channel map: no discrete unitary realizes it exactly (time
delay and Doppler generators do not commute, grid shifts do), so it is a
definition, not an approximation of something else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, time_channel_matrix

RECT = "rect"
BIORTH = "biorth"


@dataclass(frozen=True)
class OtfsConfig:
    """Grid dimensions and pulse mode; frame length N = K*L."""

    K: int
    L: int
    pulse: str = RECT

    def __post_init__(self):
        if self.K < 1 or self.L < 1:
            raise ValueError(f"K, L must be >= 1, got K={self.K}, L={self.L}")
        if self.pulse not in (RECT, BIORTH):
            raise ValueError(f"pulse must be '{RECT}' or '{BIORTH}', got {self.pulse!r}")

    @property
    def N(self) -> int:
        return self.K * self.L


def grid_to_vec(X: np.ndarray) -> np.ndarray:
    """Column-major vectorization: vec[l*K + k] = X[k, l]."""
    return np.reshape(X, -1, order="F")


def vec_to_grid(x: np.ndarray, cfg: OtfsConfig) -> np.ndarray:
    """Inverse of grid_to_vec."""
    return np.reshape(x, (cfg.K, cfg.L), order="F")


def otfs_modulate(X: np.ndarray, cfg: OtfsConfig) -> np.ndarray:
    """Time-domain frame of length K*L; norm-preserving."""
    if X.shape != (cfg.K, cfg.L):
        raise ValueError(f"grid shape {X.shape} != (K={cfg.K}, L={cfg.L})")
    # slots[n, u] = (1/sqrt(K)) sum_k X[k, u] e^{j2pi nk/K}
    slots = np.fft.ifft(X, axis=0) * np.sqrt(cfg.K)
    return slots.reshape(cfg.N)  # s[n*L + u] = slots[n, u]


def otfs_demodulate(d: np.ndarray, cfg: OtfsConfig) -> np.ndarray:
    """DD grid recovered from a time-domain frame (exact adjoint of modulate)."""
    if len(d) != cfg.N:
        raise ValueError(f"len(d) = {len(d)} != K*L = {cfg.N}")
    slots = d.reshape(cfg.K, cfg.L)
    return np.fft.fft(slots, axis=0) / np.sqrt(cfg.K)


def modulation_matrix(cfg: OtfsConfig) -> np.ndarray:
    """Dense M with s = M @ vec(X); unitary. Demodulation matrix is M^H."""
    M = np.zeros((cfg.N, cfg.N), dtype=complex)
    for l in range(cfg.L):
        for k in range(cfg.K):
            X = np.zeros((cfg.K, cfg.L), dtype=complex)
            X[k, l] = 1.0
            M[:, l * cfg.K + k] = otfs_modulate(X, cfg)
    return M


def otfs_effective_channel(ch: ChannelRealization, cfg: OtfsConfig) -> np.ndarray:
    """KL x KL matrix taking vec(X) to vec(Y) noiselessly.

    rect mode: D H M with the exact discrete transforms (valid for fractional
    Doppler).  biorth mode: the ideal closed form (integer Doppler required).
    """
    if cfg.pulse == RECT:
        M = modulation_matrix(cfg)
        H = time_channel_matrix(ch, cfg.N)
        return M.conj().T @ H @ M
    return otfs_matrix_from_taps(ch.gains(), ch.delays(), ch.dopplers(), cfg)


# --- closed-form tap route (integer Doppler only) ----------------------------
#
# Both pulse modes place path i at (row (k, l) -> column ((k-k_i)_K, (l-l_i)_L)).
# biorth coefficient: h_i e^{-j2pi k_i l_i/(KL)} (constant over rows).
# rect coefficient:   h_i e^{j2pi k_i l/(KL)} * e^{-j2pi (k-k_i)/K} if l < l_i,
#                     h_i e^{j2pi k_i l/(KL)} otherwise
# (derived by pushing the cyclic time-domain channel through the discrete
# transforms; cross-checked against D H M in the tests).


def otfs_tap_arrays(
    gains: np.ndarray, delays: np.ndarray, dopplers: np.ndarray, cfg: OtfsConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Per-path (cols, vals) of the effective channel in vec ordering.

    cols[i, r] is the source vec index feeding output vec index r through
    path i; vals[i, r] the coefficient.
    """
    K, L, N = cfg.K, cfg.L, cfg.N
    gains = np.asarray(gains)
    delays = np.asarray(delays, dtype=int)
    kk = np.asarray(dopplers, dtype=float)
    k_int = np.round(kk).astype(int)
    if np.any(np.abs(kk - k_int) > 1e-9):
        raise ValueError("closed-form taps need integer Doppler")

    r = np.arange(N)
    k_out = r % K  # vec index r = l*K + k
    l_out = r // K
    k_src = (k_out[None, :] - k_int[:, None]) % K
    l_src = (l_out[None, :] - delays[:, None]) % L
    cols = l_src * K + k_src

    if cfg.pulse == BIORTH:
        coeff = gains * np.exp(-2j * np.pi * k_int * delays / N)
        vals = np.broadcast_to(coeff[:, None], (len(gains), N)).copy()
    else:
        vals = gains[:, None] * np.exp(2j * np.pi * k_int[:, None] * l_out[None, :] / N)
        wrap = l_out[None, :] < delays[:, None]
        beta = np.exp(-2j * np.pi * (k_out[None, :] - k_int[:, None]) / K)
        vals = np.where(wrap, vals * beta, vals)
    return cols, vals


def otfs_matrix_from_taps(
    gains: np.ndarray, delays: np.ndarray, dopplers: np.ndarray, cfg: OtfsConfig
) -> np.ndarray:
    """Dense effective channel assembled from the closed-form taps."""
    cols, vals = otfs_tap_arrays(gains, delays, dopplers, cfg)
    H = np.zeros((cfg.N, cfg.N), dtype=complex)
    r = np.arange(cfg.N)
    for i in range(cols.shape[0]):
        np.add.at(H, (r, cols[i]), vals[i])
    return H


def otfs_apply_taps(
    x: np.ndarray,
    gains: np.ndarray,
    delays: np.ndarray,
    dopplers: np.ndarray,
    cfg: OtfsConfig,
) -> np.ndarray:
    """y = H_eff x using the closed-form taps, O(P N)."""
    cols, vals = otfs_tap_arrays(gains, delays, dopplers, cfg)
    return np.sum(vals * x[cols], axis=0)
