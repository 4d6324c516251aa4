"""Embedded-pilot frame layouts and a threshold channel estimator.

A pilot cell is surrounded by enough nulled guard cells that, inside the
observation window, the received frame is the pilot's channel response plus
noise.  Each integer (doppler, delay) hypothesis maps to one observation
cell, so taps are read off by thresholding and inverting the known per-cell
coefficient.  This is a deliberately simple single-pilot detector, not a
full diagonal-reconstruction estimator; it is adequate at high pilot SNR.

Layout cell counts follow the closed-form overhead accounting in
:func:`ddwave.cdds.overhead`; the chirp-domain layouts assume the spacing
factor is matched to the widened Doppler extent (exact block tiling).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .afdm import afdm_matrix_from_taps, afdm_tap_arrays, index_indicator
from .cdds import AFDM, CDDS, MIMO, OTFS, SISO, overhead
from .otfs import otfs_matrix_from_taps, otfs_tap_arrays

DEFAULT_THRESHOLD = 3.0  # tap accepted when |y| > threshold * sqrt(n0)


@dataclass(frozen=True)
class PilotLayout:
    """Partition of a frame into pilot, guard, and data cells.

    Cells are modulation-domain vector indices (for the delay-Doppler grid,
    index = l*K + k).  l_ext/k_ext are the per-cell hypothesis extents the
    guards are sized for; widened by the step extents under CDDS.
    """

    waveform: str
    scheme: str
    n: int
    pilot_cells: tuple[int, ...]
    guard_cells: tuple[int, ...]
    data_cells: tuple[int, ...]
    l_ext: int
    k_ext: int
    shape: tuple[int, int] | None = None  # (K, L) for the grid waveform

    def __post_init__(self):
        cells = set(self.pilot_cells) | set(self.guard_cells) | set(self.data_cells)
        counted = len(self.pilot_cells) + len(self.guard_cells) + len(self.data_cells)
        if counted != self.n or cells != set(range(self.n)):
            raise ValueError("pilot, guard, and data cells must partition the frame")

    @property
    def overhead_cells(self) -> int:
        return len(self.pilot_cells) + len(self.guard_cells)


def _partition(n: int, pilots: list[int], zone: list[int]) -> tuple[tuple, tuple, tuple]:
    pilot_set = set(pilots)
    zone_set = set(zone)
    if len(zone) != len(zone_set):
        raise ValueError("pilot/guard zone wraps onto itself; frame too small")
    if not pilot_set <= zone_set:
        raise ValueError("pilot cells must lie inside the protected zone")
    guard = sorted(zone_set - pilot_set)
    data = sorted(set(range(n)) - zone_set)
    return tuple(sorted(pilot_set)), tuple(guard), tuple(data)


def build_layout(
    waveform: str,
    scheme: str,
    cfg,
    l_max: int,
    k_max: int,
    n_t: int = 1,
    l_shift_max: int = 0,
    k_shift_max: int = 0,
) -> PilotLayout:
    """Pilot-guard-data arrangement whose overhead matches the closed forms.

    cfg is an AfdmConfig or OtfsConfig (only the frame geometry is used).
    The single-TA and CDDS schemes place one pilot; the multi-TA scheme
    places one pilot per antenna in consecutive blocks.
    """
    if scheme not in (SISO, MIMO, CDDS):
        raise ValueError(f"no pilot arrangement for scheme {scheme!r}")
    if scheme == CDDS:
        le, ke = l_max + l_shift_max, k_max + k_shift_max
    else:
        le, ke = l_max, k_max
    n_pil = n_t if scheme == MIMO else 1

    if waveform == AFDM:
        N = cfg.N
        Q = (le + 1) * (2 * ke + 1)
        zone_len = (n_pil + 1) * Q - 1
        if zone_len > N:
            raise ValueError(f"pilot zone of {zone_len} cells exceeds frame size {N}")
        m0 = Q - 1
        pilots = [(m0 + t * Q) % N for t in range(n_pil)]
        zone = [(m0 - (Q - 1) + i) % N for i in range(zone_len)]
        pilot_cells, guard, data = _partition(N, pilots, zone)
        layout = PilotLayout(AFDM, scheme, N, pilot_cells, guard, data, le, ke)
    elif waveform == OTFS:
        K, L = cfg.K, cfg.L
        rows = n_pil * (le + 1) + le  # delay span
        cols = 4 * ke + 1  # Doppler span
        if rows > L or cols > K:
            raise ValueError(f"pilot zone of {rows}x{cols} cells exceeds grid {L}x{K}")
        k_p, l_p = 2 * ke, le
        pilots = [(l_p + t * (le + 1)) * K + k_p for t in range(n_pil)]
        zone = [
            (((l_p - le + i) % L) * K + ((k_p - 2 * ke + j) % K))
            for i in range(rows)
            for j in range(cols)
        ]
        pilot_cells, guard, data = _partition(K * L, pilots, zone)
        layout = PilotLayout(OTFS, scheme, K * L, pilot_cells, guard, data, le, ke, (K, L))
    else:
        raise ValueError(f"waveform must be '{AFDM}' or '{OTFS}', got {waveform!r}")

    expected = overhead(waveform, scheme, l_max, k_max, n_t, l_shift_max, k_shift_max)
    if layout.overhead_cells != expected:
        raise AssertionError(
            f"layout holds {layout.overhead_cells} overhead cells, accounting says {expected}"
        )
    return layout


def embed_frame(data_symbols: np.ndarray, layout: PilotLayout, pilot_amp: float) -> np.ndarray:
    """Frame vector with pilots at pilot_amp, zeros on guards, data elsewhere."""
    data_symbols = np.asarray(data_symbols)
    if data_symbols.shape != (len(layout.data_cells),):
        raise ValueError(
            f"expected {len(layout.data_cells)} data symbols, got {data_symbols.shape}"
        )
    x = np.zeros(layout.n, dtype=complex)
    x[list(layout.pilot_cells)] = pilot_amp
    x[list(layout.data_cells)] = data_symbols
    return x


@dataclass(frozen=True)
class EstimateResult:
    """Detected integer-grid taps and the channel matrix they reconstruct."""

    gains: np.ndarray
    dopplers: np.ndarray
    delays: np.ndarray
    matrix: np.ndarray
    failed: bool


def epa_estimate(
    y: np.ndarray,
    layout: PilotLayout,
    cfg,
    n0: float,
    pilot_amp: float,
    threshold: float = DEFAULT_THRESHOLD,
) -> EstimateResult:
    """Threshold-detect taps in the guard window and rebuild the channel.

    Scans every integer (doppler, delay) in [-k_ext, k_ext] x [0, l_ext],
    keeps cells with |y| > threshold*sqrt(n0), and inverts the known pilot
    coefficient to read the gain.  Single-pilot layouts only.
    """
    if len(layout.pilot_cells) != 1:
        raise ValueError("estimation is implemented for single-pilot layouts")
    if y.shape != (layout.n,):
        raise ValueError(f"frame length {y.shape} != layout size {layout.n}")
    ks = np.arange(-layout.k_ext, layout.k_ext + 1)
    ls = np.arange(0, layout.l_ext + 1)
    kk, ll = [a.ravel() for a in np.meshgrid(ks, ls, indexing="ij")]

    ones = np.ones(len(kk))
    if layout.waveform == AFDM:
        if cfg.two_n_c1 != 2 * layout.k_ext + 1:
            raise ValueError(
                f"layout sized for spacing {2 * layout.k_ext + 1}, chirp has {cfg.two_n_c1}"
            )
        m_p = layout.pilot_cells[0]
        ind = np.array([index_indicator(l, k, cfg) for k, l in zip(kk, ll)])
        cells = (m_p - ind) % cfg.N
        _, _, vals = afdm_tap_arrays(ones, ll, kk, cfg)
    else:
        K, L = layout.shape
        p = layout.pilot_cells[0]
        k_p, l_p = p % K, p // K
        cells = ((l_p + ll) % L) * K + ((k_p + kk) % K)
        _, vals = otfs_tap_arrays(ones, ll, kk, cfg)
    # unit-gain forward coefficient of each hypothesis at its own probe cell
    coeff = vals[np.arange(len(kk)), cells]

    hit = np.abs(y[cells]) > threshold * np.sqrt(n0)
    gains = y[cells[hit]] / (pilot_amp * coeff[hit])
    dopplers, delays = kk[hit], ll[hit]
    if not np.any(hit):
        return EstimateResult(gains, dopplers, delays, np.zeros((layout.n, layout.n), dtype=complex), True)
    if layout.waveform == AFDM:
        H = afdm_matrix_from_taps(gains, delays, dopplers, cfg)
    else:
        H = otfs_matrix_from_taps(gains, delays, dopplers, cfg)
    return EstimateResult(gains, dopplers, delays, H, False)
