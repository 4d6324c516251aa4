"""Two waveforms, one channel: transform roundtrips and closed-form taps.

The chirp waveform multiplexes symbols with a quadratic-phase DFT; the grid
waveform spreads them over a Doppler x delay lattice.  Over an integer-grid
doubly selective channel both admit a sparse closed form for the effective
channel; here we build it both ways and compare.
"""

import numpy as np

from ddwave.afdm import (
    AfdmConfig, afdm_demodulate, afdm_effective_channel, afdm_matrix_from_taps,
    afdm_modulate, optimal_c1,
)
from ddwave.channel import ChannelRealization, DdPath, time_channel_matrix
from ddwave.core import crandn, rng_stream
from ddwave.otfs import OtfsConfig, otfs_demodulate, otfs_matrix_from_taps, otfs_modulate

rng = rng_stream(2024)
N = 16

# a 3-path channel with delays up to 2 and Doppler up to +-1 bins
ch = ChannelRealization(
    paths=(
        DdPath(gain=0.8, delay=0, doppler=0.0),
        DdPath(gain=0.5j, delay=1, doppler=1.0),
        DdPath(gain=-0.3, delay=2, doppler=-1.0),
    ),
    l_max=2,
    k_max=1.0,
)

# --- chirp waveform ---------------------------------------------------------
c1, fits = optimal_c1(k_max=1, k_space=0, N=N, l_max=2)
print(f"optimal c1 = {c1} (frame condition satisfied: {fits})")
acfg = AfdmConfig(N=N, c1=c1)

x = crandn(rng, N)
s = afdm_modulate(x, acfg)
print("chirp roundtrip error:", np.abs(afdm_demodulate(s, acfg) - x).max())

exact = afdm_effective_channel(ch, acfg)
taps = afdm_matrix_from_taps(ch.gains(), ch.delays(), ch.dopplers(), acfg)
print("chirp taps vs exact conjugation:", np.abs(taps - exact.matrix).max())
print("per-path cyclic offsets:", exact.per_path_indicators)

# --- grid waveform ----------------------------------------------------------
ocfg = OtfsConfig(K=4, L=4)
X = crandn(rng, 4, 4)
sg = otfs_modulate(X, ocfg)
print("grid roundtrip error:", np.abs(otfs_demodulate(sg, ocfg) - X).max())

# with the rectangular pulse the taps match the exact transform conjugation
from ddwave.otfs import modulation_matrix

M = modulation_matrix(ocfg)
H = time_channel_matrix(ch, ocfg.N)
rect_exact = M.conj().T @ H @ M
rect_taps = otfs_matrix_from_taps(ch.gains(), ch.delays(), ch.dopplers(), ocfg)
print("grid taps vs exact conjugation:", np.abs(rect_taps - rect_exact).max())

# each path touches one cell per output row: P*N nonzeros total
print("nonzeros in the effective chirp channel:", np.count_nonzero(taps))
