"""Doubly selective channel models and their action on time-domain frames.

A channel realization is a list of paths, each with a complex gain h_i, an
integer delay l_i (samples) and a real Doppler k_i (cycles per frame).  The
time-domain channel matrix is sum_i h_i Delta_N^{k_i} Pi_N^{l_i}; the cyclic
prefix is modeled as exact cyclic convolution, so prefix samples are never
materialized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import crandn, doppler_shift, forward_cyclic_shift


@dataclass(frozen=True)
class DdPath:
    """One propagation path: complex gain, integer delay, real Doppler."""

    gain: complex
    delay: int
    doppler: float

    def __post_init__(self):
        if self.delay < 0:
            raise ValueError(f"delay must be >= 0, got {self.delay}")


@dataclass(frozen=True)
class ChannelRealization:
    """A drawn channel: non-empty path list plus the generating bounds."""

    paths: tuple[DdPath, ...]
    l_max: int
    k_max: float

    def __post_init__(self):
        if not self.paths:
            raise ValueError("channel must have at least one path")

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    def gains(self) -> np.ndarray:
        return np.array([p.gain for p in self.paths])

    def delays(self) -> np.ndarray:
        return np.array([p.delay for p in self.paths])

    def dopplers(self) -> np.ndarray:
        return np.array([p.doppler for p in self.paths])


@dataclass(frozen=True)
class MimoChannel:
    """Per-antenna-pair channels sharing one delay/Doppler support.

    gains has shape (n_r, n_t, P); all (r, t) pairs see the same support with
    independent gains.
    """

    n_t: int
    n_r: int
    support: tuple[tuple[float, int], ...]  # (doppler, delay) per path
    gains: np.ndarray
    l_max: int
    k_max: float

    def __post_init__(self):
        if self.gains.shape != (self.n_r, self.n_t, len(self.support)):
            raise ValueError(
                f"gains shape {self.gains.shape} does not match "
                f"(n_r={self.n_r}, n_t={self.n_t}, P={len(self.support)})"
            )

    def realization(self, r: int, t: int) -> ChannelRealization:
        paths = tuple(
            DdPath(gain=self.gains[r, t, i], delay=l, doppler=k)
            for i, (k, l) in enumerate(self.support)
        )
        return ChannelRealization(paths=paths, l_max=self.l_max, k_max=self.k_max)


# --- channel models ---------------------------------------------------------


@dataclass(frozen=True)
class FixedProfile:
    """Deterministic (doppler, delay) support with fresh CN(0, 1/P) gains."""

    support: tuple[tuple[float, int], ...]

    def __post_init__(self):
        if len(set(self.support)) != len(self.support):
            raise ValueError("duplicate (doppler, delay) entries in profile")

    @property
    def l_max(self) -> int:
        return max(l for _, l in self.support)

    @property
    def k_max(self) -> float:
        return max(abs(k) for k, _ in self.support)


@dataclass(frozen=True)
class UniformJakes:
    """Uniform distinct delays on {0..l_max}; Doppler k_i = k_max cos(theta_i).

    theta_i is uniform on [-pi, pi].  With integer_doppler=True the Dopplers
    are rounded to the grid (angles resampled on (k, l) support collision).
    """

    l_max: int
    k_max: float
    n_paths: int = 2
    integer_doppler: bool = False

    def __post_init__(self):
        if self.n_paths > self.l_max + 1:
            raise ValueError(
                f"cannot place {self.n_paths} distinct delays in [0, {self.l_max}]"
            )


# standard 9-tap vehicular power-delay profile; ns delays mapped to the sample
# grid at dt = 1/(1024 * 6000) s and rounded
EVA_DELAYS_NS = (0, 30, 150, 310, 370, 710, 1090, 1730, 2510)
EVA_POWERS_DB = (0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9)
EVA_DELAYS_SAMPLES = (0, 0, 1, 2, 2, 4, 7, 11, 15)


@dataclass(frozen=True)
class Eva:
    """9-tap vehicular profile: fixed delays/powers, Jakes Dopplers."""

    l_max: int = 15
    k_max: float = 6.0
    integer_doppler: bool = False
    delays: tuple[int, ...] = EVA_DELAYS_SAMPLES
    powers_db: tuple[float, ...] = EVA_POWERS_DB

    @property
    def n_paths(self) -> int:
        return len(self.delays)

    def powers(self) -> np.ndarray:
        """Linear per-tap powers normalized to unit total."""
        p = 10.0 ** (np.asarray(self.powers_db) / 10.0)
        return p / p.sum()


def _jakes_doppler(rng: np.random.Generator, k_max: float) -> float:
    theta = rng.uniform(-np.pi, np.pi)
    return k_max * np.cos(theta)


def generate(model, rng: np.random.Generator) -> ChannelRealization:
    """Draw one channel realization from a model.

    FixedProfile keeps the given support and draws CN(0, 1/P) gains;
    UniformJakes draws distinct uniform delays and Jakes Dopplers; Eva scales
    CN(0, 1) gains by the square-rooted normalized power profile.
    """
    if isinstance(model, FixedProfile):
        P = len(model.support)
        g = crandn(rng, P) / np.sqrt(P)
        paths = tuple(
            DdPath(gain=g[i], delay=l, doppler=k)
            for i, (k, l) in enumerate(model.support)
        )
        return ChannelRealization(paths, model.l_max, model.k_max)

    if isinstance(model, UniformJakes):
        P = model.n_paths
        delays: list[int] = []
        while len(delays) < P:
            cand = int(rng.integers(0, model.l_max + 1))
            if cand not in delays:
                delays.append(cand)
        dopplers = [_jakes_doppler(rng, model.k_max) for _ in range(P)]
        if model.integer_doppler:
            dopplers = [float(round(k)) for k in dopplers]
        g = crandn(rng, P) / np.sqrt(P)
        paths = tuple(
            DdPath(gain=g[i], delay=delays[i], doppler=dopplers[i]) for i in range(P)
        )
        return ChannelRealization(paths, model.l_max, model.k_max)

    if isinstance(model, Eva):
        P = model.n_paths
        amps = np.sqrt(model.powers())
        while True:
            dopplers = [_jakes_doppler(rng, model.k_max) for _ in range(P)]
            if model.integer_doppler:
                dopplers = [float(round(k)) for k in dopplers]
                # duplicate delays exist in the tap table, so a rounded-grid
                # draw can collide; redraw until the (k, l) support is distinct
                support = set(zip(dopplers, model.delays))
                if len(support) != P:
                    continue
            break
        g = crandn(rng, P) * amps
        paths = tuple(
            DdPath(gain=g[i], delay=model.delays[i], doppler=dopplers[i])
            for i in range(P)
        )
        return ChannelRealization(paths, model.l_max, model.k_max)

    raise TypeError(f"unknown channel model {type(model).__name__}")


def model_support(model, rng: np.random.Generator) -> tuple[tuple[float, int], ...]:
    """Draw only the (doppler, delay) support of a model (gains discarded)."""
    ch = generate(model, rng)
    return tuple((p.doppler, p.delay) for p in ch.paths)


def generate_mimo(model, n_t: int, n_r: int, rng: np.random.Generator) -> MimoChannel:
    """Draw a MIMO channel: one shared support, independent gains per (r, t).

    Per-path gain variance matches the SISO model (1/P, or the tap power for
    the vehicular profile), independently for every antenna pair.
    """
    ref = generate(model, rng)
    support = tuple((p.doppler, p.delay) for p in ref.paths)
    P = len(support)
    if isinstance(model, Eva):
        amps = np.sqrt(model.powers())
    else:
        amps = np.full(P, 1.0 / np.sqrt(P))
    gains = crandn(rng, n_r, n_t, P) * amps
    return MimoChannel(
        n_t=n_t, n_r=n_r, support=support, gains=gains, l_max=ref.l_max, k_max=ref.k_max
    )


# --- channel application ----------------------------------------------------


def time_channel_matrix(ch: ChannelRealization, N: int) -> np.ndarray:
    """Return H = sum_i h_i Delta_N^{k_i} Pi_N^{l_i} (N x N, dense)."""
    H = np.zeros((N, N), dtype=complex)
    for p in ch.paths:
        if p.delay >= N:
            raise ValueError(f"path delay {p.delay} >= frame length {N}")
        H += p.gain * (doppler_shift(N, p.doppler) @ forward_cyclic_shift(N, p.delay))
    return H


def apply_channel(
    s: np.ndarray,
    ch: ChannelRealization,
    n0: float,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Pass a CP-free frame through the channel: d = H s + w, w ~ CN(0, n0 I).

    Works path by path (cyclic shift + phase ramp) without forming H.
    """
    N = len(s)
    d = np.zeros(N, dtype=complex)
    n = np.arange(N)
    for p in ch.paths:
        if p.delay >= N:
            raise ValueError(f"path delay {p.delay} >= frame length {N}")
        d += p.gain * np.exp(2j * np.pi * p.doppler * n / N) * np.roll(s, p.delay)
    if n0 > 0:
        if rng is None:
            raise ValueError("rng required when n0 > 0")
        d = d + np.sqrt(n0) * crandn(rng, N)
    return d
