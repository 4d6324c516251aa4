"""Cyclic delay-Doppler shift precoding.

Per transmit antenna t a step (k_t, l_t) cyclically shifts every channel path
by (+k_t, +l_t), so N_t antennas over a P-path channel look like one antenna
over an N_t*P-path channel.  Three precoder constructions are provided: the
time-domain one (shared by all waveforms) and the two modulation-domain ones.
All three are sparse phase-compensated permutations.  This module also
carries the path non-overlap check, the pilot-guard overhead formulas and the
step planner that minimizes overhead subject to non-overlap.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .afdm import AfdmConfig
from .channel import ChannelRealization
from .core import doppler_shift, forward_cyclic_shift
from .otfs import OtfsConfig

TD = "td"
MD = "md"

AFDM = "afdm"
OTFS = "otfs"

SISO = "siso"
MIMO = "mimo"
CDD = "cdd"
DODD = "dodd"
CDDS = "cdds"


@dataclass(frozen=True)
class CddsStep:
    """Doppler shift (any integer) and cyclic delay shift (non-negative)."""

    k_shift: int
    l_shift: int

    def __post_init__(self):
        if self.l_shift < 0:
            raise ValueError(f"l_shift must be >= 0, got {self.l_shift}")

    @property
    def is_identity(self) -> bool:
        return self.k_shift == 0 and self.l_shift == 0


@dataclass(frozen=True)
class CddsPlan:
    """Per-antenna steps; the first antenna always uses the identity step."""

    steps: tuple[CddsStep, ...]

    def __post_init__(self):
        if not self.steps or not self.steps[0].is_identity:
            raise ValueError("plan must start with the (0, 0) step")

    @property
    def n_t(self) -> int:
        return len(self.steps)


def make_plan(*steps: tuple[int, int]) -> CddsPlan:
    """Build a plan from (k_shift, l_shift) pairs for antennas 2..N_t."""
    return CddsPlan(
        steps=(CddsStep(0, 0),) + tuple(CddsStep(k, l) for k, l in steps)
    )


@dataclass(frozen=True)
class Precoder:
    """A precoding matrix: one unit-modulus nonzero per row and column."""

    matrix: np.ndarray
    kind: str


# --- precoder constructions ---------------------------------------------------


def td_cdds(step: CddsStep, N: int) -> Precoder:
    """Time-domain precoder Delta_N^{k} Pi_N^{l}, applied after modulation."""
    if step.l_shift >= N:
        raise ValueError(f"l_shift {step.l_shift} >= N {N}")
    C = doppler_shift(N, step.k_shift) @ forward_cyclic_shift(N, step.l_shift)
    return Precoder(matrix=C, kind=TD)


def md_cdds_otfs(step: CddsStep, K: int, L: int) -> Precoder:
    """Grid-shift precoder (I_L kron Pi_K^{k}) Pi_{KL}^{K l}.

    Acting on vec(X) it realizes X'[k, l] = X[(k - k_t)_K, (l - l_t)_L]; a pure
    permutation, all nonzeros equal 1.
    """
    if step.l_shift >= L:
        raise ValueError(f"l_shift {step.l_shift} >= L {L}")
    C = np.kron(
        np.eye(L), forward_cyclic_shift(K, step.k_shift)
    ) @ forward_cyclic_shift(K * L, K * step.l_shift)
    return Precoder(matrix=C, kind="md-otfs")


def m_shift(step: CddsStep, cfg: AfdmConfig) -> int:
    """Signed transform-domain shift m = k_shift - 2Nc1 * l_shift."""
    return step.k_shift - cfg.two_n_c1 * step.l_shift


def phase_compensation(step: CddsStep, cfg: AfdmConfig) -> np.ndarray:
    """Diagonal of P_N^[m]: conj of E(m_bar) = e^{j(2pi/N)(m_bar*l + N c2(((m_bar+m)_N)^2 - m_bar^2))}."""
    N = cfg.N
    mt = m_shift(step, cfg)
    m_bar = np.arange(N)
    e = np.exp(
        2j
        * np.pi
        / N
        * (
            m_bar * step.l_shift
            + N * cfg.c2 * (((m_bar + mt) % N).astype(float) ** 2 - m_bar.astype(float) ** 2)
        )
    )
    return e.conj()


def md_cdds_afdm(step: CddsStep, cfg: AfdmConfig, compensate: bool = True) -> Precoder:
    """Transform-domain precoder Pi_N^{m} P_N^{[m]} for the chirp waveform.

    With compensate=False the P_N factor is dropped (the pure cyclic shift),
    which is exactly the operation whose per-symbol phase error degrades BER
    whenever l_shift > 0.
    """
    N = cfg.N
    mt = m_shift(step, cfg) % N
    C = forward_cyclic_shift(N, mt)
    if compensate:
        C = C @ np.diag(phase_compensation(step, cfg))
    return Precoder(matrix=C, kind="md-afdm")


# --- effective profile and gains ----------------------------------------------


def effective_profile(
    profile: frozenset[tuple[float, int]] | set[tuple[float, int]], step: CddsStep
) -> frozenset[tuple[float, int]]:
    """Shift every (doppler, delay) pair by the step; cardinality preserved."""
    return frozenset((k + step.k_shift, l + step.l_shift) for k, l in profile)


def td_gain_phases(step: CddsStep, delays: np.ndarray, N: int) -> np.ndarray:
    """Per-path factor e^{-j2pi k_shift l_i / N} of the time-domain scheme."""
    return np.exp(-2j * np.pi * step.k_shift * np.asarray(delays) / N)


def md_otfs_gain_phases(
    step: CddsStep, dopplers: np.ndarray, delays: np.ndarray, N: int
) -> np.ndarray:
    """Per-path factor e^{j2pi(k_i l_t + k_t l_i + k_t l_t)/(KL)}."""
    kk = np.asarray(dopplers)
    ll = np.asarray(delays)
    num = kk * step.l_shift + step.k_shift * ll + step.k_shift * step.l_shift
    return np.exp(2j * np.pi * num / N)


def md_afdm_gain_phases(step: CddsStep, delays: np.ndarray, cfg: AfdmConfig) -> np.ndarray:
    """Per-path factor A(l_i, m) = e^{-j(2pi/N)(N c1 (2 l_i l_t + l_t^2) + m l_i)}."""
    ll = np.asarray(delays)
    mt = m_shift(step, cfg)
    N = cfg.N
    return np.exp(-2j * np.pi / N * (N * cfg.c1 * (2 * ll * step.l_shift + step.l_shift**2) + mt * ll))


def effective_gains(ch: ChannelRealization, step: CddsStep, kind: str, cfg) -> np.ndarray:
    """Effective per-path gains after a step; |h_bar| = |h| always.

    kind "td" works for any waveform (cfg only provides the frame length N);
    kind "md" dispatches on the config type.
    """
    g = ch.gains()
    if kind == TD:
        return g * td_gain_phases(step, ch.delays(), cfg.N)
    if kind == MD:
        if isinstance(cfg, OtfsConfig):
            return g * md_otfs_gain_phases(step, ch.dopplers(), ch.delays(), cfg.N)
        if isinstance(cfg, AfdmConfig):
            return g * md_afdm_gain_phases(step, ch.delays(), cfg)
        raise TypeError(f"md gains need an AFDM or OTFS config, got {type(cfg).__name__}")
    raise ValueError(f"kind must be '{TD}' or '{MD}', got {kind!r}")


# --- non-overlap, overhead, planning -------------------------------------------


def union_profile(
    profile: frozenset[tuple[float, int]], plan: CddsPlan
) -> frozenset[tuple[float, int]]:
    """Union of the per-antenna shifted profiles (the equivalent SIMO support)."""
    out: set[tuple[float, int]] = set()
    for step in plan.steps:
        out |= effective_profile(profile, step)
    return frozenset(out)


def check_non_overlap(profile, plan: CddsPlan, N: int) -> bool:
    """True iff the shifted profiles are pairwise disjoint and N_t*P <= N."""
    profile = frozenset(profile)
    P = len(profile)
    if plan.n_t * P > N:
        return False
    return len(union_profile(profile, plan)) == plan.n_t * P


def overhead(
    waveform: str,
    scheme: str,
    l_max: int,
    k_max: int,
    n_t: int = 1,
    l_shift_max: int | None = None,
    k_shift_max: int | None = None,
) -> int:
    """Pilot-plus-guard cell count for one embedded pilot.

    The cdds scheme needs the shift extents (the widened channel the receiver
    must sound); the other schemes need n_t.
    """
    if min(l_max, k_max, n_t) < 0:
        raise ValueError("parameters must be non-negative")
    if waveform not in (AFDM, OTFS):
        raise ValueError(f"waveform must be '{AFDM}' or '{OTFS}', got {waveform!r}")
    if scheme == SISO:
        if waveform == AFDM:
            return 2 * (l_max + 1) * (2 * k_max + 1) - 1
        return (2 * l_max + 1) * (4 * k_max + 1)
    if scheme == MIMO:
        if waveform == AFDM:
            return (n_t + 1) * (l_max + 1) * (2 * k_max + 1) - 1
        return (n_t * (l_max + 1) + l_max) * (4 * k_max + 1)
    if scheme == CDD:
        if waveform == AFDM:
            return 2 * (l_max + n_t) * (2 * k_max + 1) - 1
        return (2 * (l_max + n_t - 1) + 1) * (4 * k_max + 1)
    if scheme == DODD:
        if waveform == AFDM:
            return 2 * (l_max + 1) * (2 * k_max + n_t + 1) - 1
        return (2 * l_max + 1) * (4 * k_max + 2 * n_t + 1)
    if scheme == CDDS:
        if l_shift_max is None or k_shift_max is None:
            raise ValueError("cdds overhead needs l_shift_max and k_shift_max")
        if waveform == AFDM:
            return 2 * (l_max + l_shift_max + 1) * (2 * (k_max + k_shift_max) + 1) - 1
        return (2 * (l_max + l_shift_max) + 1) * (4 * (k_max + k_shift_max) + 1)
    raise ValueError(f"unknown scheme {scheme!r}")


def required_k_space(profile, plan: CddsPlan) -> int:
    """Minimal spacing factor keeping all shifted paths inside their delay blocks.

    Equals max{k_max, k_{2,max}, ...} - k_max, where k_{t,max} is the largest
    |k_i + k_t| after the step of antenna t.
    """
    profile = sorted(frozenset(profile))
    kk = np.array([k for k, _ in profile], dtype=float)
    k_max = np.max(np.abs(kk)) if len(kk) else 0.0
    worst = k_max
    for step in plan.steps[1:]:
        worst = max(worst, np.max(np.abs(kk + step.k_shift)))
    return int(np.ceil(worst - k_max - 1e-12))


def plan_extents(profile, plan: CddsPlan) -> tuple[int, int]:
    """(k_shift_max, l_shift_max) extents that price a plan in the overhead table."""
    k_ext = required_k_space(profile, plan)
    l_ext = max((s.l_shift for s in plan.steps), default=0)
    return k_ext, l_ext


@dataclass(frozen=True)
class PlanResult:
    """Planner output: the plan, its feasibility, and its overhead pricing."""

    plan: CddsPlan
    feasible: bool
    overhead_cells: int
    k_shift_extent: int
    l_shift_extent: int


def plan_steps(
    profile,
    n_t: int,
    waveform: str,
    n_frame: int,
    delay_span: int | None = None,
    k_window: tuple[int, int] | None = None,
    l_window: tuple[int, int] | None = None,
) -> PlanResult:
    """Search the step window for the cheapest non-overlapping plan.

    Candidate extent pairs are visited in increasing overhead order (ties by
    extents, then lexicographically smallest step tuples), so the first
    feasible plan found is the optimum over the whole window.  When nothing in
    the window is feasible, the best partially overlapping plan is returned
    with feasible=False.

    delay_span caps the cyclic delay shift (the delay dimension: L for the DD
    grid, N for the chirp frame); windows default to
    k in [-(k_max + n_t), k_max + n_t], l in [0, min(n_t*(l_max+1), span-1)].
    """
    profile = frozenset(profile)
    P = len(profile)
    l_max = max(int(l) for _, l in profile)
    k_max = int(np.ceil(max(abs(k) for k, _ in profile)))
    if delay_span is None:
        delay_span = n_frame
    if k_window is None:
        k_window = (-(k_max + n_t), k_max + n_t)
    if l_window is None:
        l_window = (0, min(n_t * (l_max + 1), delay_span - 1))

    base_profile = profile
    kk = np.array([k for k, _ in sorted(profile)], dtype=float)
    base_k_max = np.max(np.abs(kk))

    if n_t == 1:
        plan = CddsPlan((CddsStep(0, 0),))
        ok = check_non_overlap(profile, plan, n_frame)
        return PlanResult(plan, ok, overhead(waveform, CDDS, l_max, k_max, n_t, 0, 0), 0, 0)

    # k-extent a single step contributes to the overhead pricing
    def step_k_extent(k_shift: int) -> int:
        return int(np.ceil(max(np.max(np.abs(kk + k_shift)) - base_k_max, 0.0) - 1e-12))

    candidates = [
        CddsStep(k, l)
        for k in range(k_window[0], k_window[1] + 1)
        for l in range(l_window[0], l_window[1] + 1)
        if not (k == 0 and l == 0)
    ]
    candidates.sort(key=lambda s: (s.k_shift, s.l_shift))
    if not candidates:
        raise ValueError("empty step window")

    max_ek = max(step_k_extent(s.k_shift) for s in candidates)
    max_el = max(s.l_shift for s in candidates)
    extent_pairs = sorted(
        ((ek, el) for ek in range(max_ek + 1) for el in range(max_el + 1)),
        key=lambda p: (overhead(waveform, CDDS, l_max, k_max, n_t, p[1], p[0]), p[0], p[1]),
    )

    best_partial: tuple[int, CddsPlan] | None = None

    def dfs(pool: list[CddsStep], chosen: list[CddsStep], covered: frozenset) -> CddsPlan | None:
        nonlocal best_partial
        if len(chosen) == n_t - 1:
            return CddsPlan((CddsStep(0, 0),) + tuple(chosen))
        for idx, step in enumerate(pool):
            shifted = effective_profile(base_profile, step)
            merged = covered | shifted
            card = len(merged)
            plan_so_far = CddsPlan((CddsStep(0, 0),) + tuple(chosen) + (step,))
            if best_partial is None or card > best_partial[0]:
                best_partial = (card, plan_so_far)
            if card == len(covered) + P:
                found = dfs(pool[idx + 1 :], chosen + [step], merged)
                if found is not None:
                    return found
        return None

    if n_t * P <= n_frame:
        for ek, el in extent_pairs:
            pool = [
                s for s in candidates if s.l_shift <= el and step_k_extent(s.k_shift) <= ek
            ]
            if len(pool) < n_t - 1:
                continue
            plan = dfs(pool, [], base_profile)
            if plan is not None:
                pk, pl = plan_extents(base_profile, plan)
                return PlanResult(
                    plan,
                    True,
                    overhead(waveform, CDDS, l_max, k_max, n_t, pl, pk),
                    pk,
                    pl,
                )

    # infeasible window: report the widest-coverage plan seen, padded if short
    if best_partial is None:
        fallback = CddsPlan((CddsStep(0, 0),) + tuple(candidates[: n_t - 1]))
    else:
        fallback = best_partial[1]
        missing = n_t - fallback.n_t
        if missing > 0:
            unused = [s for s in candidates if s not in fallback.steps]
            fallback = CddsPlan(fallback.steps + tuple(unused[:missing]))
    pk, pl = plan_extents(base_profile, fallback)
    return PlanResult(
        fallback, False, overhead(waveform, CDDS, l_max, k_max, n_t, pl, pk), pk, pl
    )


def all_plans(
    profile,
    n_t: int,
    k_window: tuple[int, int],
    l_window: tuple[int, int],
) -> list[CddsPlan]:
    """Every plan (unordered step sets) in the window; brute-force companion."""
    candidates = [
        CddsStep(k, l)
        for k in range(k_window[0], k_window[1] + 1)
        for l in range(l_window[0], l_window[1] + 1)
        if not (k == 0 and l == 0)
    ]
    candidates.sort(key=lambda s: (s.k_shift, s.l_shift))
    return [
        CddsPlan((CddsStep(0, 0),) + combo)
        for combo in itertools.combinations(candidates, n_t - 1)
    ]
