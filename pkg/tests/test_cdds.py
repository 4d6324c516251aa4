"""Shift precoders, the antenna-folding identities, overhead and planning.

The three equivalence identities are the reason the whole scheme works: a
precoded multi-antenna channel must equal a single-antenna channel over the
shifted profile with phase-rotated gains.  Each is checked against dense
matrix algebra at tight tolerance.
"""

import numpy as np
import pytest
from fractions import Fraction
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from conftest import make_channel
from ddwave.afdm import AfdmConfig, afdm_effective_channel, afdm_matrix_from_taps
from ddwave.cdds import (
    AFDM,
    CDD,
    CDDS,
    DODD,
    MD,
    MIMO,
    OTFS,
    SISO,
    TD,
    CddsPlan,
    CddsStep,
    all_plans,
    check_non_overlap,
    effective_gains,
    effective_profile,
    m_shift,
    make_plan,
    md_cdds_afdm,
    md_cdds_otfs,
    overhead,
    plan_extents,
    plan_steps,
    required_k_space,
    td_cdds,
    union_profile,
)
from ddwave.channel import ChannelRealization, DdPath, time_channel_matrix
from ddwave.core import ATOL_CHAIN, ATOL_EXACT, rng_stream
from ddwave.otfs import BIORTH, OtfsConfig, otfs_matrix_from_taps

PROFILE = frozenset({(0.0, 0), (-1.0, 1)})


def shifted_realization(ch, step, gains):
    """Single-antenna stand-in: shifted support carrying the rotated gains."""
    paths = tuple(
        DdPath(gain=g, delay=p.delay + step.l_shift, doppler=p.doppler + step.k_shift)
        for g, p in zip(gains, ch.paths)
    )
    return ChannelRealization(
        paths=paths,
        l_max=ch.l_max + step.l_shift,
        k_max=ch.k_max + abs(step.k_shift),
    )


class TestStepsAndPlans:
    def test_negative_delay_shift_rejected(self):
        with pytest.raises(ValueError, match="l_shift"):
            CddsStep(k_shift=0, l_shift=-1)

    def test_plan_must_start_identity(self):
        with pytest.raises(ValueError, match=r"\(0, 0\)"):
            CddsPlan((CddsStep(1, 0), CddsStep(0, 0)))

    def test_make_plan(self):
        plan = make_plan((1, 0), (-1, 2))
        assert plan.n_t == 3
        assert plan.steps[0].is_identity
        assert plan.steps[2] == CddsStep(-1, 2)


class TestPrecoderMatrices:
    def test_td_structure(self):
        from ddwave.core import doppler_shift, forward_cyclic_shift

        step = CddsStep(2, 3)
        C = td_cdds(step, 8).matrix
        assert_allclose(C, doppler_shift(8, 2) @ forward_cyclic_shift(8, 3), atol=ATOL_EXACT)
        assert_allclose(C @ C.conj().T, np.eye(8), atol=ATOL_EXACT)

    def test_td_delay_bound(self):
        with pytest.raises(ValueError, match=">= N"):
            td_cdds(CddsStep(0, 8), 8)

    def test_md_otfs_is_grid_roll(self, rng):
        from ddwave.otfs import grid_to_vec, vec_to_grid

        cfg = OtfsConfig(K=4, L=3)
        step = CddsStep(1, 2)
        C = md_cdds_otfs(step, 4, 3).matrix
        assert set(np.unique(C)) <= {0.0, 1.0}
        from ddwave.core import crandn

        X = crandn(rng, 4, 3)
        Y = vec_to_grid(C @ grid_to_vec(X), cfg)
        assert_allclose(Y, np.roll(np.roll(X, 1, axis=0), 2, axis=1), atol=ATOL_EXACT)

    def test_md_otfs_delay_bound(self):
        with pytest.raises(ValueError, match=">= L"):
            md_cdds_otfs(CddsStep(0, 3), 4, 3)

    def test_m_shift(self):
        cfg = AfdmConfig(N=8, c1=Fraction(5, 16))
        assert m_shift(CddsStep(1, 2), cfg) == 1 - 10

    def test_md_afdm_unitary_and_ablatable(self):
        cfg = AfdmConfig(N=8, c1=Fraction(5, 16))
        step = CddsStep(1, 2)
        C = md_cdds_afdm(step, cfg).matrix
        assert_allclose(C @ C.conj().T, np.eye(8), atol=ATOL_EXACT)
        bare = md_cdds_afdm(step, cfg, compensate=False).matrix
        assert set(np.unique(bare)) <= {0.0, 1.0}
        from ddwave.core import forward_cyclic_shift

        assert_allclose(bare, forward_cyclic_shift(8, (-9) % 8), atol=ATOL_EXACT)


class TestTimeDomainIdentity:
    @pytest.mark.parametrize("integer_doppler", [True, False])
    @pytest.mark.parametrize("step", [CddsStep(1, 0), CddsStep(-2, 3), CddsStep(2, 1)])
    def test_channel_folds_into_shifted_profile(self, step, integer_doppler):
        rng = rng_stream(300, step.l_shift, int(integer_doppler))
        N = 16
        ch = make_channel(rng, n_paths=3, l_max=3, k_max=2, integer_doppler=integer_doppler)
        lhs = time_channel_matrix(ch, N) @ td_cdds(step, N).matrix
        gbar = effective_gains(ch, step, TD, AfdmConfig(N=N, c1=0.0))
        rhs = time_channel_matrix(shifted_realization(ch, step, gbar), N)
        assert_allclose(lhs, rhs, atol=ATOL_EXACT)


class TestGridDomainIdentity:
    @pytest.mark.parametrize("step", [CddsStep(1, 0), CddsStep(-1, 1), CddsStep(2, 2)])
    def test_biorth_channel_folds_into_shifted_profile(self, step):
        rng = rng_stream(301, step.l_shift)
        cfg = OtfsConfig(K=6, L=4, pulse=BIORTH)
        ch = make_channel(rng, n_paths=3, l_max=1, k_max=2)
        H = otfs_matrix_from_taps(ch.gains(), ch.delays(), ch.dopplers(), cfg)
        lhs = H @ md_cdds_otfs(step, cfg.K, cfg.L).matrix
        gbar = effective_gains(ch, step, MD, cfg)
        rhs = otfs_matrix_from_taps(
            gbar, ch.delays() + step.l_shift, ch.dopplers() + step.k_shift, cfg
        )
        assert_allclose(lhs, rhs, atol=ATOL_CHAIN)


class TestChirpDomainIdentity:
    @pytest.mark.parametrize("c2", [0.0, 1 / 128])
    @pytest.mark.parametrize("step", [CddsStep(1, 0), CddsStep(-1, 1), CddsStep(2, 2)])
    def test_compensated_channel_folds_into_shifted_profile(self, step, c2):
        rng = rng_stream(302, step.l_shift, int(c2 > 0))
        cfg = AfdmConfig(N=16, c1=Fraction(5, 32), c2=c2)
        ch = make_channel(rng, n_paths=3, l_max=2, k_max=2)
        H = afdm_effective_channel(ch, cfg).matrix
        lhs = H @ md_cdds_afdm(step, cfg).matrix
        gbar = effective_gains(ch, step, MD, cfg)
        rhs = afdm_matrix_from_taps(
            gbar, ch.delays() + step.l_shift, ch.dopplers() + step.k_shift, cfg
        )
        assert_allclose(lhs, rhs, atol=ATOL_CHAIN)

    def test_compensation_matters_exactly_when_delay_shifted(self):
        # at c2 = 0 the dropped diagonal is the identity iff l_shift = 0
        rng = rng_stream(303)
        cfg = AfdmConfig(N=16, c1=Fraction(5, 32))
        ch = make_channel(rng, n_paths=3, l_max=2, k_max=2)
        H = afdm_effective_channel(ch, cfg).matrix

        def residual(step):
            lhs = H @ md_cdds_afdm(step, cfg, compensate=False).matrix
            gbar = effective_gains(ch, step, MD, cfg)
            rhs = afdm_matrix_from_taps(
                gbar, ch.delays() + step.l_shift, ch.dopplers() + step.k_shift, cfg
            )
            return np.max(np.abs(lhs - rhs))

        assert residual(CddsStep(2, 0)) < ATOL_CHAIN
        assert residual(CddsStep(0, 1)) > 1e-3
        assert residual(CddsStep(2, 2)) > 1e-3


class TestEffectiveGains:
    @settings(max_examples=40, deadline=None)
    @given(
        k_shift=st.integers(-4, 4),
        l_shift=st.integers(0, 4),
        kind=st.sampled_from([TD, MD]),
        seed=st.integers(0, 2**16),
    )
    def test_magnitudes_preserved(self, k_shift, l_shift, kind, seed):
        ch = make_channel(rng_stream(304, seed), n_paths=3, l_max=3, k_max=2)
        step = CddsStep(k_shift, l_shift)
        for cfg in (AfdmConfig(N=16, c1=Fraction(5, 32)), OtfsConfig(K=4, L=4)):
            g = effective_gains(ch, step, kind, cfg)
            assert_allclose(np.abs(g), np.abs(ch.gains()), atol=ATOL_EXACT)

    def test_dispatch_errors(self, channel_factory):
        ch = channel_factory()
        with pytest.raises(TypeError, match="AFDM or OTFS config"):
            effective_gains(ch, CddsStep(1, 0), MD, object())
        with pytest.raises(ValueError, match="kind"):
            effective_gains(ch, CddsStep(1, 0), "fd", AfdmConfig(N=8, c1=0.0))


class TestNonOverlap:
    def test_disjoint_plan_accepted(self):
        assert check_non_overlap(PROFILE, make_plan((1, 2)), 8)

    def test_colliding_plan_rejected(self):
        # step (-1, 1) sends (0, 0) onto the existing (-1, 1) path
        assert not check_non_overlap(PROFILE, make_plan((-1, 1)), 8)

    def test_capacity_bound(self):
        plan = make_plan((1, 0), (2, 0), (3, 0), (1, 1))
        assert not check_non_overlap(PROFILE, plan, 8)

    def test_union_profile(self):
        u = union_profile(PROFILE, make_plan((1, 2)))
        assert u == frozenset({(0.0, 0), (-1.0, 1), (1.0, 2), (0.0, 3)})

    def test_effective_profile_keeps_cardinality(self):
        assert len(effective_profile(PROFILE, CddsStep(5, 3))) == len(PROFILE)


class TestOverheadTable:
    # one frozen value per (waveform, scheme) formula, l_max=4, k_max=3, n_t=2
    @pytest.mark.parametrize(
        "waveform,scheme,kwargs,expected",
        [
            (AFDM, SISO, {}, 69),
            (OTFS, SISO, {}, 117),
            (AFDM, MIMO, {"n_t": 2}, 104),
            (OTFS, MIMO, {"n_t": 2}, 182),
            (AFDM, CDD, {"n_t": 2}, 83),
            (OTFS, CDD, {"n_t": 2}, 143),
            (AFDM, DODD, {"n_t": 2}, 89),
            (OTFS, DODD, {"n_t": 2}, 153),
            (AFDM, CDDS, {"n_t": 2, "l_shift_max": 1, "k_shift_max": 1}, 107),
            (OTFS, CDDS, {"n_t": 2, "l_shift_max": 1, "k_shift_max": 1}, 187),
        ],
    )
    def test_values(self, waveform, scheme, kwargs, expected):
        assert overhead(waveform, scheme, l_max=4, k_max=3, **kwargs) == expected

    def test_siso_equals_single_antenna_schemes(self):
        # cdd and cdds collapse to the siso count at n_t = 1 / zero shifts
        for wf in (AFDM, OTFS):
            base = overhead(wf, SISO, 4, 3)
            assert overhead(wf, CDD, 4, 3, n_t=1) == base
            assert overhead(wf, CDDS, 4, 3, n_t=1, l_shift_max=0, k_shift_max=0) == base

    def test_errors(self):
        with pytest.raises(ValueError, match="non-negative"):
            overhead(AFDM, SISO, -1, 3)
        with pytest.raises(ValueError, match="waveform"):
            overhead("ofdm", SISO, 4, 3)
        with pytest.raises(ValueError, match="unknown scheme"):
            overhead(AFDM, "stbc", 4, 3)
        with pytest.raises(ValueError, match="needs l_shift_max"):
            overhead(AFDM, CDDS, 4, 3)


class TestPlanner:
    def test_spacing_requirement(self):
        assert required_k_space(PROFILE, make_plan((1, 2))) == 0
        assert required_k_space(PROFILE, make_plan((2, 0))) == 1
        assert plan_extents(PROFILE, make_plan((1, 2))) == (0, 2)

    def test_two_antennas_optimal(self):
        res = plan_steps(PROFILE, n_t=2, waveform=AFDM, n_frame=12)
        assert res.feasible
        assert res.plan.steps[1] == CddsStep(1, 0)
        assert (res.k_shift_extent, res.l_shift_extent) == (0, 0)
        assert res.overhead_cells == 11
        assert check_non_overlap(PROFILE, res.plan, 12)

    def test_three_antennas_optimal(self):
        res = plan_steps(PROFILE, n_t=3, waveform=AFDM, n_frame=12)
        assert res.feasible
        assert tuple((s.k_shift, s.l_shift) for s in res.plan.steps[1:]) == ((0, 1), (1, 1))
        assert res.overhead_cells == 17

    def test_optimality_against_brute_force(self):
        # the planner's first hit must price no worse than any window plan
        res = plan_steps(PROFILE, n_t=3, waveform=OTFS, n_frame=24, delay_span=6)
        assert res.feasible
        best = min(
            overhead(OTFS, CDDS, 1, 1, 3, *plan_extents(PROFILE, p)[::-1])
            for p in all_plans(PROFILE, 3, (-4, 4), (0, 5))
            if check_non_overlap(PROFILE, p, 24)
        )
        assert res.overhead_cells == best

    def test_infeasible_frame_reported(self):
        res = plan_steps(PROFILE, n_t=5, waveform=AFDM, n_frame=8)
        assert not res.feasible
        assert res.plan.n_t == 5

    def test_single_antenna_plan(self):
        res = plan_steps(PROFILE, n_t=1, waveform=AFDM, n_frame=8)
        assert res.feasible and res.plan.steps == (CddsStep(0, 0),)

    def test_all_plans_count(self):
        assert len(all_plans(PROFILE, 2, (-1, 1), (0, 1))) == 5
