"""Difference-matrix rank oracle and the pairwise-error bounds.

Frozen minimum ranks below were computed by exhaustive enumeration at N = 8
(6560 difference vectors) for the two-path profile {(0,0), (-1,1)} with the
matched chirp slope: step (1,2) reaches the full order 4, the overlapping
step (-1,1) collapses to 2, and (1,0)/(0,1) land between despite being
non-overlapping (their shifted paths collide in chirp offset or align in
phase for some binary difference).
"""

import numpy as np
import pytest
from fractions import Fraction
from numpy.testing import assert_allclose

from ddwave.afdm import AfdmConfig
from ddwave.analysis import (
    EquivalentSiso,
    build_phi,
    equivalent_siso_afdm,
    equivalent_siso_otfs,
    min_rank_over_pairs,
    pep_bound,
)
from ddwave.cdds import MD, TD, CddsPlan, CddsStep, make_plan
from ddwave.core import ATOL_CHAIN, crandn, rng_stream
from ddwave.detect import bpsk, qam4
from ddwave.otfs import BIORTH, RECT, OtfsConfig

PROFILE = frozenset({(0.0, 0), (-1.0, 1)})
CFG8 = AfdmConfig(N=8, c1=Fraction(5, 16))
IDENTITY = CddsPlan((CddsStep(0, 0),))


class TestEquivalentSystems:
    def test_afdm_stack_shape_and_unitarity(self):
        sys = equivalent_siso_afdm(PROFILE, make_plan((1, 2)), CFG8, kind=MD)
        assert sys.subchannels.shape == (4, 8, 8)
        for Hb in sys.subchannels:
            assert_allclose(Hb @ Hb.conj().T, np.eye(8), atol=ATOL_CHAIN)

    def test_otfs_stack_uses_idealized_pulse(self):
        plan = make_plan((1, 1))
        rect = equivalent_siso_otfs(PROFILE, plan, OtfsConfig(4, 2, RECT), kind=MD)
        bio = equivalent_siso_otfs(PROFILE, plan, OtfsConfig(4, 2, BIORTH), kind=MD)
        assert_allclose(rect.subchannels, bio.subchannels, atol=ATOL_CHAIN)

    def test_bad_kind_rejected(self):
        with pytest.raises(ValueError, match="kind"):
            equivalent_siso_afdm(PROFILE, IDENTITY, CFG8, kind="fd")
        with pytest.raises(ValueError, match="kind"):
            equivalent_siso_otfs(PROFILE, IDENTITY, OtfsConfig(4, 2), kind="fd")

    def test_stack_count_validated(self):
        with pytest.raises(ValueError, match="subchannels"):
            EquivalentSiso(np.zeros((3, 8, 8)), n_t=2, n_paths=2)


class TestBuildPhi:
    def test_columns_and_linearity(self, rng):
        sys = equivalent_siso_afdm(PROFILE, make_plan((1, 2)), CFG8, kind=MD)
        x = crandn(rng, 8)
        y = crandn(rng, 8)
        Phi = build_phi(x, sys)
        assert Phi.shape == (8, 4)
        for j in range(4):
            assert_allclose(Phi[:, j], sys.subchannels[j] @ x, atol=ATOL_CHAIN)
        assert_allclose(
            build_phi(2 * x - 3 * y, sys), 2 * Phi - 3 * build_phi(y, sys), atol=ATOL_CHAIN
        )

    def test_zero_input(self):
        sys = equivalent_siso_afdm(PROFILE, IDENTITY, CFG8, kind=MD)
        assert_allclose(build_phi(np.zeros(8), sys), 0.0, atol=0)


class TestRankOracle:
    @pytest.mark.parametrize(
        "step,theta",
        [((1, 2), 4), ((-1, 1), 2), ((1, 0), 2), ((0, 1), 3)],
    )
    def test_frozen_two_antenna_ranks(self, step, theta):
        sys = equivalent_siso_afdm(PROFILE, make_plan(step), CFG8, kind=MD)
        rep = min_rank_over_pairs(sys, bpsk(), 8)
        assert rep.theta_min == theta
        assert rep.pairs_checked == 3**8 - 1

    def test_argmin_attains_the_minimum(self):
        sys = equivalent_siso_afdm(PROFILE, make_plan((1, 0)), CFG8, kind=MD)
        rep = min_rank_over_pairs(sys, bpsk(), 8)
        assert np.linalg.matrix_rank(build_phi(rep.argmin_diff, sys)) == rep.theta_min

    def test_td_and_md_schemes_share_ranks(self):
        # the schemes differ only by unit-modulus column phases
        for step in [(1, 2), (-1, 1), (0, 1)]:
            td = equivalent_siso_afdm(PROFILE, make_plan(step), CFG8, kind=TD)
            md = equivalent_siso_afdm(PROFILE, make_plan(step), CFG8, kind=MD)
            assert (
                min_rank_over_pairs(td, bpsk(), 8).theta_min
                == min_rank_over_pairs(md, bpsk(), 8).theta_min
            )

    def test_single_antenna_order_is_path_count(self):
        sys = equivalent_siso_afdm(PROFILE, IDENTITY, CFG8, kind=MD)
        assert min_rank_over_pairs(sys, bpsk(), 8).theta_min == 2

    def test_otfs_grid_all_ones_degeneracy(self):
        # every grid subchannel is a scaled 2-D cyclic shift, and the
        # all-ones vector is fixed by any shift: the uniform binary
        # difference collapses the stack to rank 1 for every plan, while a
        # single-cell difference still spreads to full rank
        sys = equivalent_siso_otfs(PROFILE, make_plan((1, 1)), OtfsConfig(3, 3), kind=MD)
        rep = min_rank_over_pairs(sys, bpsk(), 9)
        assert rep.theta_min == 1
        e_cell = np.zeros(9)
        e_cell[0] = 2.0
        assert np.linalg.matrix_rank(build_phi(2.0 * np.ones(9), sys)) == 1
        assert np.linalg.matrix_rank(build_phi(e_cell, sys)) == 4

    def test_exhaustive_cap(self):
        sys = EquivalentSiso(np.zeros((1, 11, 11)), n_t=1, n_paths=1)
        with pytest.raises(ValueError, match="capped at N = 10"):
            min_rank_over_pairs(sys, bpsk(), 11)

    def test_size_mismatch(self):
        sys = equivalent_siso_afdm(PROFILE, IDENTITY, CFG8, kind=MD)
        with pytest.raises(ValueError, match="!= N"):
            min_rank_over_pairs(sys, bpsk(), 6)

    def test_sampled_alphabet_path(self):
        # single identity subchannel: any nonzero difference has rank 1
        sys = EquivalentSiso(np.eye(4)[None, :, :], n_t=1, n_paths=1)
        rep = min_rank_over_pairs(sys, qam4(), 4, n_samples=500, seed=1)
        assert rep.theta_min == 1
        assert rep.pairs_checked == 500


class TestPepBound:
    def test_zero_order_floor(self):
        assert_allclose(pep_bound([], 0.1, 2, 2, regime="finite"), 1 / 3, atol=1e-12)
        assert_allclose(pep_bound([0.0], 0.1, 2, 2, regime="high_snr"), 1 / 3, atol=1e-12)

    def test_high_snr_spot_value(self):
        lam = np.sqrt(4.0)  # lambda^2 = Nt * P = 4
        got = pep_bound([lam], n0=0.01, n_t=2, p=2, regime="high_snr")
        assert_allclose(got, 13 / 1200, atol=1e-15)

    def test_finite_spot_value(self):
        # lambda^2/(4 n0 NtP) = 1 and /(3 n0 NtP) = 4/3 at these numbers
        got = pep_bound([2.0], n0=0.25, n_t=2, p=2, regime="finite")
        assert_allclose(got, (1 / 2) / 12 + (3 / 7) / 4, atol=1e-12)

    def test_regimes_agree_asymptotically(self):
        lam = [1.3, 0.8, 2.1]
        for n0 in (1e-8, 1e-10):
            ratio = pep_bound(lam, n0, 2, 2, "finite") / pep_bound(lam, n0, 2, 2, "high_snr")
            assert abs(ratio - 1) < 1e-3

    def test_monotone_in_noise(self):
        lam = [1.0, 1.0]
        assert pep_bound(lam, 0.01, 2, 1) < pep_bound(lam, 0.1, 2, 1)

    def test_validation(self):
        with pytest.raises(ValueError, match="non-negative"):
            pep_bound([-1.0], 0.1, 1, 1)
        with pytest.raises(ValueError, match="n0"):
            pep_bound([1.0], 0.0, 1, 1)
        with pytest.raises(ValueError, match="regime"):
            pep_bound([1.0], 0.1, 1, 1, regime="medium")
