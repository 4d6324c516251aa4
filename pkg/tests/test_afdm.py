"""Chirp-domain transform, its effective channel, and the closed-form taps.

The tap route is the load-bearing piece: the Monte-Carlo harness trusts it at
large N, so it is cross-checked against the exact A H A^H conjugation here.
"""

import numpy as np
import pytest
from fractions import Fraction
from numpy.testing import assert_allclose

from conftest import make_channel
from ddwave.afdm import (
    AfdmConfig,
    afdm_apply_taps,
    afdm_demodulate,
    afdm_effective_channel,
    afdm_matrix_from_taps,
    afdm_modulate,
    afdm_tap_arrays,
    daft_matrix,
    index_indicator,
    optimal_c1,
)
from ddwave.core import ATOL_CHAIN, ATOL_EXACT, crandn, rng_stream


def cfg8():
    # 2Nc1 = 5: the optimal slope for k_max = 1, k_space = 1 at N = 8
    return AfdmConfig(N=8, c1=Fraction(5, 16))


class TestConfig:
    def test_rational_c1_coerced_to_float(self):
        cfg = cfg8()
        assert isinstance(cfg.c1, float)
        assert cfg.two_n_c1 == 5

    def test_non_integer_chirp_slope_rejected(self):
        with pytest.raises(ValueError, match="not an integer"):
            AfdmConfig(N=8, c1=0.3)

    def test_empty_frame_rejected(self):
        with pytest.raises(ValueError, match="N must be >= 1"):
            AfdmConfig(N=0, c1=0.0)


class TestTransform:
    def test_matrix_entries(self):
        cfg = AfdmConfig(N=4, c1=Fraction(3, 8), c2=0.125)
        A = daft_matrix(cfg)
        m, n = 3, 2
        expected = np.exp(
            -2j * np.pi * (cfg.c2 * m**2 + m * n / cfg.N + cfg.c1 * n**2)
        ) / np.sqrt(cfg.N)
        assert_allclose(A[m, n], expected, atol=ATOL_EXACT)

    def test_unitary(self):
        A = daft_matrix(cfg8())
        assert_allclose(A @ A.conj().T, np.eye(8), atol=ATOL_EXACT)

    def test_modulate_is_adjoint_transform(self, rng):
        cfg = AfdmConfig(N=16, c1=Fraction(5, 32), c2=1 / 64)
        x = crandn(rng, 16)
        assert_allclose(afdm_modulate(x, cfg), daft_matrix(cfg).conj().T @ x, atol=ATOL_CHAIN)

    def test_roundtrip(self, rng):
        cfg = cfg8()
        x = crandn(rng, 8)
        assert_allclose(afdm_demodulate(afdm_modulate(x, cfg), cfg), x, atol=ATOL_CHAIN)

    def test_length_checked(self):
        with pytest.raises(ValueError, match="!= N"):
            afdm_modulate(np.ones(4), cfg8())
        with pytest.raises(ValueError, match="!= N"):
            afdm_demodulate(np.ones(4), cfg8())


class TestOptimalSlope:
    def test_value(self):
        c1, fits = optimal_c1(k_max=1, k_space=1, N=8)
        assert c1 == Fraction(5, 16)
        assert fits is None

    def test_frame_condition(self):
        _, tight = optimal_c1(1, 1, 8, l_max=1)
        assert tight is False  # needs N >= 2 * 5
        _, roomy = optimal_c1(1, 1, 12, l_max=1)
        assert roomy is True


class TestIndexIndicator:
    def test_values(self):
        cfg = cfg8()
        assert index_indicator(0, 0, cfg) == 0
        assert index_indicator(1, -1, cfg) == 6  # (5*1 + 1) mod 8
        assert index_indicator(2, 1, cfg) == 1  # (10 - 1) mod 8

    def test_fractional_doppler_rejected(self):
        with pytest.raises(ValueError, match="integer Doppler"):
            index_indicator(0, 0.5, cfg8())

    def test_separability_with_optimal_slope(self):
        # in-range paths land on distinct offsets when 2Nc1 = 2 k_max + 1
        # tiles the frame: ind = l * (2 k_max + 1) + (k_max - k) is injective
        cfg = AfdmConfig(N=16, c1=Fraction(3, 32))
        inds = {
            index_indicator(l, k, cfg) for l in range(5) for k in (-1, 0, 1)
        }
        assert len(inds) == 15


class TestTapRoute:
    @pytest.mark.parametrize("c2", [0.0, 1 / 128])
    def test_matrix_matches_exact_conjugation(self, c2):
        rng = rng_stream(41)
        cfg = AfdmConfig(N=16, c1=Fraction(5, 32), c2=c2)
        for _ in range(10):
            ch = make_channel(rng, n_paths=3, l_max=4, k_max=2)
            built = afdm_matrix_from_taps(ch.gains(), ch.delays(), ch.dopplers(), cfg)
            exact = afdm_effective_channel(ch, cfg).matrix
            assert_allclose(built, exact, atol=ATOL_CHAIN)

    def test_row_structure(self):
        # one nonzero per row, at column (m + ind) mod N
        cfg = cfg8()
        inds, cols, vals = afdm_tap_arrays(np.array([1.0]), np.array([1]), np.array([-1.0]), cfg)
        assert inds[0] == 6
        assert_allclose(cols[0], (np.arange(8) + 6) % 8, atol=0)
        assert_allclose(np.abs(vals[0]), 1.0, atol=ATOL_EXACT)

    def test_reported_indicators_match(self, channel_factory):
        cfg = AfdmConfig(N=16, c1=Fraction(5, 32))
        ch = channel_factory(n_paths=3, l_max=4, k_max=2)
        eff = afdm_effective_channel(ch, cfg)
        inds, _, _ = afdm_tap_arrays(ch.gains(), ch.delays(), ch.dopplers(), cfg)
        assert eff.per_path_indicators == tuple(inds.tolist())

    def test_apply_matches_dense(self, rng, channel_factory):
        cfg = AfdmConfig(N=16, c1=Fraction(5, 32))
        ch = channel_factory(n_paths=3, l_max=4, k_max=2)
        x = crandn(rng, 16)
        H = afdm_matrix_from_taps(ch.gains(), ch.delays(), ch.dopplers(), cfg)
        assert_allclose(afdm_apply_taps(x, ch.gains(), ch.delays(), ch.dopplers(), cfg), H @ x, atol=ATOL_CHAIN)

    def test_fractional_doppler_rejected(self):
        with pytest.raises(ValueError, match="integer Doppler"):
            afdm_tap_arrays(np.array([1.0]), np.array([0]), np.array([0.5]), cfg8())

    def test_fractional_doppler_exact_route_still_works(self, channel_factory):
        cfg = cfg8()
        ch = channel_factory(n_paths=2, l_max=2, k_max=1, integer_doppler=False)
        eff = afdm_effective_channel(ch, cfg)
        assert eff.matrix.shape == (8, 8)
        assert eff.per_path_indicators == (None, None)

    def test_colliding_offsets_accumulate(self):
        # two paths sharing an offset must add, not overwrite
        cfg = AfdmConfig(N=8, c1=Fraction(1, 16))  # 2Nc1 = 1
        gains = np.array([1.0, 1.0j])
        delays = np.array([0, 1])
        dopplers = np.array([0.0, 1.0])  # both ind = 0
        H = afdm_matrix_from_taps(gains, delays, dopplers, cfg)
        inds, _, _ = afdm_tap_arrays(gains, delays, dopplers, cfg)
        assert inds[0] == inds[1] == 0
        assert np.count_nonzero(H) == 8  # collided rows stay single-entry

    def test_odd_slope_times_odd_frame_rejected(self):
        # the per-row form drops a (-1)^(2Nc1 * N) wrap sign, so it only
        # holds when that exponent is even
        cfg = AfdmConfig(N=9, c1=Fraction(5, 18))  # 2Nc1 = 5, 5 * 9 odd
        with pytest.raises(ValueError, match="even"):
            afdm_tap_arrays(np.array([1.0]), np.array([1]), np.array([0.0]), cfg)

    def test_even_slope_exact_on_odd_frame(self, channel_factory):
        cfg = AfdmConfig(N=9, c1=Fraction(4, 18))  # 2Nc1 = 4, 4 * 9 even
        ch = channel_factory(n_paths=3, l_max=3, k_max=2)
        built = afdm_matrix_from_taps(ch.gains(), ch.delays(), ch.dopplers(), cfg)
        exact = afdm_effective_channel(ch, cfg).matrix
        assert_allclose(built, exact, atol=ATOL_CHAIN)
