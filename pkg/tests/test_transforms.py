"""Transform correctness against closed forms and brute-force oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from helpers import cyclic_convolve_bruteforce, dft_bruteforce, xor_convolve_bruteforce
from sketchmm.errors import InvalidParameterError, InvalidSpectrumError
from sketchmm.transforms import (
    cyclic_convolve,
    fft_forward,
    fft_inverse,
    fwht_inplace,
    xor_convolve,
)


def _rand_vec(rng, b):
    return rng.normal(size=b)


class TestFwht:
    def test_impulse_spreads_flat(self):
        x = np.array([1.0, 0.0, 0.0, 0.0])
        assert_allclose(fwht_inplace(x), [1, 1, 1, 1])

    def test_known_vector(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        assert_allclose(fwht_inplace(x), [10, -2, -4, 0])

    def test_involution_scales_by_length(self):
        rng = np.random.default_rng(42)
        for b in (2, 8, 64, 1024):
            x = _rand_vec(rng, b)
            y = x.copy()
            fwht_inplace(y)
            fwht_inplace(y)
            assert_allclose(y, b * x, atol=1e-12 * max(1.0, np.abs(x).max()) * b)

    def test_matches_hadamard_matrix(self):
        # W[i][j] = (-1)^popcount(i AND j), applied as a dense matrix
        b = 16
        i = np.arange(b)
        w = (-1.0) ** np.array(
            [[bin(ii & jj).count("1") for jj in i] for ii in i]
        )
        rng = np.random.default_rng(3)
        x = _rand_vec(rng, b)
        y = x.copy()
        fwht_inplace(y)
        assert_allclose(y, w @ x, rtol=1e-12, atol=1e-12)

    def test_linearity(self):
        rng = np.random.default_rng(5)
        b = 128
        x, y = _rand_vec(rng, b), _rand_vec(rng, b)
        lhs = 2.0 * x + 3.0 * y
        fwht_inplace(lhs)
        tx, ty = x.copy(), y.copy()
        fwht_inplace(tx)
        fwht_inplace(ty)
        assert_allclose(lhs, 2.0 * tx + 3.0 * ty, rtol=1e-12, atol=1e-12)

    def test_parseval(self):
        rng = np.random.default_rng(6)
        b = 256
        x = _rand_vec(rng, b)
        y = x.copy()
        fwht_inplace(y)
        assert_allclose(np.sum(y * y), b * np.sum(x * x), rtol=1e-10)

    def test_returns_same_array(self):
        x = np.zeros(8)
        assert fwht_inplace(x) is x

    def test_rejects_bad_inputs(self):
        with pytest.raises(InvalidParameterError):
            fwht_inplace(np.zeros(6))
        with pytest.raises(InvalidParameterError):
            fwht_inplace(np.zeros(8, dtype=np.float32))
        with pytest.raises(InvalidParameterError):
            fwht_inplace([1.0, 2.0])
        with pytest.raises(InvalidParameterError):
            fwht_inplace(np.zeros((4, 4)))
        with pytest.raises(InvalidParameterError):
            fwht_inplace(np.zeros(16)[::2])

    @given(st.integers(min_value=1, max_value=8), st.integers(min_value=0, max_value=2**31))
    @settings(max_examples=50, deadline=None)
    def test_involution_property(self, log_b, seed):
        b = 2**log_b
        x = np.random.default_rng(seed).normal(size=b)
        y = x.copy()
        fwht_inplace(y)
        fwht_inplace(y)
        assert np.max(np.abs(y - b * x)) <= 1e-12 * b * max(1.0, np.abs(x).max())


class TestXorConvolve:
    def test_unit_impulse_is_identity(self):
        assert_allclose(xor_convolve([1, 0, 0, 0], [5, 6, 7, 8]), [5, 6, 7, 8])

    def test_known_pair(self):
        # [1,2] (x) [3,4]: index 0 gets 1*3 + 2*4, index 1 gets 1*4 + 2*3
        assert_allclose(xor_convolve([1, 2], [3, 4]), [11, 10])

    def test_commutative(self):
        rng = np.random.default_rng(8)
        x, y = _rand_vec(rng, 64), _rand_vec(rng, 64)
        assert_allclose(xor_convolve(x, y), xor_convolve(y, x), rtol=1e-12)

    def test_against_bruteforce(self):
        rng = np.random.default_rng(9)
        for b in (2, 4, 16, 64, 256):
            x, y = _rand_vec(rng, b), _rand_vec(rng, b)
            ref = xor_convolve_bruteforce(x, y)
            scale = max(1.0, np.abs(ref).max())
            assert np.max(np.abs(xor_convolve(x, y) - ref)) < 1e-10 * scale

    def test_rejects_length_mismatch(self):
        with pytest.raises(InvalidParameterError):
            xor_convolve([1, 2], [1, 2, 3, 4])
        with pytest.raises(InvalidParameterError):
            xor_convolve([1, 2, 3], [1, 2, 3])


class TestFft:
    def test_constant_concentrates_at_dc(self):
        assert_allclose(fft_forward([1, 1, 1, 1]), [4, 0, 0], atol=1e-12)

    def test_impulse_is_flat(self):
        assert_allclose(fft_forward([1, 0, 0, 0]), [1, 1, 1], atol=1e-12)

    def test_shifted_impulse_phases(self):
        assert_allclose(fft_forward([0, 1, 0, 0]), [1, -1j, -1], atol=1e-12)

    def test_half_spectrum_length(self):
        for b in (2, 4, 8, 256):
            assert fft_forward(np.zeros(b)).shape == (b // 2 + 1,)

    def test_matches_bruteforce_dft(self):
        rng = np.random.default_rng(10)
        for b in (2, 4, 16, 128):
            x = _rand_vec(rng, b)
            assert_allclose(fft_forward(x), dft_bruteforce(x), rtol=1e-10, atol=1e-10)

    def test_matches_numpy_rfft(self):
        rng = np.random.default_rng(11)
        for b in (2, 8, 64, 1024, 4096):
            x = _rand_vec(rng, b)
            assert_allclose(fft_forward(x), np.fft.rfft(x), rtol=1e-12, atol=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(12)
        for b in (2, 4, 32, 512, 4096):
            x = _rand_vec(rng, b)
            back = fft_inverse(fft_forward(x))
            assert np.max(np.abs(back - x)) < 1e-12 * max(1.0, np.abs(x).max())

    def test_inverse_known_values(self):
        assert_allclose(fft_inverse([4, 0, 0]), [1, 1, 1, 1], atol=1e-12)
        assert_allclose(fft_inverse([1, 1, 1]), [1, 0, 0, 0], atol=1e-12)

    def test_inverse_rejects_complex_dc_or_nyquist(self):
        with pytest.raises(InvalidSpectrumError):
            fft_inverse([1 + 1e-3j, 0, 1])
        with pytest.raises(InvalidSpectrumError):
            fft_inverse([1, 0, 1 + 1e-3j])
        # interior bins may be complex; boundary imag below 1e-9 passes
        fft_inverse([1 + 1e-10j, 0.5 + 0.5j, 1])

    def test_inverse_rejects_bad_lengths(self):
        with pytest.raises(InvalidParameterError):
            fft_inverse([1.0])
        with pytest.raises(InvalidParameterError):
            fft_inverse([1.0, 2.0, 3.0, 4.0])  # implies length 6, not a power of two


class TestCyclicConvolve:
    def test_unit_impulse_is_identity(self):
        assert_allclose(cyclic_convolve([1, 0, 0, 0], [5, 6, 7, 8]), [5, 6, 7, 8],
                        atol=1e-12)

    def test_known_pair(self):
        # length 2: index 0 gets 1*3 + 2*4 (wrap), index 1 gets 1*4 + 2*3
        assert_allclose(cyclic_convolve([1, 2], [3, 4]), [11, 10])

    def test_against_bruteforce(self):
        rng = np.random.default_rng(13)
        for b in (2, 4, 16, 64, 256):
            x, y = _rand_vec(rng, b), _rand_vec(rng, b)
            ref = cyclic_convolve_bruteforce(x, y)
            scale = max(1.0, np.abs(ref).max())
            assert np.max(np.abs(cyclic_convolve(x, y) - ref)) < 1e-10 * scale

    def test_convolution_theorem(self):
        # forward transform of the convolution equals the product of spectra
        rng = np.random.default_rng(14)
        b = 64
        x, y = _rand_vec(rng, b), _rand_vec(rng, b)
        assert_allclose(
            fft_forward(cyclic_convolve(x, y)),
            fft_forward(x) * fft_forward(y),
            rtol=1e-9, atol=1e-9,
        )
