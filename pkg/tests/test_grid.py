import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyadgen.errors import ModesExceedNyquist, ResolutionBelowModeSupport, ResolutionMismatch
from dyadgen.grid import (
    GridFunction,
    concat_channels,
    forward_spectrum,
    inverse_spectrum,
    quadrature_l2_norm,
    resample,
)


def trig(resolution, coeffs, channels=1, seed=0):
    """Random real trigonometric polynomial with frequencies < len(coeffs)."""
    rng = np.random.default_rng(seed)
    t = np.arange(resolution) / resolution
    out = np.zeros((resolution, channels))
    for k in range(coeffs):
        a, b = rng.standard_normal((2, channels))
        out += a * np.cos(2 * np.pi * k * t)[:, None] + b * np.sin(2 * np.pi * k * t)[:, None]
    return GridFunction(out)


def brute_dft(x, k):
    n = len(x)
    return sum(x[i] * np.exp(-2j * np.pi * k * i / n) for i in range(n))


class TestNorm:
    def test_zero(self):
        for n in (2, 17, 64):
            assert quadrature_l2_norm(GridFunction.constant(0.0, n)) == 0.0

    def test_constant(self):
        assert quadrature_l2_norm(GridFunction.constant(2.0, 64)) == pytest.approx(2.0, abs=1e-15)

    def test_sine(self):
        f = GridFunction.from_callable(lambda t: np.sin(2 * np.pi * t), 128)
        direct = np.sqrt(sum(np.sin(2 * np.pi * i / 128) ** 2 for i in range(128)) / 128)
        assert quadrature_l2_norm(f) == pytest.approx(direct, abs=1e-14)
        assert quadrature_l2_norm(f) == pytest.approx(1 / np.sqrt(2), abs=1e-9)


class TestSpectrum:
    def test_dc(self):
        s = forward_spectrum(GridFunction.constant(1.0, 8), 3)
        np.testing.assert_allclose(s.coefficients[:, 0], [8, 0, 0], atol=1e-12)

    def test_cosine_against_direct_dft(self):
        f = GridFunction.from_callable(lambda t: np.cos(2 * np.pi * t), 8)
        s = forward_spectrum(f, 3)
        oracle = [brute_dft(f.values[:, 0], k) for k in range(3)]
        np.testing.assert_allclose(s.coefficients[:, 0], oracle, atol=1e-12)
        np.testing.assert_allclose(s.coefficients[:, 0], [0, 4, 0], atol=1e-12)

    def test_too_many_modes(self):
        with pytest.raises(ModesExceedNyquist):
            forward_spectrum(GridFunction.constant(1.0, 8), 6)

    @pytest.mark.parametrize("n", [7, 8, 33])
    def test_full_round_trip(self, n):
        f = GridFunction(np.random.default_rng(n).standard_normal((n, 3)))
        back = inverse_spectrum(forward_spectrum(f, n // 2 + 1), n)
        np.testing.assert_allclose(back.values, f.values, rtol=1e-12, atol=1e-12)

    def test_zero_spectrum(self):
        s = forward_spectrum(GridFunction.constant(0.0, 8), 3)
        assert np.all(inverse_spectrum(s, 16).values == 0)

    def test_cosine_upsampled(self):
        s = forward_spectrum(GridFunction.from_callable(lambda t: np.cos(2 * np.pi * t), 8), 3)
        fine = inverse_spectrum(s, 32)
        t = np.arange(32) / 32
        assert np.max(np.abs(fine.values[:, 0] - np.cos(2 * np.pi * t))) < 1e-10

    def test_resolution_too_small(self):
        s = forward_spectrum(GridFunction.constant(1.0, 32), 10)
        with pytest.raises(ResolutionBelowModeSupport):
            inverse_spectrum(s, 8)

    def test_parseval(self):
        f = GridFunction(np.random.default_rng(1).standard_normal((50, 2)))
        full = np.fft.fft(f.values, axis=0)
        lhs = np.sum(f.values**2) / 50
        rhs = np.sum(np.abs(full) ** 2) / 50**2
        assert lhs == pytest.approx(rhs, rel=1e-10)


class TestResample:
    def test_identity(self):
        f = GridFunction(np.random.default_rng(0).standard_normal((20, 2)))
        np.testing.assert_allclose(resample(f, 20).values, f.values, atol=1e-12)

    def test_constant(self):
        np.testing.assert_allclose(resample(GridFunction.constant(3.0, 16), 64).values, 3.0, atol=1e-13)

    def test_sine_analytic(self):
        f = GridFunction.from_callable(lambda t: np.sin(4 * np.pi * t), 32)
        t = np.arange(128) / 128
        assert np.max(np.abs(resample(f, 128).values[:, 0] - np.sin(4 * np.pi * t))) < 1e-9

    @pytest.mark.parametrize("n", [16, 17, 30])
    def test_up_down_round_trip(self, n):
        f = trig(n, n // 2 - 1, channels=2, seed=n)
        back = resample(resample(f, 2 * n), n)
        np.testing.assert_allclose(back.values, f.values, rtol=1e-9, atol=1e-10)

    def test_nyquist_cosine_upsampled(self):
        # cos(pi n t) on an even grid is the Nyquist mode; its interpolant is the cosine itself
        f = GridFunction.from_callable(lambda t: np.cos(2 * np.pi * 4 * t), 8)
        t = np.arange(32) / 32
        np.testing.assert_allclose(resample(f, 32).values[:, 0], np.cos(8 * np.pi * t), atol=1e-12)

    def test_downsample_aliases_onto_nyquist(self):
        # downsampling 16 -> 8 must agree with plain decimation for content at frequency 4
        f = GridFunction.from_callable(lambda t: np.cos(2 * np.pi * 4 * t + 0.3), 16)
        np.testing.assert_allclose(resample(f, 8).values[:, 0], f.values[::2, 0], atol=1e-12)

    def test_norm_preserved(self):
        f = trig(24, 8, channels=3, seed=3)
        assert quadrature_l2_norm(resample(f, 48)) == pytest.approx(quadrature_l2_norm(f), rel=1e-6)

    @settings(max_examples=40, deadline=None)
    @given(
        n=st.integers(4, 40),
        m=st.integers(2, 80),
        alpha=st.floats(-3, 3),
        beta=st.floats(-3, 3),
        seed=st.integers(0, 1000),
    )
    def test_linear(self, n, m, alpha, beta, seed):
        rng = np.random.default_rng(seed)
        f = GridFunction(rng.standard_normal((n, 2)))
        g = GridFunction(rng.standard_normal((n, 2)))
        lhs = resample(alpha * f + beta * g, m).values
        rhs = alpha * resample(f, m).values + beta * resample(g, m).values
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)

    def test_rejects_tiny_target(self):
        with pytest.raises(ValueError):
            resample(GridFunction.constant(1.0, 8), 1)


class TestConcat:
    def test_columns(self):
        out = concat_channels(GridFunction.constant(0.0, 4), GridFunction.constant(1.0, 4))
        assert out.channels == 2
        assert np.all(out.values[:, 0] == 0) and np.all(out.values[:, 1] == 1)

    def test_channel_count_associative(self):
        a, b, c = (GridFunction.constant(0.0, 4, ch) for ch in (1, 2, 3))
        assert concat_channels(concat_channels(a, b), c).channels == 6

    def test_mismatch(self):
        with pytest.raises(ResolutionMismatch):
            concat_channels(GridFunction.constant(0.0, 8), GridFunction.constant(0.0, 16))


def test_gridfunction_rejects_nonfinite():
    with pytest.raises(ValueError):
        GridFunction(np.array([[1.0], [np.nan]]))


def test_gridfunction_immutable():
    f = GridFunction.constant(1.0, 4)
    with pytest.raises(ValueError):
        f.values[0, 0] = 2.0
