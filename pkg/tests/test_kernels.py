import mpmath
import numpy as np
import pytest

from modsr.degrade import kernels as K


def test_gaussian_iso_sums_to_one():
    for sigma, ksize in [(0.3, 5), (1.0, 7), (2.5, 21), (3.0, 9)]:
        k = K.gaussian_kernel_iso(sigma, ksize)
        assert abs(k.sum() - 1.0) < 1e-12


def test_gaussian_iso_delta_limit():
    k = K.gaussian_kernel_iso(1e-3, 5)
    assert k[2, 2] > 1.0 - 1e-12
    assert np.all(np.delete(k.reshape(-1), 12) < 1e-12)


def test_gaussian_iso_fourfold_symmetry():
    k = K.gaussian_kernel_iso(1.0, 5)
    np.testing.assert_allclose(k, k.T, atol=1e-15)
    np.testing.assert_allclose(k, k[::-1, :], atol=1e-15)
    np.testing.assert_allclose(k, k[:, ::-1], atol=1e-15)


def test_gaussian_iso_rejects_bad_args():
    with pytest.raises(ValueError):
        K.gaussian_kernel_iso(1.0, 4)
    with pytest.raises(ValueError):
        K.gaussian_kernel_iso(0.0, 5)


def test_aniso_equals_iso_when_sigmas_match():
    for theta in (0.0, 0.3, np.pi / 2, 2.1):
        a = K.gaussian_kernel_aniso(1.3, 1.3, theta, 9)
        i = K.gaussian_kernel_iso(1.3, 9)
        np.testing.assert_allclose(a, i, atol=1e-12)


def test_aniso_axis_alignment():
    # theta=0, sigma_x >> sigma_y: mass concentrated along the center row
    k = K.gaussian_kernel_aniso(3.0, 0.2, 0.0, 9)
    center = 4
    assert k[center, :].sum() > 0.95
    assert k[center, 0] > 100 * k[0, center]


def test_aniso_quarter_turn_transposes():
    for sa, sb in [(2.0, 0.5), (1.5, 0.7)]:
        k0 = K.gaussian_kernel_aniso(sa, sb, 0.0, 11)
        k90 = K.gaussian_kernel_aniso(sa, sb, np.pi / 2, 11)
        np.testing.assert_allclose(k0.T, k90, atol=1e-12)


def _j1_oracle(x: float) -> float:
    # high-precision series evaluation, independent of the library path
    with mpmath.workdps(50):
        return float(mpmath.besselj(1, mpmath.mpf(x)))


def test_bessel_j1_spot_values():
    assert K.bessel_j1(0.0) == 0.0
    assert abs(K.bessel_j1(1.0) - 0.4400505857) < 1e-9


def test_bessel_j1_matches_series_oracle_on_0_50():
    xs = np.linspace(0.0, 50.0, 301)
    ours = K.bessel_j1(xs)
    ref = np.array([_j1_oracle(float(x)) for x in xs])
    assert np.max(np.abs(ours - ref)) < 1e-8


def test_bessel_j1_odd_symmetry():
    xs = np.linspace(0.1, 40.0, 50)
    np.testing.assert_allclose(K.bessel_j1(-xs), -K.bessel_j1(xs), rtol=0, atol=1e-15)


def test_sinc_kernel_normalized_and_symmetric():
    for cutoff in (np.pi / 3, 2.0, np.pi):
        k = K.sinc_kernel(cutoff, 13)
        assert abs(k.sum() - 1.0) < 1e-9
        np.testing.assert_allclose(k, k.T, atol=1e-12)
        np.testing.assert_allclose(k, k[::-1, ::-1], atol=1e-12)


def test_sinc_kernel_center_value():
    cutoff = 2.0
    x, y = np.meshgrid(np.arange(13) - 6.0, np.arange(13) - 6.0)
    r = np.sqrt(x * x + y * y)
    raw = np.where(r == 0, cutoff ** 2 / (4 * np.pi),
                   cutoff / (2 * np.pi * np.maximum(r, 1e-12)) * K.bessel_j1(cutoff * r))
    np.testing.assert_allclose(K.sinc_kernel(cutoff, 13), raw / raw.sum(), atol=1e-12)


def test_sinc_kernel_rejects_bad_cutoff():
    with pytest.raises(ValueError):
        K.sinc_kernel(0.0, 9)
    with pytest.raises(ValueError):
        K.sinc_kernel(3.5, 9)
