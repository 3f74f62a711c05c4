import numpy as np
import pytest
from scipy import stats

from fbilora.channel import apply_awgn, apply_channel, apply_rayleigh, complex_noise, draw_alpha, ebn0_to_n0
from fbilora.core import make_config


def test_ebn0_mapping():
    cfg = make_config(7, "s1", 2, 2)
    # Es = n_tot * Eb with Es = 1
    assert ebn0_to_n0(10.0, cfg) == pytest.approx(1 / (20 * 10))
    assert ebn0_to_n0(0.0, 7, es=2.0) == pytest.approx(2 / 7)


def test_noise_variance(rng):
    z = complex_noise((400_000,), 0.5, rng)
    # per complex sample power N0, split evenly across I and Q
    assert np.mean(np.abs(z) ** 2) == pytest.approx(0.5, rel=0.01)
    assert np.var(z.real) == pytest.approx(0.25, rel=0.01)
    assert abs(np.mean(z.real * z.imag)) < 2e-3


def test_zero_noise_is_identity(rng):
    x = np.exp(1j * np.arange(16))
    y = apply_awgn(x, 0.0, rng)
    assert np.array_equal(x, y) and y is not x


def test_alpha_is_unit_exponential(rng):
    a = draw_alpha(200_000, rng)
    assert a.min() > 0
    assert stats.kstest(a, "expon").pvalue > 1e-3


def test_rayleigh_unit_alpha_equals_awgn():
    x = np.ones((4, 32), dtype=complex)
    y1 = apply_awgn(x, 0.1, np.random.default_rng(5))
    y2, _ = apply_rayleigh(x, 0.1, np.random.default_rng(5), alpha=np.ones(4))
    assert np.array_equal(y1, y2)


def test_rayleigh_scales_power_per_symbol(rng):
    x = np.ones((3, 64), dtype=complex)
    y, alpha = apply_rayleigh(x, 0.0, rng)
    np.testing.assert_allclose(np.mean(np.abs(y) ** 2, axis=-1), np.ravel(alpha))


def test_same_seed_same_noise():
    x = np.zeros((2, 8), dtype=complex)
    a = apply_channel(x, 1.0, np.random.default_rng(1), "rayleigh")
    b = apply_channel(x, 1.0, np.random.default_rng(1), "rayleigh")
    assert np.array_equal(a, b)


def test_unknown_channel(rng):
    with pytest.raises(ValueError):
        apply_channel(np.zeros(4, dtype=complex), 1.0, rng, "rician")
