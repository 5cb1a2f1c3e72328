import numpy as np
import pytest

from spreadcpm.cpm import ComplexSignal, CpmConfig, modulate_baseband
from spreadcpm.errors import ConfigurationError
from spreadcpm.psd import estimate_psd, main_lobe, sine_tapers, spike_heights


def test_tapers_orthonormal():
    v = sine_tapers(200, 6)
    assert np.allclose(v @ v.T, np.eye(6), atol=1e-12)


def test_tone_peak_location():
    dt = 0.125
    t = np.arange(4096) * dt
    est = estimate_psd(ComplexSignal(np.exp(2j * np.pi * 0.8 * t), dt), 6)
    assert abs(est.freqs[np.argmax(est.density)] - 0.8) <= est.resolution


def test_parseval():
    rng = np.random.default_rng(0)
    s = modulate_baseband(rng.integers(0, 2, 800), CpmConfig())
    est = estimate_psd(s, 8)
    assert est.total_power() == pytest.approx(np.mean(np.abs(s.samples) ** 2), rel=0.02)


def test_symmetric_grid():
    for n in (100, 101):
        est = estimate_psd(ComplexSignal(np.ones(n, complex), 0.2), 4)
        assert est.freqs.size % 2 == 1
        assert est.freqs[est.freqs.size // 2] == 0.0
        assert np.allclose(est.freqs, -est.freqs[::-1])


def test_short_signal_rejected():
    with pytest.raises(ConfigurationError):
        estimate_psd(ComplexSignal(np.ones(10, complex), 0.2))


def test_main_lobe_of_gfsk():
    rng = np.random.default_rng(12345)
    lo, hi = main_lobe(estimate_psd(modulate_baseband(rng.integers(0, 2, 4000), CpmConfig()), 16))
    assert lo == pytest.approx(-hi, abs=0.02)
    assert 0.3 < hi < 0.8


def test_binned_average():
    est = estimate_psd(ComplexSignal(np.ones(501, complex), 0.2), 2)
    centres, vals = est.binned(0.1, 1.0)
    assert centres[centres.size // 2] == 0.0
    assert vals.size == centres.size


def test_spike_heights_detects_tone():
    rng = np.random.default_rng(3)
    dt = 0.2
    noise = rng.standard_normal(20000) + 1j * rng.standard_normal(20000)
    tone = 3 * np.exp(2j * np.pi * 0.4 * np.arange(20000) * dt)
    est = estimate_psd(ComplexSignal(noise + tone, dt), 4)
    h = spike_heights(est, [0.4, -1.0])
    assert h[0] > 20 and h[1] < 3
