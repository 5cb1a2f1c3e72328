import math

import numpy as np
import pytest
from scipy import stats

from spreadcpm.channel import (ChannelConfig, NbiConfig, add_awgn, add_nbi_qpsk, apply_phase,
                               noise_equivalent_power)
from spreadcpm.classify import CandidateSet, ObservationWindow, envelope_classify, inner_product
from spreadcpm.cpm import ComplexSignal, CpmConfig, modulate_baseband
from spreadcpm.errors import ConfigurationError
from spreadcpm.psd import estimate_psd


def _correlator_samples(sps, sigma2, draws, rng, n_symbols=3):
    cfg = CpmConfig(samples_per_symbol=sps)
    f = modulate_baseband([1, 0, 1], cfg).samples[: n_symbols * sps]
    noise = math.sqrt(sigma2 / cfg.dt) * (rng.standard_normal((draws, f.size))
                                          + 1j * rng.standard_normal((draws, f.size)))
    return noise @ f.conj() * cfg.dt, np.sum(np.abs(f) ** 2) * cfg.dt


def test_zero_noise_identity():
    s = modulate_baseband([1, 0, 1], CpmConfig())
    assert add_awgn(s, ChannelConfig(0.0), np.random.default_rng(0)) is s


def test_negative_sigma_rejected():
    with pytest.raises(ConfigurationError):
        ChannelConfig(-1.0)


def test_add_awgn_per_sample_variance():
    s = ComplexSignal(np.zeros(200_000, complex), 0.125)
    out = add_awgn(s, ChannelConfig(0.5), np.random.default_rng(1)).samples
    assert np.var(out.real) == pytest.approx(0.5 / 0.125, rel=0.02)
    assert np.var(out.imag) == pytest.approx(0.5 / 0.125, rel=0.02)


def test_add_awgn_matches_inner_product_path():
    cfg = CpmConfig()
    f = modulate_baseband([1, 1, 0, 1], cfg)
    rng = np.random.default_rng(2)
    g = add_awgn(ComplexSignal(np.zeros(len(f), complex), cfg.dt), ChannelConfig(0.8), rng)
    w = ObservationWindow(0, 4)
    assert isinstance(inner_product(f, g, w), complex)


@pytest.mark.parametrize("sps", [4, 8, 16])
def test_correlator_variance_calibration(sps):
    sigma2 = 0.7
    c, energy = _correlator_samples(sps, sigma2, 100_000, np.random.default_rng(sps))
    target = sigma2 * energy
    assert np.var(c.real) == pytest.approx(target, rel=0.03)
    assert np.var(c.imag) == pytest.approx(target, rel=0.03)


def test_correlator_distribution_independent_of_oversampling():
    a, _ = _correlator_samples(4, 1.0, 50_000, np.random.default_rng(5))
    b, _ = _correlator_samples(8, 1.0, 50_000, np.random.default_rng(6))
    assert stats.ks_2samp(a.real, b.real).pvalue > 0.001
    assert stats.ks_2samp(a.imag, b.imag).pvalue > 0.001


def test_phase_known_and_identity():
    s = modulate_baseband([1, 0], CpmConfig())
    out, theta = apply_phase(s, ChannelConfig(phase="known", theta=0.0), None)
    assert theta == 0.0 and out is s
    out, theta = apply_phase(s, ChannelConfig(phase="known", theta=0.25), None)
    assert np.allclose(out.samples, 1j * s.samples)


def test_phase_uniform_histogram():
    rng = np.random.default_rng(7)
    s = ComplexSignal(np.ones(4, complex), 0.25)
    thetas = [apply_phase(s, ChannelConfig(phase="uniform"), rng)[1] for _ in range(10_000)]
    counts, _ = np.histogram(thetas, bins=20, range=(0, 1))
    assert stats.chisquare(counts).pvalue > 0.01


def test_envelope_decision_unchanged_by_phase():
    cfg = CpmConfig()
    f1 = modulate_baseband([0, 0, 0], cfg)
    f2 = modulate_baseband([1, 1, 1], cfg)
    rng = np.random.default_rng(8)
    rx = add_awgn(f1, ChannelConfig(1.0), rng)
    w = ObservationWindow(0, 3)
    cands = CandidateSet((f1, f2), (0, 1))
    base = envelope_classify(rx, cands, w)
    for _ in range(20):
        rotated, _ = apply_phase(rx, ChannelConfig(phase="uniform"), rng)
        assert envelope_classify(rotated, cands, w) == base


def test_nbi_zero_power_identity():
    s = modulate_baseband([1, 0], CpmConfig())
    cfg = ChannelConfig(nbi=NbiConfig(power=0.0))
    assert add_nbi_qpsk(s, cfg, np.random.default_rng(0)) is s


def test_nbi_constant_modulus_and_power():
    s = ComplexSignal(np.zeros(5000, complex), 0.2)
    power = 0.37
    cfg = ChannelConfig(nbi=NbiConfig(symbol_rate=0.01, freq_offset=0.3, power=power))
    x = add_nbi_qpsk(s, cfg, np.random.default_rng(9)).samples
    assert np.allclose(np.abs(x), math.sqrt(power), atol=1e-12)
    assert abs(np.mean(np.abs(x) ** 2) - power) <= 1e-9
    symbols = np.round(np.angle(x * np.exp(-2j * np.pi * 0.3 * np.arange(5000) * 0.2))
                       / (np.pi / 4)).astype(int) % 8
    assert set(np.unique(symbols)) <= {1, 3, 5, 7}


def test_nbi_offset_beyond_band():
    s = ComplexSignal(np.zeros(100, complex), 0.2)
    cfg = ChannelConfig(nbi=NbiConfig(freq_offset=3.0, power=1.0))
    with pytest.raises(ConfigurationError):
        add_nbi_qpsk(s, cfg, np.random.default_rng(0))


def test_nbi_spike_in_spectrum():
    cfg = CpmConfig()
    rng = np.random.default_rng(10)
    s = modulate_baseband(rng.integers(0, 2, 4000), cfg)
    ch = ChannelConfig(nbi=NbiConfig(symbol_rate=5e-4, freq_offset=0.23, power=0.2))
    clean = estimate_psd(s, 8)
    dirty = estimate_psd(add_nbi_qpsk(s, ch, rng), 8)
    k = np.argmin(np.abs(dirty.freqs - 0.23))
    lift = 10 * np.log10(dirty.density[k - 3:k + 4].max() / clean.density[k - 3:k + 4].max())
    assert lift > 10
    # the rectangular interferer has broad sinc sidelobes, so compare inside the main lobe only
    far = (np.abs(dirty.freqs - 0.23) > 0.1) & (np.abs(dirty.freqs) < 0.4)
    assert np.allclose(dirty.density[far], clean.density[far], rtol=0.5)


def test_noise_equivalent_power():
    assert noise_equivalent_power(0.5, 1.2) == pytest.approx(1.2)
    # same density as add_awgn: total power over the sampled band is 2 sigma2 / dt
    s = ComplexSignal(np.zeros(100_000, complex), 0.2)
    g = add_awgn(s, ChannelConfig(0.5), np.random.default_rng(11)).samples
    assert np.mean(np.abs(g) ** 2) == pytest.approx(noise_equivalent_power(0.5, 1 / 0.2), rel=0.02)
