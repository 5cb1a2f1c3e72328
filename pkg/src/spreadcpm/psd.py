"""Multitaper spectral estimation with sine tapers.

Taper ``k`` (``k = 1 .. K``) of a length-``L`` record is
``sqrt(2 / (L + 1)) * sin(pi k (n + 1) / (L + 1))``.  Densities are scaled so
that summing ``density * df`` over the grid gives the mean-square value of
the record.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cpm import ComplexSignal
from .errors import ConfigurationError

MIN_SAMPLES = 64


def sine_tapers(length: int, count: int) -> np.ndarray:
    n = np.arange(length)
    k = np.arange(1, count + 1)[:, None]
    return np.sqrt(2.0 / (length + 1)) * np.sin(np.pi * k * (n + 1) / (length + 1))


@dataclass(frozen=True)
class PsdEstimate:
    """Spectral density on a grid symmetric about zero.

    Attributes:
        freqs: cycles per symbol, ascending, odd length with 0 in the middle.
        density: linear density (power per cycle/symbol).
        tapers: number of tapers averaged.
        resolution: half-bandwidth of the taper spectral window, cycles/symbol.
    """

    freqs: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)
    tapers: int
    resolution: float

    @property
    def df(self) -> float:
        return float(self.freqs[1] - self.freqs[0])

    @property
    def density_db(self) -> np.ndarray:
        """Density in dB relative to its maximum."""
        return 10 * np.log10(np.maximum(self.density, 1e-300) / self.density.max())

    def total_power(self) -> float:
        return float(self.density.sum() * self.df)

    def binned(self, width: float, limit: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Average the linear density over bins of ``width`` centred on multiples of it."""
        limit = self.freqs[-1] if limit is None else limit
        n_half = int(np.floor(limit / width - 0.5))
        centres = np.arange(-n_half, n_half + 1) * width
        idx = np.round(self.freqs / width).astype(np.int64) + n_half
        keep = (idx >= 0) & (idx < centres.size)
        sums = np.bincount(idx[keep], weights=self.density[keep], minlength=centres.size)
        counts = np.bincount(idx[keep], minlength=centres.size)
        return centres, sums / np.maximum(counts, 1)


def estimate_psd(sig: ComplexSignal, tapers: int = 8) -> PsdEstimate:
    x = np.asarray(sig.samples)
    if x.size < MIN_SAMPLES:
        raise ConfigurationError(f"need at least {MIN_SAMPLES} samples")
    if tapers < 1:
        raise ConfigurationError("need at least one taper")
    length = x.size
    nfft = length if length % 2 else length + 1
    v = sine_tapers(length, tapers)
    spec = np.fft.fft(v * x[None, :], n=nfft, axis=1)
    density = np.fft.fftshift((np.abs(spec) ** 2).mean(axis=0)) * sig.dt
    freqs = (np.arange(nfft) - nfft // 2) / (nfft * sig.dt)
    resolution = (tapers + 1) / (2 * (length + 1) * sig.dt)
    return PsdEstimate(freqs, density, tapers, resolution)


def main_lobe(est: PsdEstimate, drop_db: float = 10.0, smooth: float = 0.05) -> tuple[float, float]:
    """Edges of the contiguous band around the peak within ``drop_db`` of it.

    The density is first averaged over ``smooth`` cycles/symbol so spectral
    lines and estimator ripple do not cut the band short.
    """
    width = max(1, int(round(smooth / est.df)))
    kernel = np.ones(width) / width
    level = np.convolve(est.density, kernel, mode="same")
    peak = int(np.argmax(level))
    inside = level >= level[peak] * 10 ** (-drop_db / 10)
    lo = peak
    while lo > 0 and inside[lo - 1]:
        lo -= 1
    hi = peak
    while hi < inside.size - 1 and inside[hi + 1]:
        hi += 1
    return float(est.freqs[lo]), float(est.freqs[hi])


def spike_heights(est: PsdEstimate, freqs, neighbourhood: float = 0.04) -> np.ndarray:
    """dB excess of the local maximum near each frequency over the local median."""
    out = []
    half_peak = max(2, int(round(2 * est.resolution / est.df)))
    for f in np.atleast_1d(freqs):
        centre = int(np.argmin(np.abs(est.freqs - f)))
        span = int(round(neighbourhood / est.df))
        local = est.density[max(0, centre - span):centre + span + 1]
        peak = est.density[max(0, centre - half_peak):centre + half_peak + 1].max()
        out.append(10 * np.log10(peak / np.median(local)))
    return np.array(out)
