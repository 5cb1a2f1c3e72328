"""Channel impairments at complex baseband.

White noise is scaled so that the discrete correlator ``inner_product(f, G)``
behaves like the continuous white-noise functional of power ``sigma2``: each
quadrature of ``<f, G>`` has variance ``sigma2 * ||f||**2``.  That requires
``sigma2 / dt`` per real component of every sample, independent of the
oversampling factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cpm import ComplexSignal
from .errors import ConfigurationError


@dataclass(frozen=True)
class NbiConfig:
    """Narrowband QPSK interferer.

    Attributes:
        symbol_rate: interferer symbols per CPM symbol (narrowband means << 1).
        freq_offset: carrier offset in cycles/symbol.
        power: constant interferer power ``|x|**2``.
    """

    symbol_rate: float = 5e-4
    freq_offset: float = 0.0
    power: float = 0.0

    def __post_init__(self):
        if not self.symbol_rate > 0:
            raise ConfigurationError("interferer symbol rate must be positive")
        if self.power < 0:
            raise ConfigurationError("interferer power must be >= 0")


@dataclass(frozen=True)
class ChannelConfig:
    sigma2: float = 0.0
    phase: str = "known"
    theta: float = 0.0
    nbi: NbiConfig | None = field(default=None)

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ConfigurationError("sigma2 must be >= 0")
        if self.phase not in ("known", "uniform"):
            raise ConfigurationError(f"unknown phase model {self.phase!r}")


def add_awgn(sig: ComplexSignal, cfg: ChannelConfig, rng) -> ComplexSignal:
    if cfg.sigma2 == 0:
        return sig
    scale = np.sqrt(cfg.sigma2 / sig.dt)
    n = len(sig)
    noise = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return ComplexSignal(sig.samples + noise, sig.dt, sig.t0)


def apply_phase(sig: ComplexSignal, cfg: ChannelConfig, rng) -> tuple[ComplexSignal, float]:
    """Rotate by ``exp(2 pi i theta)``; ``theta`` is drawn from U[0, 1) in uniform mode."""
    theta = float(rng.random()) if cfg.phase == "uniform" else float(cfg.theta)
    if theta == 0.0:
        return sig, theta
    return ComplexSignal(sig.samples * np.exp(2j * np.pi * theta), sig.dt, sig.t0), theta


def qpsk_interferer(n_samples: int, dt: float, t0: float, nbi: NbiConfig, rng) -> np.ndarray:
    """Rectangular-pulse QPSK with random symbols and a random symbol-clock offset."""
    t = t0 + np.arange(n_samples) * dt
    offset = rng.random()
    sym_idx = np.floor(t * nbi.symbol_rate + offset).astype(np.int64)
    sym_idx -= sym_idx[0]
    symbols = rng.integers(0, 4, size=int(sym_idx[-1]) + 1)
    phase = 0.125 + 0.25 * symbols[sym_idx] + nbi.freq_offset * t
    return np.sqrt(nbi.power) * np.exp(2j * np.pi * phase)


def add_nbi_qpsk(sig: ComplexSignal, cfg: ChannelConfig, rng) -> ComplexSignal:
    nbi = cfg.nbi
    if nbi is None or nbi.power == 0:
        return sig
    if abs(nbi.freq_offset) * sig.dt >= 0.5:
        raise ConfigurationError("interferer offset beyond the sampled band")
    x = qpsk_interferer(len(sig), sig.dt, sig.t0, nbi, rng)
    return ComplexSignal(sig.samples + x, sig.dt, sig.t0)


def noise_equivalent_power(sigma2: float, bandwidth: float) -> float:
    """White-noise power collected over ``bandwidth`` cycles/symbol.

    The complex noise density is ``2 * sigma2`` per unit frequency.
    """
    return 2.0 * sigma2 * bandwidth
