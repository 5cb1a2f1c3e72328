"""Binary continuous-phase modulation (CPM) waveform synthesis.

Conventions used throughout the package:

* time is measured in symbol periods (E = T = 1) and phase in cycles;
* symbol ``k`` contributes ``(h/2)(2b_k - 1) q(t - k - 1/2)`` to the phase,
  where ``q`` is the running integral of the frequency pulse, so the pulse is
  centred on ``k + 1/2`` and the symbol nominally occupies ``[k, k + 1)``;
* symbols before the first transmitted one default to an all-zeros history.
  Only the history symbols whose pulses still overlap ``t >= 0`` are kept;
  older ones have saturated and would only add a constant phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erf

from .errors import ConfigurationError, SignalRangeError

PULSE_KINDS = ("rectangular", "raised-cosine", "gfsk")

#: GFSK pulses are truncated to |t| <= GFSK_SUPPORT symbols.
GFSK_SUPPORT = 4.0

#: Cumulative-pulse table density relative to the sample rate.
TABLE_OVERSAMPLE = 64


@dataclass(frozen=True)
class ShapingPulse:
    """Nonnegative, symmetric frequency pulse with unit area.

    ``rectangular`` is the L=1 indicator of [-1/2, 1/2] (value 1/2 at the two
    jump points so that the pulse stays exactly symmetric), ``raised-cosine``
    is the L=2 pulse ``(1 + cos(pi t))/2`` on [-1, 1], and ``gfsk`` is the
    Gaussian-filtered rectangle with bandwidth-time product ``bt``.
    """

    kind: str = "gfsk"
    bt: float | None = 0.3

    def __post_init__(self):
        if self.kind not in PULSE_KINDS:
            raise ConfigurationError(f"unknown pulse kind {self.kind!r}")
        if self.kind == "gfsk":
            if self.bt is None or not self.bt > 0:
                raise ConfigurationError("gfsk pulse needs bt > 0")
        else:
            object.__setattr__(self, "bt", None)

    @property
    def support(self) -> float:
        """Half-width of the pulse in symbol units."""
        return {"rectangular": 0.5, "raised-cosine": 1.0, "gfsk": GFSK_SUPPORT}[self.kind]

    @property
    def _gfsk_scale(self) -> float:
        return 2.0 * math.pi * self.bt / math.sqrt(2.0 * math.log(2.0))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "rectangular":
            at = np.abs(t)
            return np.where(at < 0.5, 1.0, np.where(at == 0.5, 0.5, 0.0))
        if self.kind == "raised-cosine":
            return np.where(np.abs(t) <= 1.0, 0.5 * (1.0 + np.cos(np.pi * t)), 0.0)
        a = self._gfsk_scale
        val = 0.5 * (erf(a * (t + 0.5)) - erf(a * (t - 0.5)))
        return np.where(np.abs(t) <= GFSK_SUPPORT, val, 0.0)

    def cumulative(self, t):
        """Closed-form running integral ``q(t)`` of the pulse, from 0 to 1."""
        t = np.asarray(t, dtype=float)
        if self.kind == "rectangular":
            return np.clip(t + 0.5, 0.0, 1.0)
        if self.kind == "raised-cosine":
            tc = np.clip(t, -1.0, 1.0)
            return 0.5 * (tc + 1.0) + np.sin(np.pi * tc) / (2.0 * np.pi)
        a = self._gfsk_scale

        def antiderivative(x):
            # d/dx [x erf(ax) + exp(-a^2 x^2) / (a sqrt(pi))] = erf(ax)
            return x * erf(a * x) + np.exp(-((a * x) ** 2)) / (a * math.sqrt(math.pi))

        tc = np.clip(t, -GFSK_SUPPORT, GFSK_SUPPORT)
        q = 0.5 + 0.5 * (antiderivative(tc + 0.5) - antiderivative(tc - 0.5))
        q = np.where(t <= -GFSK_SUPPORT, 0.0, np.where(t >= GFSK_SUPPORT, 1.0, q))
        return np.clip(q, 0.0, 1.0)


def shaping_pulse_eval(pulse: ShapingPulse, t):
    """Evaluate the frequency pulse ``F(t)``; scalar in, scalar out."""
    value = pulse(t)
    return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class CpmConfig:
    """Modulation parameters with energy and symbol period fixed to 1."""

    h: float = 0.8
    pulse: ShapingPulse = ShapingPulse()
    samples_per_symbol: int = 5

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigurationError("modulation index h must be positive")
        if int(self.samples_per_symbol) != self.samples_per_symbol or self.samples_per_symbol < 4:
            raise ConfigurationError("samples_per_symbol must be an integer >= 4")
        object.__setattr__(self, "samples_per_symbol", int(self.samples_per_symbol))

    @property
    def dt(self) -> float:
        return 1.0 / self.samples_per_symbol

    @property
    def history_length(self) -> int:
        """Number of preceding symbols whose pulses reach into ``t >= 0``."""
        return max(0, math.ceil(self.pulse.support - 0.5))

    def describe(self) -> dict:
        return {
            "h": self.h,
            "pulse": self.pulse.kind,
            "bt": self.pulse.bt,
            "samples_per_symbol": self.samples_per_symbol,
        }


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ComplexSignal:
    """Uniformly sampled complex-baseband waveform.

    Sample ``n`` sits at time ``t0 + n * dt`` (symbol units) and stands for
    the interval ``[t0 + n dt, t0 + (n + 1) dt)`` in Riemann sums.
    """

    samples: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.complex128)
        if arr.ndim != 1:
            raise ConfigurationError("signal samples must be one-dimensional")
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        object.__setattr__(self, "samples", _readonly(arr))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def t_end(self) -> float:
        return self.t0 + self.samples.size * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)

    def index_of(self, t: float) -> int:
        """Sample index of time ``t``; ``t`` must lie on the sample grid."""
        pos = (t - self.t0) / self.dt
        idx = int(round(pos))
        if abs(pos - idx) > 1e-6:
            raise ConfigurationError(f"time {t} is not aligned to the sample grid")
        return idx

    def window(self, start: float, end: float) -> "ComplexSignal":
        i0, i1 = self.index_of(start), self.index_of(end)
        if i0 < 0 or i1 > self.samples.size or i1 <= i0:
            raise SignalRangeError(
                f"window [{start}, {end}) outside signal [{self.t0}, {self.t_end})"
            )
        return ComplexSignal(self.samples[i0:i1], self.dt, self.t0 + i0 * self.dt)

    def __mul__(self, scalar) -> "ComplexSignal":
        return ComplexSignal(self.samples * scalar, self.dt, self.t0)

    __rmul__ = __mul__


@dataclass(frozen=True)
class PassbandSignal:
    """Real passband samples on the same time grid convention as ComplexSignal."""

    samples: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "samples", _readonly(np.array(self.samples, dtype=float)))


def as_bits(seq, name: str = "bits") -> np.ndarray:
    """Validate a {0,1} sequence and return it as a uint8 array."""
    arr = np.asarray(seq)
    if arr.ndim != 1:
        raise ConfigurationError(f"{name} must be one-dimensional")
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ConfigurationError(f"{name} must contain only 0 and 1")
    return arr.astype(np.uint8)


@lru_cache(maxsize=32)
def _cumulative_table(pulse: ShapingPulse, samples_per_symbol: int):
    step = 1.0 / (TABLE_OVERSAMPLE * samples_per_symbol)
    half = math.ceil(pulse.support / step)
    nodes = step * np.arange(-half, half + 1)
    values = pulse.cumulative(nodes)
    return _readonly(nodes), _readonly(values)


def pulse_integral(pulse: ShapingPulse, x, samples_per_symbol: int = 8):
    """``q(x)`` from the cached cumulative table (linear interpolation)."""
    nodes, values = _cumulative_table(pulse, samples_per_symbol)
    return np.interp(x, nodes, values, left=0.0, right=1.0)


def _antipodal_with_history(bits, cfg: CpmConfig, history):
    bits = as_bits(bits)
    if bits.size == 0:
        raise ConfigurationError("symbol sequence must be nonempty")
    hl = cfg.history_length
    if history is None:
        hist = np.zeros(hl, dtype=np.uint8)
    else:
        hist = as_bits(history, "history")[-hl:] if hl else np.zeros(0, dtype=np.uint8)
    a = 2.0 * np.concatenate([hist, bits]).astype(float) - 1.0
    return a, hist.size, bits.size


def phase_trajectory(bits, cfg: CpmConfig, grid, history=None) -> np.ndarray:
    """Phase (cycles) of the CPM signal for ``bits`` at the times in ``grid``.

    ``grid`` must lie inside ``[0, len(bits)]``. ``history`` holds the symbols
    transmitted just before ``bits`` (default all zeros); pass an empty
    sequence to drop the history contribution entirely.
    """
    a, n_hist, m = _antipodal_with_history(bits, cfg, history)
    t = np.asarray(grid, dtype=float)
    if t.size and (t.min() < -1e-12 or t.max() > m + 1e-12):
        raise SignalRangeError(f"grid must lie within [0, {m}]")

    nodes, values = _cumulative_table(cfg.pulse, cfg.samples_per_symbol)
    reach = math.ceil(cfg.pulse.support + 0.5)
    k0 = np.floor(t).astype(np.int64)
    # index into a for symbol k is k + n_hist
    cums = np.concatenate([[0.0], np.cumsum(a)])
    first = k0 - reach - 1 + n_hist
    phase = cums[np.clip(first + 1, 0, a.size)]
    for lag in range(-reach, reach + 1):
        k = k0 - lag
        idx = k + n_hist
        inside = (idx >= 0) & (idx < a.size)
        x = t - k - 0.5
        contrib = np.interp(x, nodes, values, left=0.0, right=1.0)
        phase = phase + np.where(inside, a[np.clip(idx, 0, a.size - 1)] * contrib, 0.0)
    return 0.5 * cfg.h * phase


def modulate_baseband(bits, cfg: CpmConfig, theta: float = 0.0, history=None,
                      t0: float = 0.0) -> ComplexSignal:
    """Unit-modulus baseband CPM waveform ``exp(2 pi i (theta + phi(t)))``.

    The returned signal covers ``len(bits)`` symbols with ``samples_per_symbol``
    samples each; ``t0`` only relabels the time axis.
    """
    a, n_hist, m = _antipodal_with_history(bits, cfg, history)
    phase = _native_phase(a, n_hist, m, cfg)
    return ComplexSignal(np.exp(2j * np.pi * (theta + phase)), cfg.dt, t0)


@lru_cache(maxsize=32)
def _phase_increments(cfg: CpmConfig):
    """Per-sample increments ``q(u dt - 1/2) - q((u - 1) dt - 1/2)`` and the first ``u``."""
    sps = cfg.samples_per_symbol
    u_lo = math.floor((0.5 - cfg.pulse.support) * sps)
    u_hi = math.ceil((0.5 + cfg.pulse.support) * sps)
    u = np.arange(u_lo - 1, u_hi + 1)
    q = pulse_integral(cfg.pulse, u * cfg.dt - 0.5, sps)
    return _readonly(np.diff(q)), u_lo


def _native_phase(a: np.ndarray, n_hist: int, m: int, cfg: CpmConfig) -> np.ndarray:
    """Same values as :func:`phase_trajectory` on the sample grid, by convolution."""
    sps = cfg.samples_per_symbol
    inc, u_lo = _phase_increments(cfg)
    impulses = np.zeros(a.size * sps)
    impulses[::sps] = a
    phase = np.cumsum(np.convolve(impulses, inc))
    start = n_hist * sps - u_lo
    return 0.5 * cfg.h * phase[start:start + m * sps]


def modulate_passband(bits, cfg: CpmConfig, theta: float, omega_c: float,
                      history=None) -> PassbandSignal:
    """Real passband signal ``sqrt(2) cos(2 pi (theta + omega_c t + phi(t)))``."""
    if omega_c * cfg.dt >= 0.5:
        raise ConfigurationError(
            f"carrier {omega_c} cycles/symbol violates Nyquist at "
            f"{cfg.samples_per_symbol} samples/symbol"
        )
    base = modulate_baseband(bits, cfg, theta, history)
    t = base.times
    carrier = np.exp(2j * np.pi * omega_c * t)
    return PassbandSignal(math.sqrt(2.0) * np.real(carrier * base.samples), cfg.dt)


@lru_cache(maxsize=256)
def phase_matrix(cfg: CpmConfig, n_symbols: int, n_history: int) -> np.ndarray:
    """Matrix ``Q`` with ``phase = (h/2) * a @ Q`` on the native sample grid.

    Row ``j`` belongs to symbol ``j - n_history`` (history rows first) and
    column ``n`` to time ``n * dt`` within ``[0, n_symbols)``.  Symbols older
    than the history rows are saturated and contribute only a constant.
    """
    nodes, values = _cumulative_table(cfg.pulse, cfg.samples_per_symbol)
    t = np.arange(n_symbols * cfg.samples_per_symbol) * cfg.dt
    k = np.arange(-n_history, n_symbols)
    q = np.interp(t[None, :] - k[:, None] - 0.5, nodes, values, left=0.0, right=1.0)
    return _readonly(q)
