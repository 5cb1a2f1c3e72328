"""Receiver decision rules.

The single-decision operations (``inner_product``, ``coherent_classify``,
``envelope_classify``, ``noncoherent_block_demod``, ``joint_codeword_demod``)
work on :class:`~spreadcpm.cpm.ComplexSignal` objects.  The ``*_bits``
functions decide every bit of a received message at once and are what the
experiment harness uses; the tests check that both paths agree.

Exact ties are settled by a fair coin from the caller's generator.  Without
a generator a fixed-seed one is used, so tie outcomes are still reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .cpm import ComplexSignal, CpmConfig, phase_matrix
from .errors import ConfigurationError, SignalRangeError
from .spreading import Codebook

EQUAL_NORM_RTOL = 0.01


@dataclass(frozen=True)
class ObservationWindow:
    start: float
    end: float

    def __post_init__(self):
        if not self.end > self.start:
            raise ConfigurationError("window end must exceed its start")


@dataclass(frozen=True)
class CandidateSet:
    """Hypothesis waveforms sharing one grid, with the label each stands for."""

    waveforms: tuple
    labels: tuple

    def __post_init__(self):
        waves = tuple(self.waveforms)
        labels = tuple(self.labels)
        if not waves:
            raise ConfigurationError("candidate set is empty")
        if len(waves) != len(labels):
            raise ConfigurationError("need one label per waveform")
        ref = waves[0]
        for w in waves[1:]:
            if w.dt != ref.dt or w.t0 != ref.t0 or len(w) != len(ref):
                raise ConfigurationError("candidates must share grid and extent")
        object.__setattr__(self, "waveforms", waves)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.waveforms)


def _tie_rng(rng):
    return rng if rng is not None else np.random.default_rng(0)


def _segment(sig: ComplexSignal, w: ObservationWindow) -> np.ndarray:
    i0, i1 = sig.index_of(w.start), sig.index_of(w.end)
    if i0 < 0 or i1 > len(sig):
        raise SignalRangeError(f"window [{w.start}, {w.end}) outside signal")
    return sig.samples[i0:i1]


def inner_product(f: ComplexSignal, g: ComplexSignal, w: ObservationWindow) -> complex:
    """Riemann sum of ``f * conj(g) * dt`` over the window."""
    if not np.isclose(f.dt, g.dt, rtol=1e-12, atol=0):
        raise ConfigurationError("signals sampled at different rates")
    offset = (f.t0 - g.t0) / f.dt
    if abs(offset - round(offset)) > 1e-6:
        raise ConfigurationError("signals sampled on offset grids")
    return complex(np.vdot(_segment(g, w), _segment(f, w)) * f.dt)


def _pick(stats: np.ndarray, rng) -> int:
    best = np.flatnonzero(stats == stats.max())
    if best.size == 1:
        return int(best[0])
    return int(best[_tie_rng(rng).integers(best.size)])


def coherent_classify(rx: ComplexSignal, cands: CandidateSet, w: ObservationWindow, rng=None):
    """Correlation classifier: maximise ``Re<f_j, rx> - ||f_j||^2 / 2``."""
    if len(cands) != 2:
        raise ConfigurationError("coherent classification needs exactly two candidates")
    stats = np.array([
        inner_product(f, rx, w).real - 0.5 * inner_product(f, f, w).real
        for f in cands.waveforms
    ])
    return cands.labels[_pick(stats, rng)]


def likelihood_ratio_classify(rx: ComplexSignal, cands: CandidateSet, w: ObservationWindow,
                              sigma: float, tau: float = 1.0, rng=None):
    """Likelihood-ratio test between two known waveforms in white noise.

    Shifting ``rx`` by the second candidate turns the binary problem into
    signal ``f = f1 - f2`` versus noise only; the first label wins when
    ``<f, rx - f2>/sigma^2 - ||f||^2/(2 sigma^2) > log(tau)``.
    """
    if len(cands) != 2:
        raise ConfigurationError("likelihood-ratio classification needs two candidates")
    f1, f2 = cands.waveforms
    diff = ComplexSignal(f1.samples - f2.samples, f1.dt, f1.t0)
    shifted = ComplexSignal(_segment(rx, w) - _segment(f2, w), rx.dt, w.start)
    stat = (inner_product(diff, shifted, w).real - 0.5 * inner_product(diff, diff, w).real) / sigma**2
    threshold = np.log(tau)
    if stat == threshold:
        return cands.labels[int(_tie_rng(rng).integers(2))]
    return cands.labels[0] if stat > threshold else cands.labels[1]


def envelope_classify(rx: ComplexSignal, cands: CandidateSet, w: ObservationWindow, rng=None):
    """Envelope classifier: maximise ``|<f_j, rx>|`` over equal-norm candidates."""
    norms = np.array([inner_product(f, f, w).real for f in cands.waveforms])
    if norms.max() > (1 + EQUAL_NORM_RTOL) * norms.min():
        raise ConfigurationError("envelope classification needs equal-norm candidates")
    stats = np.array([abs(inner_product(f, rx, w)) for f in cands.waveforms])
    return cands.labels[_pick(stats, rng)]


# --------------------------------------------------------------------------
# candidate synthesis


def _antipodal(bits) -> np.ndarray:
    return 2.0 * np.asarray(bits, dtype=float) - 1.0


@lru_cache(maxsize=4096)
def _bank_cached(cfg: CpmConfig, rate_n: int, words_key: bytes, k: int) -> np.ndarray:
    words = np.frombuffer(words_key, dtype=np.uint8).reshape(k, rate_n)
    combos = np.array(list(itertools.product((0, 1), repeat=k)), dtype=np.uint8)
    chips = (words[None, :, :] ^ combos[:, :, None]).reshape(len(combos), k * rate_n)
    hl = cfg.history_length
    q = phase_matrix(cfg, k * rate_n, hl)
    phase = 0.5 * cfg.h * (_antipodal(chips) @ q[hl:] - q[:hl].sum(axis=0))
    bank = np.exp(2j * np.pi * phase)
    bank.setflags(write=False)
    return bank


def candidate_bank(book: Codebook, cfg: CpmConfig, first_position: int, k: int) -> np.ndarray:
    """All ``2**k`` waveforms for bit positions ``first_position .. first_position + k - 1``.

    Row ``j`` carries the bits of ``j`` written MSB-first.  Every candidate
    starts from an all-zeros chip history, so only relative phases are
    meaningful.
    """
    if first_position < 0 or first_position + k > book.num_positions:
        raise SignalRangeError("candidate window exceeds the codebook")
    words = np.ascontiguousarray(book.words[first_position:first_position + k])
    return _bank_cached(cfg, book.rate_n, words.tobytes(), k)


def candidate_set(book: Codebook, cfg: CpmConfig, first_position: int, k: int) -> CandidateSet:
    bank = candidate_bank(book, cfg, first_position, k)
    t0 = float(first_position * book.rate_n)
    labels = tuple(itertools.product((0, 1), repeat=k))
    return CandidateSet(tuple(ComplexSignal(row, cfg.dt, t0) for row in bank), labels)


def _block_span(bit_index: int, k_bits: int, n_bits: int) -> tuple[int, int]:
    half = min(k_bits // 2, bit_index, n_bits - 1 - bit_index)
    return bit_index - half, 2 * half + 1


def _check_rx(rx: ComplexSignal, cfg: CpmConfig, end_time: float):
    if not np.isclose(rx.dt, cfg.dt):
        raise ConfigurationError("received signal sampled at a different rate")
    if rx.t0 > 1e-9 or rx.t_end < end_time - 1e-9:
        raise SignalRangeError("received signal does not cover the demodulation window")


def _bits_covered(rx: ComplexSignal, book: Codebook) -> int:
    return min(book.num_positions, int(round(rx.t_end)) // book.rate_n)


def noncoherent_block_demod(rx: ComplexSignal, k_bits: int, book: Codebook, cfg: CpmConfig,
                            bit_index: int, rng=None) -> int:
    """Decide one bit by envelope correlation against all 2^K neighbourhood waveforms.

    The window is centred on ``bit_index`` and shortened symmetrically near
    the message edges.  The bit whose candidates have the larger mean
    correlation magnitude wins.
    """
    if k_bits < 1 or k_bits % 2 == 0:
        raise ConfigurationError("k_bits must be odd")
    if k_bits > 10:
        raise ConfigurationError("k_bits above 10 is not supported")
    n_bits = _bits_covered(rx, book)
    if not 0 <= bit_index < n_bits:
        raise SignalRangeError("bit index outside the received message")
    lo, k = _block_span(bit_index, k_bits, n_bits)
    cands = candidate_set(book, cfg, lo, k)
    w = ObservationWindow(lo * book.rate_n, (lo + k) * book.rate_n)
    mags = np.array([abs(inner_product(f, rx, w)) for f in cands.waveforms])
    centre = np.array([lab[k // 2] for lab in cands.labels])
    means = np.array([mags[centre == 0].mean(), mags[centre == 1].mean()])
    return _pick(means, rng)


def coherent_candidates(chips, book: Codebook, cfg: CpmConfig, bit_index: int,
                        theta: float = 0.0) -> CandidateSet:
    """Both hypotheses for ``bit_index`` with the phase implied by the known past.

    ``chips`` are the chips sent before the window (at least ``bit_index * N``
    of them).  Later chips are unknown and left out.
    """
    n = book.rate_n
    start = bit_index * n
    past = np.asarray(chips[:start], dtype=float)
    if past.size < start:
        raise ConfigurationError("coherent demodulation needs the chips before the window")
    hl = cfg.history_length
    ext = np.concatenate([-np.ones(hl), _antipodal(past)])
    offset = 0.5 * cfg.h * ext[:start].sum()
    q = phase_matrix(cfg, n, hl)
    hist = ext[start:start + hl] @ q[:hl]
    waves = []
    for b in (0, 1):
        phase = offset + 0.5 * cfg.h * (hist + _antipodal(book.word(bit_index, b)) @ q[hl:])
        waves.append(ComplexSignal(np.exp(2j * np.pi * (theta + phase)), cfg.dt, float(start)))
    return CandidateSet(tuple(waves), (0, 1))


def joint_codeword_demod(rx: ComplexSignal, book: Codebook, cfg: CpmConfig, bit_index: int,
                         mode: str = "noncoherent", theta: float = 0.0, past_chips=None,
                         rng=None) -> int:
    """Decide one bit by correlating its N-chip window against the two codeword waveforms.

    ``coherent`` mode needs the carrier phase ``theta`` and the chips sent
    before the window; ``noncoherent`` mode ignores both.
    """
    n_bits = _bits_covered(rx, book)
    if not 0 <= bit_index < n_bits:
        raise SignalRangeError("bit index outside the received message")
    w = ObservationWindow(bit_index * book.rate_n, (bit_index + 1) * book.rate_n)
    if mode == "noncoherent":
        bank = candidate_bank(book, cfg, bit_index, 1)
        cands = CandidateSet(tuple(ComplexSignal(r, cfg.dt, w.start) for r in bank), (0, 1))
        return envelope_classify(rx, cands, w, rng)
    if mode == "coherent":
        if past_chips is None:
            if bit_index:
                raise ConfigurationError("coherent mode needs past_chips")
            past_chips = ()
        cands = coherent_candidates(past_chips, book, cfg, bit_index, theta)
        return coherent_classify(rx, cands, w, rng)
    raise ConfigurationError(f"unknown mode {mode!r}")


# --------------------------------------------------------------------------
# whole-message receivers


def _settle(stat0: np.ndarray, stat1: np.ndarray, rng) -> np.ndarray:
    bits = (stat1 > stat0).astype(np.uint8)
    ties = stat0 == stat1
    if ties.any():
        bits[ties] = _tie_rng(rng).integers(0, 2, size=int(ties.sum()), dtype=np.uint8)
    return bits


def _message_samples(rx, cfg: CpmConfig, n_samples: int) -> np.ndarray:
    samples = rx.samples if isinstance(rx, ComplexSignal) else np.asarray(rx)
    if samples.shape[-1] < n_samples:
        raise SignalRangeError("received signal shorter than the message")
    return samples


def block_noncoherent_bits(rx, book: Codebook, cfg: CpmConfig, n_bits: int, k_bits: int = 1,
                           rng=None) -> np.ndarray:
    """Noncoherent-block decisions for bits ``0 .. n_bits - 1`` (K = 1 is joint).

    ``rx`` is a signal or an array of samples whose last axis is time; leading
    axes (independent trials) are carried through to the output.
    """
    if k_bits < 1 or k_bits % 2 == 0:
        raise ConfigurationError("k_bits must be odd")
    if n_bits > book.num_positions:
        raise SignalRangeError("message longer than the codebook")
    sps, n = cfg.samples_per_symbol, book.rate_n
    samples = _message_samples(rx, cfg, n_bits * n * sps)
    lead = samples.shape[:-1]
    stat0 = np.empty(lead + (n_bits,))
    stat1 = np.empty(lead + (n_bits,))
    for a in range(n_bits):
        lo, k = _block_span(a, k_bits, n_bits)
        bank = candidate_bank(book, cfg, lo, k)
        seg = samples[..., lo * n * sps:(lo + k) * n * sps]
        mags = np.abs(seg @ bank.conj().T)
        centre = (np.arange(bank.shape[0]) >> (k // 2)) & 1
        stat0[..., a] = mags[..., centre == 0].mean(axis=-1)
        stat1[..., a] = mags[..., centre == 1].mean(axis=-1)
    return _settle(stat0, stat1, rng)


def coherent_bits(rx, book: Codebook, cfg: CpmConfig, chips, theta=0.0,
                  rng=None) -> np.ndarray:
    """Coherent codeword decisions given the carrier phase and the true past chips.

    This is the known-phase (genie-aided) receiver: for every bit the phase
    accumulated by the earlier chips is taken from ``chips``.  ``chips`` may
    be 2-D (trials by chips) with ``theta`` one value per trial.
    """
    chips = np.asarray(chips, dtype=np.uint8)
    n, sps, hl = book.rate_n, cfg.samples_per_symbol, cfg.history_length
    n_bits = chips.shape[-1] // n
    lead = chips.shape[:-1]
    samples = _message_samples(rx, cfg, n_bits * n * sps)
    hist = -np.ones(lead + (hl,))
    ext = np.concatenate([hist, _antipodal(chips)], axis=-1)
    cum = np.concatenate([np.zeros(lead + (1,)), np.cumsum(ext, axis=-1)], axis=-1)
    q = phase_matrix(cfg, n, hl)
    starts = np.arange(n_bits) * n
    rows = starts[:, None] + np.arange(hl)[None, :]
    common = cum[..., starts, None] + ext[..., rows] @ q[:hl]
    words = _antipodal(book.words[:n_bits]) @ q[hl:]
    segs = samples[..., : n_bits * n * sps].reshape(lead + (n_bits, n * sps))
    rot = np.exp(2j * np.pi * np.asarray(theta, dtype=float))[..., None, None]
    stats = []
    for sign in (1.0, -1.0):
        cand = rot * np.exp(1j * np.pi * cfg.h * (common + sign * words))
        # equal norms, so Re<f, rx> alone decides
        stats.append(np.real(np.sum(cand * segs.conj(), axis=-1)))
    return _settle(stats[0], stats[1], rng)
