"""Comparison baselines: convolutional coding with hard-decision Viterbi
decoding, and Gray-mapped QPSK.

Generator polynomials are written in octal with the most significant bit
tapping the current input bit, e.g. ``(7, 5)`` for the K=3 rate-1/2 code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .cpm import as_bits
from .errors import ConfigurationError, DomainError, SignalRangeError

#: Default constraint-length-8 codes (maximum free distance sets).
DEFAULT_GENERATORS = {
    2: ("247", "371"),
    3: ("225", "331", "367"),
}


@dataclass(frozen=True)
class BerEstimate:
    """Monte Carlo bit error rate.

    ``standard_error`` is the binomial value ``sqrt(p (1 - p) / bits)`` over
    all decided bits, treating bit errors as independent.
    """

    trials: int
    bits: int
    bit_errors: int
    seed: int | None = None

    def __post_init__(self):
        if self.bits < 1 or not 0 <= self.bit_errors <= self.bits:
            raise ConfigurationError("need 0 <= bit_errors <= bits and bits >= 1")

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits

    @property
    def standard_error(self) -> float:
        p = self.ber
        return math.sqrt(p * (1 - p) / self.bits)


def _octal(text: str) -> int:
    try:
        return int(text, 8)
    except ValueError:
        raise ConfigurationError(f"generator {text!r} is not an octal number") from None


@dataclass(frozen=True)
class ConvCode:
    generators: tuple
    constraint_length: int

    def __post_init__(self):
        gens = tuple(_octal(g) if isinstance(g, str) else int(g) for g in self.generators)
        if not gens:
            raise ConfigurationError("need at least one generator")
        if self.constraint_length < 2:
            raise ConfigurationError("constraint length must be >= 2")
        for g in gens:
            if g <= 0 or g >= 1 << self.constraint_length:
                raise ConfigurationError(
                    f"generator {g:o} does not fit constraint length {self.constraint_length}")
        object.__setattr__(self, "generators", gens)

    @classmethod
    def from_octal(cls, generators, constraint_length: int | None = None) -> "ConvCode":
        gens = [str(g) for g in generators]
        if constraint_length is None:
            constraint_length = max(_octal(g).bit_length() for g in gens)
        return cls(tuple(gens), constraint_length)

    @classmethod
    def default(cls, rate_denominator: int = 2) -> "ConvCode":
        if rate_denominator not in DEFAULT_GENERATORS:
            raise ConfigurationError("default codes exist for rate 1/2 and 1/3 only")
        return cls(DEFAULT_GENERATORS[rate_denominator], 8)

    @property
    def rate_denominator(self) -> int:
        return len(self.generators)

    @property
    def octal(self) -> list[str]:
        return [format(g, "o") for g in self.generators]

    @cached_property
    def _trellis(self):
        # state = previous K-1 inputs, newest in the MSB
        m = self.constraint_length - 1
        n_states = 1 << m
        states = np.arange(n_states)
        next_state = np.empty((n_states, 2), dtype=np.int64)
        outputs = np.empty((n_states, 2, self.rate_denominator), dtype=np.uint8)
        for b in (0, 1):
            reg = (b << m) | states
            next_state[:, b] = reg >> 1
            for j, g in enumerate(self.generators):
                outputs[:, b, j] = [bin(r & g).count("1") & 1 for r in reg]
        return next_state, outputs


def conv_encode(bits, code: ConvCode) -> np.ndarray:
    """Encode from the zero state and append ``K - 1`` zero flush bits."""
    bits = as_bits(bits) if len(bits) else np.zeros(0, dtype=np.uint8)
    next_state, outputs = code._trellis
    padded = np.concatenate([bits, np.zeros(code.constraint_length - 1, dtype=np.uint8)])
    out = np.empty((padded.size, code.rate_denominator), dtype=np.uint8)
    state = 0
    for i, b in enumerate(padded):
        out[i] = outputs[state, b]
        state = next_state[state, b]
    return out.reshape(-1)


def viterbi_decode(chips, code: ConvCode) -> np.ndarray:
    """Hard-decision maximum-likelihood decoding, Hamming metric, ending in state 0."""
    chips = np.asarray(chips, dtype=np.uint8)
    n = code.rate_denominator
    if chips.size % n:
        raise SignalRangeError("chip count is not a multiple of the code rate")
    steps = chips.size // n
    m = code.constraint_length - 1
    if steps < m:
        raise SignalRangeError("stream shorter than the flush tail")
    next_state, outputs = code._trellis
    n_states = 1 << m
    # predecessor table: each state has two predecessors p = ((s << 1) | x) & mask
    s = np.arange(n_states)
    preds = np.stack([((s << 1) | x) & (n_states - 1) for x in (0, 1)], axis=1)
    in_bit = s >> (m - 1)
    pred_out = outputs[preds, in_bit[:, None]]  # (states, 2, n)
    metric = np.full(n_states, np.inf)
    metric[0] = 0.0
    choice = np.empty((steps, n_states), dtype=np.uint8)
    rx = chips.reshape(steps, n)
    for t in range(steps):
        branch = (pred_out != rx[t]).sum(axis=2)
        cand = metric[preds] + branch
        pick = np.argmin(cand, axis=1)  # ties go to the lower predecessor
        choice[t] = pick
        metric = cand[s, pick]
    state = 0
    decoded = np.empty(steps, dtype=np.uint8)
    for t in range(steps - 1, -1, -1):
        decoded[t] = state >> (m - 1)
        state = preds[state, choice[t, state]]
    return decoded[: steps - m]


GRAY_QPSK = np.array([1 + 1j, -1 + 1j, 1 - 1j, -1 - 1j]) / math.sqrt(2)


def qpsk_map(bits) -> np.ndarray:
    """Gray QPSK with unit symbol energy; bit 0 rides the in-phase axis."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % 2:
        raise ConfigurationError("QPSK needs an even number of bits")
    pairs = bits.reshape(-1, 2)
    return GRAY_QPSK[pairs[:, 0] + 2 * pairs[:, 1]]


def qpsk_demap(symbols) -> np.ndarray:
    symbols = np.asarray(symbols)
    return np.stack([symbols.real < 0, symbols.imag < 0], axis=1).astype(np.uint8).reshape(-1)


def qpsk_noise_std(es_n0: float) -> float:
    """Per-component noise standard deviation for unit-energy symbols."""
    if not es_n0 > 0:
        raise DomainError("Es/N0 must be positive")
    return math.sqrt(1.0 / (2.0 * es_n0))


def qpsk_modem(bits, es_n0: float, rng, seed: int | None = None) -> BerEstimate:
    """Send ``bits`` over Gray QPSK in AWGN and count matched-filter bit errors.

    ``es_n0=math.inf`` runs the noiseless link.
    """
    bits = as_bits(bits)
    tx = qpsk_map(bits)
    if math.isinf(es_n0):
        rx = tx
    else:
        std = qpsk_noise_std(es_n0)
        rx = tx + std * (rng.standard_normal(tx.size) + 1j * rng.standard_normal(tx.size))
    errors = int((qpsk_demap(rx) != bits).sum())
    return BerEstimate(1, bits.size, errors, seed)


def qpsk_ber_theory(es_n0: float) -> float:
    return 0.5 * math.erfc(math.sqrt(es_n0 / 2))


def spread_qpsk_distance2(book, position: int = 0) -> float:
    """Squared distance between the QPSK waveforms of a codeword and its complement.

    Chips are paired into unit-energy Gray QPSK symbols.  Each differing chip
    moves one quadrature by ``2 / sqrt(2)``, contributing 2, so the total is
    ``2 N`` (odd N is padded with one shared chip).
    """
    w0 = book.word(position, 0)
    w1 = book.word(position, 1)
    if w0.size % 2:
        w0 = np.append(w0, 0)
        w1 = np.append(w1, 0)
    return float(np.sum(np.abs(qpsk_map(w0) - qpsk_map(w1)) ** 2))
