"""Spread codebooks, chip encoding and majority-vote decoding.

Each bit position ``k`` owns a chip word ``w_k`` of length N for bit 0; bit 1
is sent as the bitwise complement of ``w_k``.  Words come from one of three
sources:

``repetition``
    ``w_k`` is all zeros (plain (N, 1) repetition code).
``seeded``
    chips drawn from a xorshift64 stream.  The state is initialised as
    ``splitmix64(seed)`` (replaced by 1 if that is zero) and each chip is the
    top bit of the state after one update::

        x ^= x << 13;  x ^= x >> 7;  x ^= x << 17   (all mod 2**64)

``lfsr``
    chips from a Fibonacci shift register ``a[n] = XOR_{t in taps} a[n - t]``
    whose first ``degree`` outputs are the bits of the initial state, least
    significant bit first.

In every case chips are consumed position-major: word 0 takes the first N
chips of the stream, word 1 the next N, and so on.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .cpm import as_bits
from .errors import ConfigurationError, DomainError, SignalRangeError

CODEBOOK_FORMAT = "spreadcpm.codebook"
CODEBOOK_VERSION = 1

_MASK64 = (1 << 64) - 1

#: One maximum-length tap set per register degree (Fibonacci form).
PRIMITIVE_TAPS = {
    3: (3, 2),
    4: (4, 3),
    5: (5, 3),
    6: (6, 5),
    7: (7, 6),
    8: (8, 6, 5, 4),
    9: (9, 5),
    10: (10, 7),
    11: (11, 9),
    12: (12, 6, 4, 1),
    13: (13, 4, 3, 1),
    14: (14, 5, 3, 1),
    15: (15, 14),
    16: (16, 15, 13, 4),
}


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def xorshift_chips(seed: int, count: int) -> np.ndarray:
    """``count`` chips from the seeded xorshift64 stream described above."""
    if not 0 <= seed <= _MASK64:
        raise ConfigurationError("seed must be an unsigned 64-bit integer")
    x = splitmix64(seed) or 1
    out = np.empty(count, dtype=np.uint8)
    for i in range(count):
        x ^= (x << 13) & _MASK64
        x ^= x >> 7
        x ^= (x << 17) & _MASK64
        out[i] = x >> 63
    return out


def lfsr_chips(taps, state: int, count: int) -> np.ndarray:
    """Output of the Fibonacci register ``a[n] = XOR a[n - t]`` for t in taps."""
    taps = tuple(int(t) for t in taps)
    degree = max(taps)
    if not 0 < state < (1 << degree):
        raise ConfigurationError("LFSR state must be nonzero and fit the register")
    seq = [(state >> i) & 1 for i in range(degree)]
    while len(seq) < count:
        n = len(seq)
        bit = 0
        for t in taps:
            bit ^= seq[n - t]
        seq.append(bit)
    return np.array(seq[:count], dtype=np.uint8)


def lfsr_period(taps) -> int:
    """Period of the register sequence started from state 1."""
    taps = tuple(int(t) for t in taps)
    degree = max(taps)
    reg = [1] + [0] * (degree - 1)
    start = tuple(reg)
    for period in range(1, 1 << degree):
        bit = 0
        for t in taps:
            bit ^= reg[degree - t]
        reg = reg[1:] + [bit]
        if tuple(reg) == start:
            return period
    return -1


def validate_taps(taps) -> tuple:
    taps = tuple(sorted({int(t) for t in taps}, reverse=True))
    if not taps or min(taps) < 1:
        raise ConfigurationError("LFSR taps must be positive integers")
    degree = taps[0]
    if not 3 <= degree <= 16:
        raise ConfigurationError("LFSR degree must be between 3 and 16")
    if lfsr_period(taps) != (1 << degree) - 1:
        raise ConfigurationError(f"taps {taps} do not give a maximum-length sequence")
    return taps


@dataclass(frozen=True)
class Codebook:
    """Per-position chip words for bit 0 (bit 1 uses the complement)."""

    rate_n: int
    words: np.ndarray = field(repr=False)
    provenance: dict = field(default_factory=lambda: {"kind": "repetition"})

    def __post_init__(self):
        words = np.array(self.words, dtype=np.uint8)
        if words.ndim != 2 or words.shape[1] != self.rate_n:
            raise ConfigurationError("words must have shape (num_positions, rate_n)")
        words.setflags(write=False)
        object.__setattr__(self, "words", words)

    @property
    def num_positions(self) -> int:
        return self.words.shape[0]

    def word(self, position: int, bit: int) -> np.ndarray:
        w = self.words[position]
        return w ^ np.uint8(1) if bit else w.copy()

    def to_dict(self) -> dict:
        doc = {
            "format": CODEBOOK_FORMAT,
            "version": CODEBOOK_VERSION,
            "rate_n": self.rate_n,
            "num_positions": self.num_positions,
            "provenance": dict(self.provenance),
        }
        if self.provenance["kind"] == "explicit":
            doc["words"] = ["".join(map(str, w)) for w in self.words]
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "Codebook":
        if doc.get("format") != CODEBOOK_FORMAT:
            raise ConfigurationError("not a codebook document")
        if doc.get("version") != CODEBOOK_VERSION:
            raise ConfigurationError(f"unsupported codebook version {doc.get('version')}")
        prov = doc["provenance"]
        if prov["kind"] == "explicit":
            words = np.array([[int(c) for c in w] for w in doc["words"]], dtype=np.uint8)
            return cls(int(doc["rate_n"]), words, {"kind": "explicit"})
        return build_codebook(int(doc["rate_n"]), int(doc["num_positions"]), prov)

    @classmethod
    def loads(cls, text: str) -> "Codebook":
        return cls.from_dict(json.loads(text))


def build_codebook(rate_n: int, num_positions: int, provenance="repetition") -> Codebook:
    """Build a codebook.

    ``provenance`` is ``"repetition"``, or a dict ``{"kind": "seeded", "seed": s}``
    or ``{"kind": "lfsr", "taps": (...), "state": s}``.  For ``lfsr`` the taps
    default to the table entry for ``degree`` when only a degree is given.
    """
    if rate_n < 1 or num_positions < 1:
        raise ConfigurationError("rate_n and num_positions must be >= 1")
    prov = {"kind": provenance} if isinstance(provenance, str) else dict(provenance)
    kind = prov.get("kind")
    count = rate_n * num_positions
    if kind == "repetition":
        chips = np.zeros(count, dtype=np.uint8)
    elif kind == "seeded":
        seed = int(prov["seed"])
        prov = {"kind": "seeded", "seed": seed}
        chips = xorshift_chips(seed, count)
    elif kind == "lfsr":
        taps = prov.get("taps") or PRIMITIVE_TAPS.get(int(prov.get("degree", 0)))
        if taps is None:
            raise ConfigurationError("lfsr provenance needs taps or a degree in 3..16")
        taps = validate_taps(taps)
        state = int(prov.get("state", 1))
        prov = {"kind": "lfsr", "taps": list(taps), "state": state}
        chips = lfsr_chips(taps, state, count)
    else:
        raise ConfigurationError(f"unknown codebook provenance {kind!r}")
    return Codebook(rate_n, chips.reshape(num_positions, rate_n), prov)


def encode(bits, book: Codebook) -> np.ndarray:
    """Concatenate the chip word of each bit; returns ``N * len(bits)`` chips."""
    bits = as_bits(bits)
    if bits.size > book.num_positions:
        raise SignalRangeError(
            f"{bits.size} bits exceed the codebook's {book.num_positions} positions"
        )
    return (book.words[: bits.size] ^ bits[:, None]).reshape(-1)


def majority_decode(chips, book: Codebook, rng=None) -> np.ndarray:
    """Hard-decision decoding: pick the word agreeing with > N/2 received chips.

    Even N is rejected unless ``rng`` is supplied, in which case exact ties are
    settled by a fair coin drawn from it.
    """
    chips = as_bits(chips, "chips")
    n = book.rate_n
    if chips.size % n:
        raise ConfigurationError("chip count must be a multiple of rate_n")
    if n % 2 == 0 and rng is None:
        raise ConfigurationError("majority decoding with even N needs a tie-break rng")
    m = chips.size // n
    if m > book.num_positions:
        raise SignalRangeError("more chip words than codebook positions")
    flips = (chips.reshape(m, n) ^ book.words[:m]).sum(axis=1)
    out = (2 * flips > n).astype(np.uint8)
    ties = 2 * flips == n
    if ties.any():
        out[ties] = rng.integers(0, 2, size=int(ties.sum()), dtype=np.uint8)
    return out


def _log_binom_pmf(n: int, k: np.ndarray, p: float) -> np.ndarray:
    logc = math.lgamma(n + 1) - np.array([math.lgamma(x + 1) + math.lgamma(n - x + 1) for x in k])
    return logc + k * math.log(p) + (n - k) * math.log1p(-p)


def majority_error_prob(p: float, n: int, method: str = "exact") -> float:
    """Probability that majority voting over ``n`` chips decodes the wrong bit.

    ``exact`` sums the binomial tail (half of the tie term is added for even
    ``n``, matching a fair-coin tie break). ``asymptotic`` is the large-n
    geometric-series approximation
    ``(4p(1-p))**((n+1)/2) / (sqrt(2 pi) ((1-2p) sqrt(n) + 1/sqrt(n)))``.
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError("chip error probability must lie in [0, 1]")
    if n < 1:
        raise DomainError("n must be >= 1")
    if method == "asymptotic":
        if n % 2 == 0:
            raise DomainError("asymptotic form needs odd n")
        if p >= 0.5:
            raise DomainError("asymptotic form needs p < 1/2")
        return (4 * p * (1 - p)) ** ((n + 1) / 2) / (
            math.sqrt(2 * math.pi) * ((1 - 2 * p) * math.sqrt(n) + 1 / math.sqrt(n))
        )
    if method != "exact":
        raise ConfigurationError(f"unknown method {method!r}")
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0 if n % 2 else 0.5
    k = np.arange(n // 2 + 1, n + 1)
    total = math.fsum(np.exp(_log_binom_pmf(n, k, p)))
    if n % 2 == 0:
        total += 0.5 * math.exp(_log_binom_pmf(n, np.array([n // 2]), p)[0])
    return min(1.0, max(0.0, total))
