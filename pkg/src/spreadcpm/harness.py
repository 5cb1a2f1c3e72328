"""Monte Carlo BER experiments.

A run is fully determined by its :class:`ExperimentSpec`.  Trials are grouped
into fixed-size batches; every random draw of trial ``t`` at grid point ``p``
comes from ``rng.stream(master_seed, p, t, purpose)`` (tie-breaks use the
first trial of the batch), so the thread count only changes speed.  The grid
point index runs over (rate_n, Es/N0) and not over strategies, which
therefore see identical messages, phases and noise (common random numbers).
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache

import numpy as np
import yaml

from . import rng as streams
from .analytics import db_to_linear, esn0_to_sigma, symbol_distance
from .channel import (ChannelConfig, NbiConfig, add_awgn, add_nbi_qpsk, apply_phase,
                      noise_equivalent_power)
from .classify import block_noncoherent_bits, coherent_bits
from .cpm import CpmConfig, ShapingPulse, modulate_baseband
from .errors import ConfigurationError
from .fec import BerEstimate, ConvCode, conv_encode, qpsk_map, qpsk_noise_std, viterbi_decode
from .spreading import Codebook, build_codebook

STRATEGIES = (
    "joint-coherent",
    "joint-noncoherent",
    "noncoherent-block",
    "separate-then-majority",
    "uncoded",
    "conv-separate",
    "concatenated",
    "qpsk-joint",
)

NBI_INTERPRETATION = (
    "interferer power equals the white-noise power (density 2*sigma2) collected "
    "over the main lobe of the uncoded signal (-10 dB band)"
)


@dataclass(frozen=True)
class NbiSpec:
    """Interferer settings; ``power`` and ``freq_offset`` may be resolved per run.

    ``power="noise-equivalent"`` ties the power to the white-noise level of each
    grid point; ``freq_offset="random"`` draws one frequency inside the main
    lobe from the master seed, shared by all grid points.
    """

    symbol_rate: float = 5e-4
    power: float | str = "noise-equivalent"
    freq_offset: float | str = "random"


@dataclass(frozen=True)
class ExperimentSpec:
    modulation: CpmConfig = field(default_factory=CpmConfig)
    rate_n: tuple = (10,)
    codebook: dict = field(default_factory=lambda: {"kind": "seeded", "seed": 1})
    es_n0_db: tuple = (0.0,)
    demod: tuple = ("noncoherent-block",)
    block_k: int = 5
    chip_block: int = 1
    separate_detection: str = "noncoherent"
    phase: str = "uniform"
    nbi: NbiSpec | None = None
    message_bits: int = 200
    trials: int = 100_000
    master_seed: int = 0
    batch: int = 64
    conv: tuple = ("247", "371")
    outer: tuple = ("247", "371")

    def __post_init__(self):
        for name in ("rate_n", "es_n0_db", "demod", "conv", "outer"):
            value = getattr(self, name)
            if isinstance(value, (str, int, float)):
                value = (value,)
            object.__setattr__(self, name, tuple(value))
        if isinstance(self.codebook, str):
            object.__setattr__(self, "codebook", {"kind": self.codebook})
        object.__setattr__(self, "rate_n", tuple(int(n) for n in self.rate_n))
        object.__setattr__(self, "es_n0_db", tuple(float(x) for x in self.es_n0_db))
        object.__setattr__(self, "conv", tuple(str(g) for g in self.conv))
        object.__setattr__(self, "outer", tuple(str(g) for g in self.outer))

    def validate(self) -> None:
        """Reject infeasible settings before any trial runs."""
        if self.trials < 1 or self.message_bits < 1 or self.batch < 1:
            raise ConfigurationError("trials, message_bits and batch must be >= 1")
        if not self.rate_n or not self.es_n0_db or not self.demod:
            raise ConfigurationError("sweep lists must be nonempty")
        if min(self.rate_n) < 1:
            raise ConfigurationError("rate_n must be >= 1")
        bad = [d for d in self.demod if d not in STRATEGIES]
        if bad:
            raise ConfigurationError(f"unknown demodulation strategies {bad}")
        for name in ("block_k", "chip_block"):
            k = getattr(self, name)
            if k < 1 or k % 2 == 0 or k > 10:
                raise ConfigurationError(f"{name} must be odd and at most 9")
        if self.separate_detection not in ("noncoherent", "coherent"):
            raise ConfigurationError("separate_detection must be noncoherent or coherent")
        if self.phase not in ("known", "uniform"):
            raise ConfigurationError("phase must be known or uniform")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigurationError("master_seed must be an unsigned 64-bit integer")
        ConvCode.from_octal(self.conv)
        ConvCode.from_octal(self.outer)

    def to_dict(self) -> dict:
        cfg = self.modulation
        return {
            "modulation": cfg.describe(),
            "codebook": dict(self.codebook),
            "sweep": {"rate_n": list(self.rate_n), "es_n0_db": list(self.es_n0_db)},
            "demod": {
                "strategies": list(self.demod),
                "block_k": self.block_k,
                "chip_block": self.chip_block,
                "separate_detection": self.separate_detection,
            },
            "channel": {
                "phase": self.phase,
                "nbi": None if self.nbi is None else asdict(self.nbi),
            },
            "conv": list(self.conv),
            "outer": list(self.outer),
            "message_bits": self.message_bits,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "batch": self.batch,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentSpec":
        doc = dict(doc or {})
        kw = {}
        if "modulation" in doc:
            kw["modulation"] = cpm_config_from_dict(doc["modulation"])
        if "codebook" in doc:
            kw["codebook"] = dict(doc["codebook"])
        sweep = doc.get("sweep", {})
        for key in ("rate_n", "es_n0_db"):
            if key in sweep:
                kw[key] = sweep[key]
        demod = doc.get("demod", {})
        if "strategies" in demod:
            kw["demod"] = demod["strategies"]
        for key in ("block_k", "chip_block", "separate_detection"):
            if key in demod:
                kw[key] = demod[key]
        channel = doc.get("channel", {})
        if "phase" in channel:
            kw["phase"] = channel["phase"]
        if channel.get("nbi"):
            kw["nbi"] = NbiSpec(**channel["nbi"])
        for key in ("conv", "outer", "message_bits", "trials", "master_seed", "batch"):
            if key in doc:
                kw[key] = doc[key]
        unknown = set(doc) - {"modulation", "codebook", "sweep", "demod", "channel", "conv",
                              "outer", "message_bits", "trials", "master_seed", "batch", "psd"}
        if unknown:
            raise ConfigurationError(f"unknown config sections {sorted(unknown)}")
        return cls(**kw)

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentSpec":
        return cls.from_dict(yaml.safe_load(text))


def cpm_config_from_dict(doc: dict) -> CpmConfig:
    doc = dict(doc)
    bt = doc.pop("bt", None)
    pulse = ShapingPulse(doc.pop("pulse", "gfsk"), 0.3 if bt is None else float(bt))
    return CpmConfig(h=float(doc.pop("h", 0.8)), pulse=pulse,
                     samples_per_symbol=int(doc.pop("samples_per_symbol", 5)))


@lru_cache(maxsize=64)
def _codebook(rate_n: int, positions: int, provenance_key: tuple) -> Codebook:
    return build_codebook(rate_n, positions, dict(provenance_key))


def _book(spec: ExperimentSpec, rate_n: int, positions: int) -> Codebook:
    key = tuple(sorted((k, tuple(v) if isinstance(v, list) else v)
                       for k, v in spec.codebook.items()))
    return _codebook(rate_n, positions, key)


def _chip_book(n_chips: int) -> Codebook:
    return _codebook(1, n_chips, (("kind", "repetition"),))


@lru_cache(maxsize=16)
def _main_lobe(cfg: CpmConfig) -> tuple[float, float]:
    from .psd import estimate_psd, main_lobe

    bits = np.random.default_rng(12345).integers(0, 2, 4000)
    return main_lobe(estimate_psd(modulate_baseband(bits, cfg), 16))


@dataclass(frozen=True)
class GridPoint:
    index: int
    rate_n: int
    es_n0_db: float
    sigma2: float
    nbi: NbiConfig | None


@dataclass
class ResultRow:
    strategy: str
    rate_n: int
    es_n0_db: float
    sigma2: float
    estimate: BerEstimate
    wall_time: float = 0.0

    def as_dict(self) -> dict:
        e = self.estimate
        return {
            "strategy": self.strategy,
            "rate_n": self.rate_n,
            "es_n0_db": self.es_n0_db,
            "sigma2": self.sigma2,
            "trials": e.trials,
            "bits": e.bits,
            "bit_errors": e.bit_errors,
            "ber": e.ber,
            "standard_error": e.standard_error,
            "seed": e.seed,
            "wall_time": self.wall_time,
        }


def resolve_nbi(spec: ExperimentSpec, sigma2: float) -> NbiConfig | None:
    if spec.nbi is None:
        return None
    lo, hi = _main_lobe(spec.modulation)
    freq = spec.nbi.freq_offset
    if freq == "random":
        freq = float(streams.experiment_stream(spec.master_seed, "nbi-freq").uniform(lo, hi))
    power = spec.nbi.power
    if power == "noise-equivalent":
        power = noise_equivalent_power(sigma2, hi - lo)
    return NbiConfig(spec.nbi.symbol_rate, float(freq), float(power))


def grid(spec: ExperimentSpec) -> list[GridPoint]:
    c = symbol_distance(spec.modulation)
    points = []
    for n in spec.rate_n:
        for db in spec.es_n0_db:
            sigma2 = esn0_to_sigma(db_to_linear(db), c) ** 2
            points.append(GridPoint(len(points), n, db, sigma2, resolve_nbi(spec, sigma2)))
    return points


def _transmit(chips: np.ndarray, spec: ExperimentSpec, point: GridPoint, trial: int):
    """Modulate, rotate, interfere and add noise for one trial."""
    seed = spec.master_seed
    channel = ChannelConfig(point.sigma2, spec.phase, 0.0, point.nbi)
    sig = modulate_baseband(chips, spec.modulation)
    sig, theta = apply_phase(sig, channel, streams.stream(seed, point.index, trial, "phase"))
    sig = add_nbi_qpsk(sig, channel, streams.stream(seed, point.index, trial, "nbi"))
    sig = add_awgn(sig, channel, streams.stream(seed, point.index, trial, "noise"))
    return sig.samples, theta


def _chip_decisions(rx, chips, thetas, spec: ExperimentSpec, tie) -> np.ndarray:
    cfg = spec.modulation
    book = _chip_book(chips.shape[-1])
    if spec.separate_detection == "coherent":
        return coherent_bits(rx, book, cfg, chips, thetas, tie)
    return block_noncoherent_bits(rx, book, cfg, chips.shape[-1], spec.chip_block, tie)


def _majority(decisions: np.ndarray, book: Codebook, n_bits: int, tie) -> np.ndarray:
    n = book.rate_n
    flips = (decisions.reshape(-1, n_bits, n) ^ book.words[None, :n_bits]).sum(axis=-1)
    out = (2 * flips > n).astype(np.uint8)
    ties = 2 * flips == n
    if ties.any():
        out[ties] = tie.integers(0, 2, size=int(ties.sum()), dtype=np.uint8)
    return out


def _run_batch(spec: ExperimentSpec, strategy: str, point: GridPoint, trials: range) -> int:
    seed, m = spec.master_seed, spec.message_bits
    msgs = np.stack([
        streams.stream(seed, point.index, t, "message").integers(0, 2, m, dtype=np.uint8)
        for t in trials
    ])
    tie = streams.stream(seed, point.index, trials.start, "tie")
    cfg = spec.modulation

    if strategy == "qpsk-joint":
        return _qpsk_joint_errors(spec, point, msgs, trials)

    if strategy in ("uncoded", "conv-separate"):
        if strategy == "uncoded":
            coded = msgs
        else:
            code = ConvCode.from_octal(spec.conv)
            coded = np.stack([conv_encode(b, code) for b in msgs])
        tx = [_transmit(c, spec, point, t) for c, t in zip(coded, trials)]
        rx = np.stack([s for s, _ in tx])
        thetas = np.array([th for _, th in tx])
        hard = _chip_decisions(rx, coded, thetas, spec, tie)
        if strategy == "conv-separate":
            hard = np.stack([viterbi_decode(h, code) for h in hard])
        return int((hard != msgs).sum())

    if strategy == "concatenated":
        outer = ConvCode.from_octal(spec.outer)
        inner_bits = np.stack([conv_encode(b, outer) for b in msgs])
    else:
        inner_bits = msgs
    n_inner = inner_bits.shape[1]
    book = _book(spec, point.rate_n, n_inner)
    chips = (book.words[None, :, :] ^ inner_bits[:, :, None]).reshape(len(trials), -1)
    tx = [_transmit(c, spec, point, t) for c, t in zip(chips, trials)]
    rx = np.stack([s for s, _ in tx])
    thetas = np.array([th for _, th in tx])

    if strategy == "joint-coherent":
        hat = coherent_bits(rx, book, cfg, chips, thetas, tie)
    elif strategy == "joint-noncoherent":
        hat = block_noncoherent_bits(rx, book, cfg, n_inner, 1, tie)
    elif strategy in ("noncoherent-block", "concatenated"):
        hat = block_noncoherent_bits(rx, book, cfg, n_inner, spec.block_k, tie)
    elif strategy == "separate-then-majority":
        hat = _majority(_chip_decisions(rx, chips, thetas, spec, tie), book, n_inner, tie)
    else:
        raise ConfigurationError(f"unknown strategy {strategy!r}")
    if strategy == "concatenated":
        hat = np.stack([viterbi_decode(h, outer) for h in hat])
    return int((hat != msgs).sum())


def _qpsk_joint_errors(spec: ExperimentSpec, point: GridPoint, msgs, trials) -> int:
    """Spread QPSK with coherent codeword correlation; Es/N0 is per QPSK symbol."""
    book = _book(spec, point.rate_n, spec.message_bits)
    words0 = book.words[: spec.message_bits]
    pad = point.rate_n % 2
    w0 = np.pad(words0, ((0, 0), (0, pad)))
    s0 = qpsk_map(w0.reshape(-1)).reshape(len(w0), -1)
    s1 = qpsk_map((w0 ^ np.pad(np.ones_like(words0), ((0, 0), (0, pad)))).reshape(-1))
    s1 = s1.reshape(len(w0), -1)
    std = qpsk_noise_std(db_to_linear(point.es_n0_db))
    errors = 0
    for msg, t in zip(msgs, trials):
        tx = np.where(msg[:, None] == 1, s1, s0)
        g = streams.stream(spec.master_seed, point.index, t, "noise")
        rx = tx + std * (g.standard_normal(tx.shape) + 1j * g.standard_normal(tx.shape))
        stat = np.real(np.sum(rx * (s1 - s0).conj(), axis=1))
        errors += int(((stat > 0).astype(np.uint8) != msg).sum())
    return errors


def run_ber_experiment(spec: ExperimentSpec, threads: int = 1,
                       progress=None) -> list[ResultRow]:
    """Run every (strategy, rate_n, Es/N0) combination of ``spec``.

    Returns one :class:`ResultRow` per combination, ordered strategy-major.
    """
    spec.validate()
    if threads < 1:
        raise ConfigurationError("threads must be >= 1")
    points = grid(spec)
    batches = [range(s, min(s + spec.batch, spec.trials)) for s in range(0, spec.trials, spec.batch)]
    rows = []
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for strategy in spec.demod:
            for point in points:
                start = time.perf_counter()
                counts = pool.map(lambda b: _run_batch(spec, strategy, point, b), batches)
                errors = sum(counts)
                est = BerEstimate(spec.trials, spec.trials * spec.message_bits, errors,
                                  spec.master_seed)
                rows.append(ResultRow(strategy, point.rate_n, point.es_n0_db, point.sigma2, est,
                                      time.perf_counter() - start))
                if progress is not None:
                    progress(rows[-1])
    return rows


def with_overrides(spec: ExperimentSpec, **kw) -> ExperimentSpec:
    return replace(spec, **{k: v for k, v in kw.items() if v is not None})


def conversion_log(spec: ExperimentSpec) -> list[dict]:
    """Es/N0 (dB) to noise-level conversions, as recorded in run metadata."""
    c = symbol_distance(spec.modulation)
    out = []
    for db in spec.es_n0_db:
        lin = db_to_linear(db)
        sigma = esn0_to_sigma(lin, c)
        out.append({"es_n0_db": db, "es_n0": lin, "symbol_distance": c,
                    "sigma": sigma, "sigma2": sigma * sigma})
    return out
