"""Closed-form error probabilities, asymptotic bounds and distance scans.

Noise power ``sigma**2`` follows the real white-noise convention: a real
correlator ``<f, G>`` has variance ``sigma**2 * ||f||**2``.  At complex
baseband this means each quadrature of a correlator output carries that
variance (see :mod:`spreadcpm.channel`).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import ive

from .cpm import CpmConfig, _cumulative_table
from .errors import ConfigurationError, DomainError
from .spreading import majority_error_prob

MAX_SCAN_N = 14
SERIES_RTOL = 1e-15
SERIES_MAX_TERMS = 500


def _clamp_probability(p: float) -> float:
    assert -1e-12 <= p <= 1 + 1e-12, f"probability {p} far outside [0, 1]"
    return min(1.0, max(0.0, p))


def bessel_i(k: int, x: float, scaled: bool = False) -> float:
    """Modified Bessel function of the first kind ``I_k(x)`` for integer k >= 0.

    Sums the power series ``sum (x/2)^(2n+k) / (n! (n+k)!)`` term by term with
    periodic rescaling, so ``scaled=True`` returns ``exp(-|x|) I_k(x)`` without
    overflow for large arguments.
    """
    k = int(k)
    if k < 0:
        raise DomainError("order must be >= 0")
    if x == 0:
        return 1.0 if k == 0 else 0.0
    ax = abs(x)
    log_lead = k * math.log(ax / 2) - math.lgamma(k + 1) - (ax if scaled else 0.0)
    q = ax * ax / 4
    term, total, log_scale = 1.0, 1.0, 0.0
    n = 0
    while True:
        term *= q / ((n + 1) * (n + k + 1))
        total += term
        n += 1
        if term > 1e200:
            term /= 1e200
            total /= 1e200
            log_scale += math.log(1e200)
        if n > q and term < total * 1e-17:
            break
    value = math.exp(log_lead + log_scale + math.log(total))
    return -value if (x < 0 and k % 2) else value


def p_coherent(distance: float, sigma: float) -> float:
    """Correlation-classifier error ``1/2 - erf(d / (2 sqrt(2) sigma)) / 2``."""
    if distance < 0 or not sigma > 0:
        raise DomainError("need distance >= 0 and sigma > 0")
    return _clamp_probability(0.5 * math.erfc(distance / (2 * math.sqrt(2) * sigma)))


def p_noncoherent(distance: float, correlation_mag: float, sigma: float) -> float:
    """Envelope-classifier error for two equal-norm waveforms.

    ``distance`` is ``||f1 - f2||`` and ``correlation_mag`` is ``|R|``, the
    magnitude of the normalised inner product.  The expression is exact when
    ``Re R = 0`` (then ``distance**2`` equals the summed energies); for
    ``R = 0`` it reduces to ``exp(-distance**2 / (8 sigma**2)) / 2``.
    """
    if distance < 0 or not sigma > 0:
        raise DomainError("need distance >= 0 and sigma > 0")
    if not 0.0 <= correlation_mag <= 1.0:
        raise DomainError("|R| must lie in [0, 1]")
    if distance == 0 or correlation_mag == 1.0:
        return 0.5
    if correlation_mag == 0.0:
        return _clamp_probability(0.5 * math.exp(-distance**2 / (8 * sigma**2)))
    s = distance / (2 * math.sqrt(2) * sigma)
    root = math.sqrt(1 - correlation_mag**2)
    u = s * math.sqrt(correlation_mag**2 / (1 + root))
    v = s * math.sqrt(1 + root)
    x, ratio = u * v, u / v
    # exp(-(u^2+v^2)/2) I_k(uv) = exp(-(v-u)^2/2) * [exp(-uv) I_k(uv)]
    lead = math.exp(-((v - u) ** 2) / 2)
    # u/v < 1, so terms decay at least geometrically; all orders in one call
    orders = np.arange(SERIES_MAX_TERMS)
    terms = ratio ** orders * ive(orders, x)
    running = np.cumsum(terms)
    done = np.nonzero(terms[1:] < SERIES_RTOL * running[1:])[0]
    stop = done[0] + 2 if done.size else SERIES_MAX_TERMS
    return _clamp_probability(lead * (math.fsum(terms[:stop]) - 0.5 * float(terms[0])))


class ErfBounds(NamedTuple):
    value: float
    linear_bound: float
    tail_approx: float | None


def erf_bounds_check(x: float) -> ErfBounds:
    """``erf(x)`` with its linear upper bound and large-x tail approximation.

    The tail form ``1 - exp(-x^2) / (sqrt(pi) x)`` is undefined at 0 and is
    returned as ``None`` there.
    """
    if x < 0:
        raise DomainError("x must be >= 0")
    value = math.erf(x)
    linear = 2 * x / math.sqrt(math.pi)
    assert value <= linear + 1e-15, "erf exceeded its linear bound"
    tail = None if x == 0 else 1 - math.exp(-x * x) / (math.sqrt(math.pi) * x)
    return ErfBounds(value, linear, tail)


def bounds_joint(n: int, sigma2: float, e0: float = 0.0) -> tuple[float, float]:
    """Large-N joint (codeword-level) error rates ``(p_nc, p_c)``.

    ``e0`` is the oscillating residual of the codeword inner product; with
    ``e0 = 0`` the noncoherent value is exactly ``exp(-n / (4 sigma2)) / 2``.
    Being asymptotic, the coherent form may exceed 1 for tiny n and is clipped.
    """
    if n < 1 or not sigma2 > 0:
        raise DomainError("need n >= 1 and sigma2 > 0")
    decay = math.exp(-n / (4 * sigma2))
    p_nc = 0.5 * bessel_i(0, math.sqrt(2) * e0 / (8 * sigma2)) * decay
    p_c = math.sqrt(sigma2) / math.sqrt(math.pi * n) * decay
    return min(p_nc, 1.0), min(p_c, 1.0)


def bounds_separate(n: int) -> tuple[float, float]:
    """Large-N lower bounds ``(p_nc, p_c)`` for chip decisions plus majority vote.

    Valid when the single-symbol distance does not exceed the noise level.
    """
    if n < 1 or n % 2 == 0:
        raise DomainError("bounds_separate needs odd n >= 1")
    e = math.exp(-1 / 8)
    p_nc = (e * (2 - e)) ** ((n + 1) / 2) / (math.sqrt(2 * math.pi * n) * (1 - 0.5 * e))
    p_c = (1 - 1 / (2 * math.pi)) ** ((n + 1) / 2) / math.sqrt(n)
    return p_nc, p_c


@dataclass(frozen=True)
class BoundSet:
    n: int
    sigma2: float
    p_joint_nc: float
    p_joint_c: float
    p_sep_nc_lower: float
    p_sep_c_lower: float


def bound_set(n: int, sigma2: float, e0: float = 0.0) -> BoundSet:
    p_nc, p_c = bounds_joint(n, sigma2, e0)
    s_nc, s_c = bounds_separate(n)
    return BoundSet(n, sigma2, p_nc, p_c, s_nc, s_c)


def joint_separate_crossover(sigma2: float, n_max: int = 25) -> int | None:
    """Smallest odd n from which both joint bounds stay below both separate bounds."""
    crossover = None
    for n in range(n_max if n_max % 2 else n_max - 1, 0, -2):
        b = bound_set(n, sigma2)
        if b.p_joint_nc < b.p_sep_nc_lower and b.p_joint_c < b.p_sep_c_lower:
            crossover = n
        else:
            break
    return crossover


def separate_path_ber(p_chip: float, n: int) -> float:
    """Predicted BER of chip-level decisions followed by majority voting."""
    return majority_error_prob(p_chip, n, "exact")


def esn0_to_sigma(es_n0: float, c: float) -> float:
    """Noise level for a linear Es/N0, with ``Es/N0 = c**2 / (4 sigma**2)``."""
    if not es_n0 > 0 or not c > 0:
        raise DomainError("Es/N0 and c must be positive")
    return c / (2 * math.sqrt(es_n0))


def sigma_to_esn0(sigma: float, c: float) -> float:
    if not sigma > 0 or not c > 0:
        raise DomainError("sigma and c must be positive")
    return c * c / (4 * sigma * sigma)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class DistanceReport:
    rate_n: int
    mode: str
    mean_distance: float
    min_distance: float
    max_distance: float
    e0: float
    mean_correlation: float
    table: np.ndarray | None = field(default=None, repr=False)

    @property
    def limit(self) -> float:
        return math.sqrt(2 * self.rate_n)


def _phase_difference_rows(antipodal: np.ndarray, cfg: CpmConfig) -> np.ndarray:
    """Phase difference (cycles) between each sequence and its complement.

    Shared history cancels, leaving ``h * sum_k a_k q(t - k - 1/2)``.
    """
    n = antipodal.shape[1]
    nodes, values = _cumulative_table(cfg.pulse, cfg.samples_per_symbol)
    t = np.arange(n * cfg.samples_per_symbol) * cfg.dt
    qmat = np.interp(t[None, :] - np.arange(n)[:, None] - 0.5, nodes, values,
                     left=0.0, right=1.0)
    return cfg.h * antipodal @ qmat


def distance_scan(cfg: CpmConfig, n_range, mode: str = "all_sequences",
                  keep_table: bool = False) -> list[DistanceReport]:
    """Distances ``||s_B - s_B'||`` over the window (0, n) for each n.

    ``repetition`` compares n ones against n zeros after a common history;
    ``all_sequences`` averages over all 2**n sequences B against their
    complements.  ``e0`` is the mean of ``2n - distance**2``.
    """
    if mode not in ("repetition", "all_sequences"):
        raise ConfigurationError(f"unknown scan mode {mode!r}")
    reports = []
    for n in n_range:
        n = int(n)
        if n < 1:
            raise ConfigurationError("n must be >= 1")
        if mode == "all_sequences":
            if n > MAX_SCAN_N:
                raise ConfigurationError(f"exhaustive scan limited to n <= {MAX_SCAN_N}")
            rows = np.array(list(itertools.product((0, 1), repeat=n)), dtype=float)
        else:
            rows = np.ones((1, n))
        diff = _phase_difference_rows(2 * rows - 1, cfg)
        d2 = 2.0 * (1.0 - np.cos(2 * np.pi * diff)).sum(axis=1) * cfg.dt
        corr = np.abs(np.exp(-2j * np.pi * diff).sum(axis=1)) * cfg.dt / n
        dist = np.sqrt(d2)
        reports.append(DistanceReport(
            rate_n=n,
            mode=mode,
            mean_distance=math.fsum(dist) / dist.size,
            min_distance=float(dist.min()),
            max_distance=float(dist.max()),
            e0=math.fsum(2 * n - d2) / d2.size,
            mean_correlation=math.fsum(corr) / corr.size,
            table=dist if keep_table else None,
        ))
    return reports


def symbol_distance(cfg: CpmConfig) -> float:
    """Single-symbol distance ``C = ||s_{0} - s_{1}||`` over (0, 1)."""
    return distance_scan(cfg, [1], "repetition")[0].mean_distance
