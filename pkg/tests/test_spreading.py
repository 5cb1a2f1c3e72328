import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spreadcpm.errors import ConfigurationError, DomainError, SignalRangeError
from spreadcpm.spreading import (PRIMITIVE_TAPS, Codebook, build_codebook, encode, lfsr_chips,
                                 lfsr_period, majority_decode, majority_error_prob,
                                 validate_taps, xorshift_chips)

# a[n] = a[n-4] ^ a[n-1] from state 0b0001, iterated by hand
LFSR_4_1_TRACE = [1, 0, 0, 0, 1, 1, 1, 1, 0, 1, 0, 1, 1, 0, 0]

provenances = st.sampled_from([
    "repetition",
    {"kind": "seeded", "seed": 3},
    {"kind": "seeded", "seed": 2**64 - 1},
    {"kind": "lfsr", "degree": 7, "state": 5},
    {"kind": "lfsr", "taps": [4, 1], "state": 9},
])


def _enumerate_majority(p, n):
    total = 0.0
    for pattern in itertools.product((0, 1), repeat=n):
        k = sum(pattern)
        if 2 * k > n:
            total += p**k * (1 - p) ** (n - k)
    return total


def test_repetition_words():
    book = build_codebook(5, 4)
    for k in range(4):
        assert book.word(k, 0).tolist() == [0] * 5
        assert book.word(k, 1).tolist() == [1] * 5


def test_seeded_determinism():
    a = build_codebook(8, 4, {"kind": "seeded", "seed": 11})
    b = build_codebook(8, 4, {"kind": "seeded", "seed": 11})
    c = build_codebook(8, 4, {"kind": "seeded", "seed": 12})
    assert np.array_equal(a.words, b.words)
    assert not np.array_equal(a.words, c.words)


def test_lfsr_hand_trace():
    book = build_codebook(15, 1, {"kind": "lfsr", "taps": [4, 1], "state": 1})
    assert book.words[0].tolist() == LFSR_4_1_TRACE
    assert lfsr_chips((4, 1), 1, 30).tolist() == LFSR_4_1_TRACE * 2


@pytest.mark.parametrize("degree", sorted(PRIMITIVE_TAPS))
def test_table_taps_are_maximal(degree):
    assert lfsr_period(PRIMITIVE_TAPS[degree]) == 2**degree - 1


def test_non_primitive_taps_rejected():
    with pytest.raises(ConfigurationError):
        validate_taps((4, 2))
    with pytest.raises(ConfigurationError):
        build_codebook(4, 2, {"kind": "lfsr", "taps": [5, 1], "state": 1})


def test_xorshift_balance():
    chips = xorshift_chips(2024, 20000)
    assert abs(chips.mean() - 0.5) < 0.02


@given(provenances, st.integers(1, 12), st.integers(1, 30))
@settings(max_examples=50, deadline=None)
def test_codebook_invariants(prov, n, positions):
    book = build_codebook(n, positions, prov)
    assert book.words.shape == (positions, n)
    for k in range(positions):
        assert np.array_equal(book.word(k, 1), 1 - book.word(k, 0))


@given(provenances, st.integers(1, 9))
@settings(max_examples=30, deadline=None)
def test_codebook_serialization_round_trip(prov, n):
    book = build_codebook(n, 7, prov)
    text = book.dumps()
    again = Codebook.loads(text)
    assert np.array_equal(again.words, book.words)
    if book.provenance["kind"] != "explicit":
        assert "words" not in text


def test_explicit_codebook_round_trip():
    book = Codebook(3, [[0, 1, 1], [1, 0, 0]], {"kind": "explicit"})
    assert np.array_equal(Codebook.loads(book.dumps()).words, book.words)


def test_codebook_version_checked():
    doc = build_codebook(3, 2).to_dict()
    doc["version"] = 99
    with pytest.raises(ConfigurationError):
        Codebook.from_dict(doc)


def test_encode_repetition():
    assert encode([1, 0, 1], build_codebook(3, 3)).tolist() == [1, 1, 1, 0, 0, 0, 1, 1, 1]


def test_encode_too_long():
    with pytest.raises(SignalRangeError):
        encode([1, 0, 1], build_codebook(3, 2))


@given(provenances, st.lists(st.integers(0, 1), min_size=1, max_size=20))
@settings(max_examples=50, deadline=None)
def test_encode_complement_and_round_trip(prov, bits):
    book = build_codebook(5, 20, prov)
    chips = encode(bits, book)
    assert np.array_equal(1 - chips, encode([1 - b for b in bits], book))
    assert majority_decode(chips, book).tolist() == bits


def test_majority_two_of_three():
    assert majority_decode([1, 1, 0], build_codebook(3, 1)).tolist() == [1]


def test_majority_two_flips_of_five():
    book = build_codebook(5, 1, {"kind": "seeded", "seed": 5})
    rx = book.word(0, 0).copy()
    rx[[0, 3]] ^= 1
    assert majority_decode(rx, book).tolist() == [0]


def test_majority_even_needs_rng():
    book = build_codebook(4, 1)
    with pytest.raises(ConfigurationError):
        majority_decode([1, 1, 0, 0], book)
    picks = {int(majority_decode([1, 1, 0, 0], book, np.random.default_rng(s))[0])
             for s in range(20)}
    assert picks == {0, 1}


def test_majority_length_check():
    with pytest.raises(ConfigurationError):
        majority_decode([1, 1], build_codebook(3, 1))


def test_exact_degenerate_values():
    for n in (1, 3, 7, 25):
        assert majority_error_prob(0.0, n) == 0.0
        assert majority_error_prob(0.5, n) == pytest.approx(0.5, abs=1e-15)


def test_exact_p01_n3():
    assert majority_error_prob(0.1, 3) == pytest.approx(0.028, abs=1e-15)


@pytest.mark.parametrize("n", [1, 3, 5, 7, 9, 11])
@pytest.mark.parametrize("p", [0.05, 0.3, 0.45, 0.7])
def test_exact_matches_enumeration(n, p):
    assert abs(majority_error_prob(p, n) - _enumerate_majority(p, n)) <= 1e-12


def test_exact_even_n_tie_half():
    p, n = 0.3, 4
    full = _enumerate_majority(p, n)
    tie = 6 * p**2 * (1 - p) ** 2
    assert majority_error_prob(p, n) == pytest.approx(full + tie / 2, abs=1e-15)


def test_large_n_finite():
    v = majority_error_prob(0.3, 9999)
    assert 0 <= v < 1e-100 or v == 0.0


def test_domain_errors():
    with pytest.raises(DomainError):
        majority_error_prob(1.2, 3)
    with pytest.raises(DomainError):
        majority_error_prob(0.6, 3, "asymptotic")
    with pytest.raises(DomainError):
        majority_error_prob(0.3, 4, "asymptotic")


@given(st.floats(0, 1), st.sampled_from([1, 3, 5, 9, 15]))
def test_complement_relabel_symmetry(p, n):
    # flipping the roles of 0 and 1 maps error probability p to 1-p on the other bit
    assert majority_error_prob(p, n) + majority_error_prob(1 - p, n) == pytest.approx(1.0, abs=1e-12)


def test_monotonicity_grid():
    ps = np.linspace(0, 0.5, 26)
    for n in (1, 3, 5, 11, 25):
        vals = [majority_error_prob(p, n) for p in ps]
        assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))
    for p in (0.05, 0.2, 0.35, 0.49):
        vals = [majority_error_prob(p, n) for n in range(1, 52, 2)]
        assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))


def test_monte_carlo_agreement():
    rng = np.random.default_rng(17)
    n, p, trials = 7, 0.3, 100_000
    errors = (rng.random((trials, n)) < p).sum(axis=1) * 2 > n
    exact = majority_error_prob(p, n)
    se = np.sqrt(exact * (1 - exact) / trials)
    assert abs(errors.mean() - exact) <= 3 * se


def test_asymptotic_ratio_at_n51():
    ratio = majority_error_prob(0.3, 51) / majority_error_prob(0.3, 51, "asymptotic")
    assert abs(ratio - 1) <= 0.02


def test_asymptotic_ratio_tends_to_one():
    gaps = [abs(majority_error_prob(0.3, n) / majority_error_prob(0.3, n, "asymptotic") - 1)
            for n in (11, 51, 201, 1001, 5001)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
