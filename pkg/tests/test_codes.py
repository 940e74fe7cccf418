from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from papertex.errors import DecodeFailure, ParameterError
from papertex.fuzzyauth import codes


def clmul_mod(a: int, b: int) -> int:
    """Carry-less product reduced by x^7 + x^3 + 1, bit by bit."""
    r = 0
    for i in range(7):
        if (b >> i) & 1:
            r ^= a << i
    for bit in range(13, 6, -1):
        if (r >> bit) & 1:
            r ^= 0b10001001 << (bit - 7)
    return r


def test_field_multiplication_matches_carryless_oracle():
    for a in range(128):
        for b in range(128):
            assert codes.gf_mul(a, b) == clmul_mod(a, b)


def test_primitive_element_has_full_order():
    x, seen = 1, set()
    for _ in range(127):
        seen.add(x)
        x = clmul_mod(x, 2)
    assert x == 1 and len(seen) == 127


def test_division_inverts_multiplication():
    for a in range(128):
        for b in range(1, 128):
            assert codes.gf_div(codes.gf_mul(a, b), b) == a


def oracle_eval(word, x):
    acc = 0
    for c in word:
        acc = clmul_mod(acc, x) ^ c
    return acc


def test_generator_has_the_twelve_consecutive_roots():
    g = list(codes.rs_generator())
    assert len(g) == 13 and g[0] == 1
    alpha = 1
    for i in range(1, 14):
        alpha = clmul_mod(alpha, 2)
        assert (oracle_eval(g, alpha) == 0) == (i <= 12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 127), min_size=20, max_size=20))
def test_rs_codewords_are_systematic_and_vanish_on_roots(msg):
    word = codes.rs_encode(msg)
    assert word[:20] == msg and len(word) == 32
    alpha = 1
    for _ in range(12):
        alpha = clmul_mod(alpha, 2)
        assert oracle_eval(word, alpha) == 0
    assert codes.rs_decode(word) == msg


def test_rs_corrects_up_to_six_errors(rng):
    for errors in range(7):
        for _ in range(40):
            msg = [int(v) for v in rng.integers(0, 128, 20)]
            word = codes.rs_encode(msg)
            for pos in rng.choice(32, errors, replace=False):
                word[pos] ^= int(rng.integers(1, 128))
            assert codes.rs_decode(word) == msg


def test_rs_beyond_capacity_fails_or_miscorrects(rng):
    outcomes = {"failure": 0, "wrong": 0, "right": 0}
    for _ in range(100):
        msg = [int(v) for v in rng.integers(0, 128, 20)]
        word = codes.rs_encode(msg)
        for pos in rng.choice(32, 13, replace=False):
            word[pos] ^= int(rng.integers(1, 128))
        try:
            outcomes["right" if codes.rs_decode(word) == msg else "wrong"] += 1
        except DecodeFailure:
            outcomes["failure"] += 1
    assert outcomes["right"] == 0 and outcomes["failure"] > 0


def test_rs_rejects_bad_symbols():
    with pytest.raises(ParameterError):
        codes.rs_encode([0] * 19)
    with pytest.raises(ParameterError):
        codes.rs_encode([128] + [0] * 19)


def test_hadamard_code_geometry():
    table = np.array([codes.hadamard_encode(m) for m in range(128)])
    dists = (table[:, None, :] != table[None, :, :]).sum(axis=2)
    off = dists[~np.eye(128, dtype=bool)]
    assert off.min() == 32 and set(np.unique(off)) == {32, 64}
    assert np.array_equal(table[64], 1 - table[0])


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 127), st.sets(st.integers(0, 63), max_size=15))
def test_hadamard_corrects_fifteen_flips(msg, flips):
    block = codes.hadamard_encode(msg)
    block[list(flips)] ^= 1
    assert codes.hadamard_decode(block) == (msg, len(flips))


def test_hadamard_flip_to_other_codeword_decodes_wrongly():
    a, b = codes.hadamard_encode(5), codes.hadamard_encode(9)
    assert (a != b).sum() == 32
    assert codes.hadamard_decode(b)[0] == 9


def test_ecc_layout_for_zero_key():
    cw = codes.ecc_encode(np.zeros(140, dtype=np.uint8))
    assert cw.shape == (2048,)
    blocks = cw.reshape(32, 64)
    zero_symbols = codes.rs_encode([0] * 20)
    assert zero_symbols == [0] * 32
    assert all(np.array_equal(b, codes.hadamard_encode(0)) for b in blocks)


def test_ecc_symbol_packing_is_msb_first():
    key = np.zeros(140, dtype=np.uint8)
    key[0] = 1  # top bit of the first symbol
    assert codes.key_to_symbols(key)[0] == 64
    assert np.array_equal(codes.symbols_to_key(codes.key_to_symbols(key)), key)


def test_ecc_round_trip_and_distance(rng):
    for _ in range(200):
        k1 = rng.integers(0, 2, 140, dtype=np.uint8)
        k2 = k1.copy()
        k2[rng.integers(140)] ^= 1
        c1, c2 = codes.ecc_encode(k1), codes.ecc_encode(k2)
        assert np.array_equal(codes.ecc_decode(c1), k1)
        assert (c1 != c2).sum() >= 32


def flip_random(words, rate, rng):
    out = words.copy()
    n = int(round(rate * words.shape[1]))
    for row in out:
        row[rng.choice(words.shape[1], n, replace=False)] ^= 1
    return out


def recovery_rate(rate, trials, rng):
    keys = rng.integers(0, 2, (trials, 140), dtype=np.uint8)
    words = np.array([codes.ecc_encode(k) for k in keys])
    decoded, _ = codes.ecc_decode_batch(flip_random(words, rate, rng))
    return np.mean([d is not None and np.array_equal(d, k) for d, k in zip(decoded, keys)])


def test_recovery_degrades_monotonically():
    rng = np.random.default_rng(2024)
    rates = [recovery_rate(r, 200, rng) for r in (0.0, 0.1, 0.2, 0.25, 0.3, 0.35, 0.45)]
    assert rates[0] == rates[1] == rates[2] == 1.0
    assert all(a >= b for a, b in zip(rates, rates[1:]))
    assert rates[-1] == 0.0


def test_ecc_decode_rejects_wrong_length():
    with pytest.raises(ParameterError):
        codes.ecc_decode(np.zeros(100, dtype=np.uint8))
