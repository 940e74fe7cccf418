from __future__ import annotations

import math

import numpy as np
import pytest
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey
from hypothesis import given, settings
from hypothesis import strategies as st

from papertex.errors import InputError, ParameterError
from papertex.fuzzyauth import codes, protocol
from papertex.fuzzyauth.protocol import CommitmentRecord


@pytest.fixture(scope="module")
def signing_key():
    return Ed25519PrivateKey.generate()


def test_register_verify_round_trip(signing_key, rng):
    fa = rng.integers(0, 2, 2048, dtype=np.uint8)
    record, key = protocol.register(fa, signing_key)
    assert np.array_equal(record.r ^ codes.ecc_encode(key), fa)
    result = protocol.verify(fa, record, signing_key.public_key())
    assert result.ok and np.array_equal(result.key, key)


def test_many_random_fingerprints_verify(signing_key, rng):
    pub = signing_key.public_key()
    for _ in range(100):
        fa = rng.integers(0, 2, 2048, dtype=np.uint8)
        record, _ = protocol.register(fa, signing_key)
        assert protocol.verify(fa, record, pub).ok


def test_fresh_key_per_registration(signing_key, rng):
    fa = rng.integers(0, 2, 2048, dtype=np.uint8)
    r1, k1 = protocol.register(fa, signing_key)
    r2, k2 = protocol.register(fa, signing_key)
    assert not np.array_equal(k1, k2) and not np.array_equal(r1.r, r2.r)


def test_noisy_fingerprint_recovers_key(signing_key, rng):
    fa = rng.integers(0, 2, 2048, dtype=np.uint8)
    record, key = protocol.register(fa, signing_key)
    fs = fa.copy()
    fs[rng.choice(2048, 410, replace=False)] ^= 1
    result = protocol.verify(fs, record, signing_key.public_key())
    assert result.ok and np.array_equal(result.key, key)


def test_unrelated_fingerprint_is_rejected(signing_key, rng):
    record, _ = protocol.register(rng.integers(0, 2, 2048, dtype=np.uint8), signing_key)
    for _ in range(20):
        result = protocol.verify(rng.integers(0, 2, 2048), record, signing_key.public_key())
        assert not result.ok and result.reason in ("decode-failure", "hash-mismatch")


def test_wrong_decode_is_caught_by_hash(signing_key, rng):
    fa = rng.integers(0, 2, 2048, dtype=np.uint8)
    record, key = protocol.register(fa, signing_key)
    other = rng.integers(0, 2, 140, dtype=np.uint8)
    # shift the committed codeword to another valid codeword: decoding succeeds, hash does not
    fs = fa ^ codes.ecc_encode(key) ^ codes.ecc_encode(other)
    result = protocol.verify(fs, record, signing_key.public_key())
    assert not result.ok and result.reason == "hash-mismatch"


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2047))
def test_tampered_record_fails_signature(bit):
    key = Ed25519PrivateKey.generate()
    fa = np.zeros(2048, dtype=np.uint8)
    record, _ = protocol.register(fa, key)
    record.r[bit] ^= 1
    assert protocol.verify(fa, record, key.public_key()).reason == "bad-signature"


def test_wrong_verifying_key(signing_key, rng):
    fa = rng.integers(0, 2, 2048, dtype=np.uint8)
    record, _ = protocol.register(fa, signing_key)
    other = Ed25519PrivateKey.generate().public_key()
    assert protocol.verify(fa, record, other).reason == "bad-signature"


def test_record_text_round_trip(signing_key, rng):
    fa = rng.integers(0, 2, 2048, dtype=np.uint8)
    record, _ = protocol.register(fa, signing_key)
    text = record.to_text()
    lines = text.splitlines()
    assert lines[0] == "PTCR1"
    assert lines[1].startswith("r=") and len(lines[1]) == 2 + 512
    assert lines[2].startswith("hash=sha256:") and len(lines[2].split(":")[1]) == 64
    assert lines[3].startswith("sig=ed25519:") and lines[4].startswith("signer=")
    assert record.signing_bytes() == ("\n".join(lines[:3]) + "\n").encode()
    back = CommitmentRecord.from_text(text)
    assert protocol.verify(fa, back, signing_key.public_key()).ok


@pytest.mark.parametrize(
    "text",
    ["", "PTCR2\n", "PTCR1\nr=00\n", "PTCR1\nr=" + "0" * 512 + "\nhash=sha256:00\nsig=ed25519:\n"],
)
def test_malformed_records(text):
    with pytest.raises(InputError):
        CommitmentRecord.from_text(text)


def test_key_digest_uses_packed_key():
    key = np.zeros(140, dtype=np.uint8)
    import hashlib

    assert protocol.key_digest(key) == hashlib.sha256(bytes(18)).digest()


def test_generate_key_length():
    assert protocol.generate_key().shape == (140,)


def guess_bound_oracle(z, w):
    ball = sum(math.comb(z, i) for i in range(w + 1))
    return z - math.log2(ball)


def test_guess_bound_values():
    g = protocol.guess_bound(807, 218)
    assert 132 <= g <= 134
    assert g == pytest.approx(guess_bound_oracle(807, 218), abs=1e-9)
    assert protocol.guess_bound(807, 218, exact=True) == pytest.approx(g, abs=1e-9)
    assert protocol.guess_bound(100, 0) == 100.0
    assert protocol.guess_bound(100, 100, exact=True) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ParameterError):
        protocol.guess_bound(10, 11)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 300), st.data())
def test_guess_bound_non_increasing(z, data):
    w = data.draw(st.integers(0, z - 1))
    assert protocol.guess_bound(z, w + 1) <= protocol.guess_bound(z, w) + 1e-9
