from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from papertex import _kernels_py, kernels
from papertex.fuzzyauth.codes import hadamard_encode

try:
    from papertex import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

BACKENDS = [_kernels_py] + ([_kernels_c] if _kernels_c is not None else [])


def brute_counts(bits_a, mask_a, bits_b, mask_b):
    diff = np.zeros((len(bits_a), len(bits_b)), dtype=np.int64)
    joint = np.zeros_like(diff)
    for i in range(len(bits_a)):
        for j in range(len(bits_b)):
            m = mask_a[i] & mask_b[j]
            joint[i, j] = int(m.sum())
            diff[i, j] = int(((bits_a[i] ^ bits_b[j]) & m).sum())
    return diff, joint


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
@pytest.mark.parametrize("length", [64, 100, 2048])
def test_cross_counts_matches_brute_force(impl, length, rng):
    ba, ma = rng.integers(0, 2, (5, length), dtype=np.uint8), rng.integers(0, 2, (5, length), dtype=np.uint8)
    bb, mb = rng.integers(0, 2, (7, length), dtype=np.uint8), rng.integers(0, 2, (7, length), dtype=np.uint8)
    diff, joint = impl.cross_counts(
        kernels.pack_bits(ba), kernels.pack_bits(ma), kernels.pack_bits(bb), kernels.pack_bits(mb)
    )
    bdiff, bjoint = brute_counts(ba, ma, bb, mb)
    assert np.array_equal(diff, bdiff) and np.array_equal(joint, bjoint)


def test_pack_bits_zero_pads(rng):
    bits = rng.integers(0, 2, (3, 70), dtype=np.uint8)
    packed = kernels.pack_bits(bits)
    assert packed.shape == (3, 2) and packed.dtype == np.uint64
    assert int(np.bitwise_count(packed).sum()) == int(bits.sum())


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_hadamard_decode_clean_blocks(impl):
    blocks = np.array([hadamard_encode(m) for m in range(128)])
    msgs, corrected = impl.hadamard_decode(blocks)
    assert list(msgs) == list(range(128))
    assert not corrected.any()


def brute_nearest(block: np.ndarray) -> tuple[int, int]:
    dists = [int((hadamard_encode(m) != block).sum()) for m in range(128)]
    best = min(dists)
    return dists.index(best), best


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 127), st.sets(st.integers(0, 63), max_size=40), st.randoms(use_true_random=False))
def test_backends_agree_with_nearest_codeword(msg, flips, _r):
    block = hadamard_encode(msg)
    block[list(flips)] ^= 1
    nearest_msg, nearest_dist = brute_nearest(block)
    for impl in BACKENDS:
        got, corrected = impl.hadamard_decode(block[None, :])
        assert int(corrected[0]) == nearest_dist
        assert int((hadamard_encode(int(got[0])) != block).sum()) == nearest_dist
        if nearest_dist < 16:
            assert int(got[0]) == nearest_msg


def test_backends_pick_same_codeword_on_ties(rng):
    blocks = rng.integers(0, 2, (500, 64), dtype=np.uint8)
    results = [impl.hadamard_decode(blocks) for impl in BACKENDS]
    for msgs, corr in results[1:]:
        assert np.array_equal(msgs, results[0][0]) and np.array_equal(corr, results[0][1])


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")
