"""Pure numpy versions of the compiled kernels (fallback and reference)."""

from __future__ import annotations

import numpy as np
from scipy.linalg import hadamard

_H64 = hadamard(64).astype(np.int64)


def cross_counts(bits_a, mask_a, bits_b, mask_b):
    bits_a = np.asarray(bits_a, dtype=np.uint64)
    mask_a = np.asarray(mask_a, dtype=np.uint64)
    bits_b = np.asarray(bits_b, dtype=np.uint64)
    mask_b = np.asarray(mask_b, dtype=np.uint64)
    if bits_a.shape[1] != bits_b.shape[1]:
        raise ValueError("word counts differ")
    diff = np.empty((bits_a.shape[0], bits_b.shape[0]), dtype=np.int64)
    joint = np.empty_like(diff)
    for i in range(bits_a.shape[0]):
        m = mask_a[i] & mask_b
        joint[i] = np.bitwise_count(m).sum(axis=1)
        diff[i] = np.bitwise_count((bits_a[i] ^ bits_b) & m).sum(axis=1)
    return diff, joint


def hadamard_decode(blocks):
    blocks = np.asarray(blocks, dtype=np.uint8)
    if blocks.ndim != 2 or blocks.shape[1] != 64:
        raise ValueError("blocks must have 64 columns")
    w = (1 - 2 * blocks.astype(np.int64)) @ _H64
    mag = np.abs(w)
    best = np.argmax(mag, axis=1)
    rows = np.arange(len(blocks))
    messages = best | np.where(w[rows, best] < 0, 64, 0)
    corrected = (64 - mag[rows, best]) // 2
    return messages.astype(np.int64), corrected.astype(np.int64)
