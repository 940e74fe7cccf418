"""Kernel dispatch: compiled extension when available, numpy otherwise.

Set ``PAPERTEX_KERNELS=python`` to force the numpy path.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("PAPERTEX_KERNELS", "").lower() != "python":
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack an (n, L) 0/1 array into (n, ceil(L/64)) uint64 words (zero padded)."""
    bits = np.atleast_2d(np.asarray(bits, dtype=np.uint8))
    n, length = bits.shape
    words = -(-length // 64)
    padded = np.zeros((n, words * 64), dtype=np.uint8)
    padded[:, :length] = bits
    return np.ascontiguousarray(np.packbits(padded, axis=1).view(np.uint64))


def cross_counts(bits_a, mask_a, bits_b, mask_b):
    """Masked disagreement and joint-mask popcounts for every (a, b) pair.

    Inputs are packed words from :func:`pack_bits`. Returns two int64 arrays of
    shape (len(a), len(b)).
    """
    return _impl.cross_counts(
        np.ascontiguousarray(bits_a, dtype=np.uint64),
        np.ascontiguousarray(mask_a, dtype=np.uint64),
        np.ascontiguousarray(bits_b, dtype=np.uint64),
        np.ascontiguousarray(mask_b, dtype=np.uint64),
    )


def hadamard_decode(blocks):
    """Maximum-correlation decode of (n, 64) bit blocks of the [64, 7, 32] code.

    Returns (messages, corrected) where messages are 7-bit ints (bit 6 is the
    complement flag, bits 0-5 the Hadamard row) and corrected is the distance to
    the chosen codeword.
    """
    return _impl.hadamard_decode(np.ascontiguousarray(blocks, dtype=np.uint8))
