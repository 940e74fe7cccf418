"""Concatenated Hadamard [64, 7, 32] + shortened Reed-Solomon (32, 20) code over GF(2^7).

Symbol order: index ``i`` of a Reed-Solomon word is the coefficient of
``x^(n-1-i)``, so the 20 message symbols come first (systematic encoding).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .. import kernels
from ..errors import DecodeFailure, ParameterError

FIELD_BITS = 7
FIELD_SIZE = 1 << FIELD_BITS
PRIMITIVE_POLY = 0b10001001  # x^7 + x^3 + 1
RS_N = 32
RS_K = 20
RS_T = (RS_N - RS_K) // 2
KEY_BITS = RS_K * FIELD_BITS
BLOCK_BITS = 64
CODEWORD_BITS = RS_N * BLOCK_BITS


def _build_tables() -> tuple[list[int], list[int]]:
    exp = [0] * (2 * (FIELD_SIZE - 1))
    log = [0] * FIELD_SIZE
    x = 1
    for i in range(FIELD_SIZE - 1):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & FIELD_SIZE:
            x ^= PRIMITIVE_POLY
    for i in range(FIELD_SIZE - 1, len(exp)):
        exp[i] = exp[i - (FIELD_SIZE - 1)]
    return exp, log


EXP, LOG = _build_tables()
_ORDER = FIELD_SIZE - 1


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return EXP[LOG[a] + LOG[b]]


def gf_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("division by zero in GF(2^7)")
    if a == 0:
        return 0
    return EXP[(LOG[a] - LOG[b]) % _ORDER]


def gf_pow(a: int, e: int) -> int:
    if a == 0:
        return 0 if e else 1
    return EXP[(LOG[a] * e) % _ORDER]


def poly_eval(coeffs: list[int], x: int) -> int:
    """Horner evaluation; ``coeffs`` highest degree first."""
    y = 0
    for c in coeffs:
        y = gf_mul(y, x) ^ c
    return y


def poly_mul(p: list[int], q: list[int]) -> list[int]:
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] ^= gf_mul(a, b)
    return out


@lru_cache(maxsize=None)
def rs_generator() -> tuple[int, ...]:
    """g(x) = prod_{i=1..12} (x - alpha^i), highest degree first."""
    g = [1]
    for i in range(1, RS_N - RS_K + 1):
        g = poly_mul(g, [1, EXP[i]])
    return tuple(g)


def _check_symbols(symbols, count: int) -> list[int]:
    out = [int(s) for s in symbols]
    if len(out) != count:
        raise ParameterError(f"expected {count} symbols, got {len(out)}")
    if any(not 0 <= s < FIELD_SIZE for s in out):
        raise ParameterError("symbols must lie in [0, 127]")
    return out


def rs_encode(message) -> list[int]:
    """Systematic encoding of 20 symbols into 32."""
    msg = _check_symbols(message, RS_K)
    g = rs_generator()
    rem = msg + [0] * (RS_N - RS_K)
    for i in range(RS_K):
        coef = rem[i]
        if coef:
            for j in range(1, len(g)):
                rem[i + j] ^= gf_mul(g[j], coef)
    return msg + rem[RS_K:]


def rs_syndromes(word: list[int]) -> list[int]:
    return [poly_eval(word, EXP[j]) for j in range(1, RS_N - RS_K + 1)]


def _berlekamp_massey(synd: list[int]) -> list[int]:
    """Error locator Lambda(x), lowest degree first."""
    lam = [1] + [0] * len(synd)
    prev = [1] + [0] * len(synd)
    length, shift, b = 0, 1, 1
    for n, s in enumerate(synd):
        d = s
        for i in range(1, length + 1):
            d ^= gf_mul(lam[i], synd[n - i])
        if d == 0:
            shift += 1
            continue
        coef = gf_div(d, b)
        update = lam[:]
        for i in range(len(lam) - shift):
            lam[i + shift] ^= gf_mul(coef, prev[i])
        if 2 * length <= n:
            length, prev, b, shift = n + 1 - length, update, d, 1
        else:
            shift += 1
    return lam[: length + 1]


def rs_decode(received) -> list[int]:
    """Correct up to 6 symbol errors; raises :class:`DecodeFailure` otherwise detectable."""
    word = _check_symbols(received, RS_N)
    synd = rs_syndromes(word)
    if not any(synd):
        return word[:RS_K]
    lam = _berlekamp_massey(synd)
    degree = len(lam) - 1
    if degree > RS_T:
        raise DecodeFailure("too many symbol errors")
    # Chien search over the 32 live positions of the shortened code
    positions = []
    for i in range(RS_N):
        e = RS_N - 1 - i
        x_inv = EXP[(-e) % _ORDER]
        if poly_eval(lam[::-1], x_inv) == 0:
            positions.append(i)
    if len(positions) != degree:
        raise DecodeFailure("error locator roots outside the code")
    # Forney with first consecutive root alpha^1: Y = Omega(X^-1) / Lambda'(X^-1)
    omega = [0] * (2 * RS_T)
    for i, s in enumerate(synd):
        for j, c in enumerate(lam):
            if i + j < 2 * RS_T:
                omega[i + j] ^= gf_mul(s, c)
    deriv = [lam[j] if j % 2 == 1 else 0 for j in range(1, len(lam))]
    fixed = word[:]
    for i in positions:
        e = RS_N - 1 - i
        x_inv = EXP[(-e) % _ORDER]
        num = poly_eval(omega[::-1], x_inv)
        den = poly_eval(deriv[::-1], x_inv)
        if den == 0:
            raise DecodeFailure("degenerate error locator")
        fixed[i] ^= gf_div(num, den)
    if any(rs_syndromes(fixed)):
        raise DecodeFailure("residual syndrome after correction")
    return fixed[:RS_K]


def hadamard_encode(message: int) -> np.ndarray:
    """64-bit block for a 7-bit message: bit j = parity(row & j) xor complement."""
    if not 0 <= int(message) < FIELD_SIZE:
        raise ParameterError("Hadamard message must be a 7-bit value")
    return _HADAMARD_TABLE[int(message)].copy()


def _hadamard_table() -> np.ndarray:
    j = np.arange(BLOCK_BITS)
    table = np.empty((FIELD_SIZE, BLOCK_BITS), dtype=np.uint8)
    for m in range(FIELD_SIZE):
        row, comp = m & 63, m >> 6
        table[m] = (np.bitwise_count(row & j) & 1) ^ comp
    return table


_HADAMARD_TABLE = _hadamard_table()


def hadamard_decode(block) -> tuple[int, int]:
    """(message, corrected_errors) by maximum correlation."""
    arr = np.asarray(block, dtype=np.uint8).reshape(1, BLOCK_BITS)
    msgs, corrected = kernels.hadamard_decode(arr)
    return int(msgs[0]), int(corrected[0])


def key_to_symbols(key_bits) -> list[int]:
    bits = np.asarray(key_bits, dtype=np.uint8).ravel()
    if bits.size != KEY_BITS:
        raise ParameterError(f"key must have {KEY_BITS} bits")
    weights = 1 << np.arange(FIELD_BITS - 1, -1, -1)
    return [int(v) for v in bits.reshape(RS_K, FIELD_BITS) @ weights]


def symbols_to_key(symbols) -> np.ndarray:
    sym = np.asarray(symbols, dtype=np.int64).reshape(-1, 1)
    shifts = np.arange(FIELD_BITS - 1, -1, -1)
    return ((sym >> shifts) & 1).astype(np.uint8).ravel()


def ecc_encode(key_bits) -> np.ndarray:
    """140-bit key -> 2048-bit codeword; block i occupies bits [64i, 64i + 63]."""
    symbols = rs_encode(key_to_symbols(key_bits))
    return _HADAMARD_TABLE[symbols].ravel()


def ecc_decode_batch(noisy: np.ndarray) -> tuple[list[np.ndarray | None], np.ndarray]:
    """Decode many (n, 2048) words; returns keys (``None`` on failure) and corrected bit counts."""
    noisy = np.asarray(noisy, dtype=np.uint8)
    if noisy.ndim != 2 or noisy.shape[1] != CODEWORD_BITS:
        raise ParameterError(f"codewords must have {CODEWORD_BITS} bits")
    msgs, corrected = kernels.hadamard_decode(noisy.reshape(-1, BLOCK_BITS))
    msgs = msgs.reshape(-1, RS_N)
    keys: list[np.ndarray | None] = []
    for row in msgs:
        try:
            keys.append(symbols_to_key(rs_decode(row.tolist())))
        except DecodeFailure:
            keys.append(None)
    return keys, corrected.reshape(-1, RS_N).sum(axis=1)


def ecc_decode(noisy) -> np.ndarray:
    """2048-bit word -> 140-bit key; raises :class:`DecodeFailure` when RS decoding fails."""
    arr = np.asarray(noisy, dtype=np.uint8).ravel()
    if arr.size != CODEWORD_BITS:
        raise ParameterError(f"codeword must have {CODEWORD_BITS} bits")
    msgs, _ = kernels.hadamard_decode(arr.reshape(RS_N, BLOCK_BITS))
    return symbols_to_key(rs_decode(msgs.tolist()))
