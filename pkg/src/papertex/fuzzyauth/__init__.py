"""Key binding to paper fingerprints with a concatenated error-correcting code."""

from __future__ import annotations

from .codes import (
    CODEWORD_BITS,
    KEY_BITS,
    ecc_decode,
    ecc_decode_batch,
    ecc_encode,
    hadamard_decode,
    hadamard_encode,
    rs_decode,
    rs_encode,
)
from .protocol import (
    AuthResult,
    CommitmentRecord,
    generate_key,
    guess_bound,
    key_digest,
    register,
    verify,
)

__all__ = [
    "AuthResult",
    "CODEWORD_BITS",
    "CommitmentRecord",
    "KEY_BITS",
    "ecc_decode",
    "ecc_decode_batch",
    "ecc_encode",
    "generate_key",
    "guess_bound",
    "hadamard_decode",
    "hadamard_encode",
    "key_digest",
    "register",
    "rs_decode",
    "rs_encode",
    "verify",
]
