"""Fuzzy commitment: bind a random 140-bit key to a raw fingerprint and check it offline."""

from __future__ import annotations

import hashlib
import math
import secrets
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey

from ..errors import DecodeFailure, InputError, ParameterError
from ..texture import FINGERPRINT_BITS, Fingerprint, bits_to_hex, hex_to_bits
from .codes import KEY_BITS, ecc_decode, ecc_encode

PTCR_MAGIC = "PTCR1"
HASH_ALGORITHMS = {"sha256": 32, "sha512": 64, "sha3-256": 32}
SIGNATURE_ALGORITHMS = ("ed25519",)


def _raw_bits(fp) -> np.ndarray:
    bits = fp.bits if isinstance(fp, Fingerprint) else np.asarray(fp, dtype=np.uint8)
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size != FINGERPRINT_BITS:
        raise InputError(f"fingerprint must have {FINGERPRINT_BITS} bits")
    return bits


def key_digest(key_bits, alg: str = "sha256") -> bytes:
    """Hash of the key, packed MSB-first into 18 bytes (4 zero pad bits)."""
    if alg not in HASH_ALGORITHMS:
        raise ParameterError(f"unsupported hash algorithm {alg!r}")
    packed = np.packbits(np.asarray(key_bits, dtype=np.uint8).ravel()).tobytes()
    return hashlib.new(alg.replace("-", "_"), packed).digest()


def signer_id(public_key: Ed25519PublicKey) -> str:
    raw = public_key.public_bytes(serialization.Encoding.Raw, serialization.PublicFormat.Raw)
    return hashlib.sha256(raw).hexdigest()[:16]


@dataclass
class CommitmentRecord:
    r: np.ndarray
    h: bytes
    signature: bytes = b""
    signer: str = ""
    hash_alg: str = "sha256"
    sig_alg: str = "ed25519"

    def __post_init__(self) -> None:
        self.r = _raw_bits(self.r)
        if self.hash_alg not in HASH_ALGORITHMS:
            raise InputError(f"unsupported hash algorithm {self.hash_alg!r}")
        if len(self.h) != HASH_ALGORITHMS[self.hash_alg]:
            raise InputError("digest length does not match the hash algorithm")
        if self.sig_alg not in SIGNATURE_ALGORITHMS:
            raise InputError(f"unsupported signature algorithm {self.sig_alg!r}")

    def signing_bytes(self) -> bytes:
        return f"{PTCR_MAGIC}\nr={bits_to_hex(self.r)}\nhash={self.hash_alg}:{self.h.hex()}\n".encode()

    def to_text(self) -> str:
        return (
            self.signing_bytes().decode()
            + f"sig={self.sig_alg}:{self.signature.hex()}\nsigner={self.signer}\n"
        )

    @classmethod
    def from_text(cls, text: str) -> "CommitmentRecord":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != PTCR_MAGIC:
            raise InputError("not a PTCR1 record")
        fields: dict[str, str] = {}
        for ln in lines[1:]:
            key, sep, value = ln.partition("=")
            if not sep:
                raise InputError(f"malformed record line {ln!r}")
            fields[key.strip()] = value.strip()
        try:
            hash_alg, _, h_hex = fields["hash"].partition(":")
            sig_alg, _, s_hex = fields["sig"].partition(":")
            return cls(
                r=hex_to_bits(fields["r"], FINGERPRINT_BITS),
                h=bytes.fromhex(h_hex),
                signature=bytes.fromhex(s_hex),
                signer=fields.get("signer", ""),
                hash_alg=hash_alg,
                sig_alg=sig_alg,
            )
        except KeyError as exc:
            raise InputError(f"record is missing field {exc.args[0]!r}") from None
        except ValueError as exc:
            raise InputError(f"malformed record: {exc}") from None


@dataclass
class AuthResult:
    ok: bool
    reason: str = ""  # bad-signature | decode-failure | hash-mismatch
    key: np.ndarray | None = None


def generate_key() -> np.ndarray:
    """140 bits from the operating system CSPRNG."""
    raw = secrets.token_bytes((KEY_BITS + 7) // 8)
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[:KEY_BITS]


def register(
    fa,
    signing_key: Ed25519PrivateKey,
    key=None,
    hash_alg: str = "sha256",
) -> tuple[CommitmentRecord, np.ndarray]:
    """Commit a fresh key to the raw bits of ``fa``; returns the signed record and the key.

    ``key`` may be supplied for testing; production callers leave it ``None``.
    """
    bits = _raw_bits(fa)
    k = generate_key() if key is None else np.asarray(key, dtype=np.uint8).ravel()
    if k.size != KEY_BITS:
        raise ParameterError(f"key must have {KEY_BITS} bits")
    record = CommitmentRecord(
        r=bits ^ ecc_encode(k),
        h=key_digest(k, hash_alg),
        signer=signer_id(signing_key.public_key()),
        hash_alg=hash_alg,
    )
    record.signature = signing_key.sign(record.signing_bytes())
    return record, k


def verify(fs, record: CommitmentRecord, verifying_key: Ed25519PublicKey) -> AuthResult:
    """Check the signature, decode ``fs xor r`` and compare the key hash."""
    try:
        verifying_key.verify(record.signature, record.signing_bytes())
    except InvalidSignature:
        return AuthResult(False, "bad-signature")
    try:
        k = ecc_decode(_raw_bits(fs) ^ record.r)
    except DecodeFailure:
        return AuthResult(False, "decode-failure")
    if not secrets.compare_digest(key_digest(k, record.hash_alg), record.h):
        return AuthResult(False, "hash-mismatch")
    return AuthResult(True, "", k)


def guess_bound(z: int, w: int, exact: bool = False) -> float:
    """log2(2^z / sum_{i<=w} C(z, i)): minimum brute-force effort against the commitment."""
    if z < 0 or w < 0:
        raise ParameterError("z and w must be non-negative")
    if w > z:
        raise ParameterError("radius w cannot exceed z")
    if exact:
        ball = sum(math.comb(z, i) for i in range(w + 1))
        # integer log2 with a float correction on the leading bits
        shift = max(ball.bit_length() - 64, 0)
        return z - (shift + math.log2(ball >> shift))
    terms = [math.lgamma(z + 1) - math.lgamma(i + 1) - math.lgamma(z - i + 1) for i in range(w + 1)]
    top = max(terms)
    log_ball = top + math.log(sum(math.exp(t - top) for t in terms))
    return z - log_ball / math.log(2)


def load_private_key(path: str | Path) -> Ed25519PrivateKey:
    data = Path(path).read_bytes()
    try:
        key = serialization.load_pem_private_key(data, password=None)
    except ValueError as exc:
        raise InputError(f"cannot read private key {path}: {exc}") from None
    if not isinstance(key, Ed25519PrivateKey):
        raise InputError("signing key must be Ed25519")
    return key


def load_public_key(path: str | Path) -> Ed25519PublicKey:
    data = Path(path).read_bytes()
    try:
        key = serialization.load_pem_public_key(data)
    except ValueError:
        try:
            key = serialization.load_pem_private_key(data, password=None).public_key()
        except ValueError as exc:
            raise InputError(f"cannot read public key {path}: {exc}") from None
    if not isinstance(key, Ed25519PublicKey):
        raise InputError("verifying key must be Ed25519")
    return key


def write_keypair(private_path: str | Path, public_path: str | Path) -> str:
    """Create an Ed25519 key pair as PEM files; returns the signer id."""
    key = Ed25519PrivateKey.generate()
    Path(private_path).write_bytes(
        key.private_bytes(
            serialization.Encoding.PEM,
            serialization.PrivateFormat.PKCS8,
            serialization.NoEncryption(),
        )
    )
    Path(public_path).write_bytes(
        key.public_key().public_bytes(
            serialization.Encoding.PEM, serialization.PublicFormat.SubjectPublicKeyInfo
        )
    )
    return signer_id(key.public_key())
