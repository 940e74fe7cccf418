"""Paper texture fingerprinting.

Extract 2048-bit Gabor-sign fingerprints from transmissive-light captures of
paper, compare them by masked fractional Hamming distance, evaluate datasets
with biometric and PUF metrics, and bind keys to fingerprints with a fuzzy
commitment.
"""

from __future__ import annotations

from .errors import (
    BoxNotFoundError,
    ConflictError,
    DecodeFailure,
    DegenerateInputError,
    FlipDetectedError,
    IncomparableError,
    InputError,
    NotFoundError,
    OrientationAmbiguousError,
    PaperTexError,
    ParameterError,
    SquareNotFoundError,
    StoreError,
)
from .imageio import read_capture
from .prep import Capture, PreparedImage, prepare
from .texture import (
    Fingerprint,
    GaborParams,
    extract_fingerprint,
    fractional_hamming,
    read_fingerprint,
    write_fingerprint,
)

__version__ = "0.1.0"

__all__ = [
    "BoxNotFoundError",
    "Capture",
    "ConflictError",
    "DecodeFailure",
    "DegenerateInputError",
    "Fingerprint",
    "FlipDetectedError",
    "GaborParams",
    "IncomparableError",
    "InputError",
    "NotFoundError",
    "OrientationAmbiguousError",
    "PaperTexError",
    "ParameterError",
    "PreparedImage",
    "SquareNotFoundError",
    "StoreError",
    "extract_fingerprint",
    "fractional_hamming",
    "prepare",
    "read_capture",
    "read_fingerprint",
    "write_fingerprint",
]
