"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class PaperTexError(Exception):
    """Base class for all errors raised by papertex."""


class InputError(PaperTexError, ValueError):
    """Malformed input: wrong dimensions, bad file contents, out-of-range values."""


class DegenerateInputError(InputError):
    """Input is well-formed but carries no usable information (constant, empty)."""


class ParameterError(PaperTexError, ValueError):
    """An algorithm parameter is outside its valid domain."""


class BoxNotFoundError(PaperTexError):
    """No printed rectangle large enough to be the fingerprint zone."""


class SquareNotFoundError(PaperTexError):
    """The filled alignment square could not be located inside the box."""


class FlipDetectedError(PaperTexError):
    """The capture is mirrored; no rotation puts the square bottom-left."""


class OrientationAmbiguousError(PaperTexError):
    """The object's orientation cannot be determined unambiguously."""


class IncomparableError(PaperTexError):
    """Two fingerprints share no valid bit positions."""


class DecodeFailure(PaperTexError):
    """The error-correcting decoder could not produce a codeword."""


class StoreError(PaperTexError):
    """Base class for template store failures."""


class ConflictError(StoreError):
    """A template with the requested id already exists."""


class NotFoundError(StoreError, KeyError):
    """No template with the requested id."""

    def __str__(self) -> str:  # KeyError would repr() the message
        return str(self.args[0]) if self.args else ""
