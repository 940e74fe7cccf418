"""Gabor filtering, 2048-bit quadrant encoding and masked Hamming comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve

from .errors import IncomparableError, InputError, ParameterError
from .prep import PREPARED_SIZE, Capture, PreparedImage, prepare

GRID = 32
STEP = 20
OFFSET = STEP - 1  # every 20th row/column, 1-based
FINGERPRINT_BITS = 2 * GRID * GRID
PTFP_MAGIC = "PTFP1"


@dataclass(frozen=True)
class GaborParams:
    """Single Gabor wavelet from the scale/orientation family.

    ``envelope="scaled"`` ties the Gaussian width to the frequency
    (``exp(-f^2 (x'^2/gamma^2 + y'^2/eta^2) / sigma^2)``), which with the
    ``f^2 / (pi eta gamma)`` normaliser gives a unit-DC-gain envelope.
    ``envelope="fixed"`` uses ``exp(-(eta^2 x'^2 + gamma^2 y'^2) / (2 sigma^2))``,
    a pixel-wide blob whose real part is dominated by the local mean.
    """

    fmax: float = 0.25
    scale: int = 5
    orientation: int = 7
    n_orientations: int = 8
    n_scales: int = 7
    eta: float = math.sqrt(2)
    gamma: float = math.sqrt(2)
    sigma: float = 1.0
    kernel_size: int = 100
    envelope: str = "scaled"

    def __post_init__(self) -> None:
        if min(self.eta, self.gamma, self.sigma) <= 0:
            raise ParameterError("eta, gamma and sigma must be positive")
        if self.fmax <= 0:
            raise ParameterError("fmax must be positive")
        if not 1 <= self.scale <= self.n_scales:
            raise ParameterError(f"scale index {self.scale} outside 1..{self.n_scales}")
        if not 1 <= self.orientation <= self.n_orientations:
            raise ParameterError(
                f"orientation index {self.orientation} outside 1..{self.n_orientations}"
            )
        if self.kernel_size < 1:
            raise ParameterError("kernel size must be positive")
        if self.envelope not in ("scaled", "fixed"):
            raise ParameterError(f"unknown envelope {self.envelope!r}")

    @property
    def frequency(self) -> float:
        return self.fmax / math.sqrt(2) ** (self.scale - 1)

    @property
    def theta(self) -> float:
        return (self.orientation - 1) / self.n_orientations * math.pi


@dataclass
class Fingerprint:
    """Bits and validity mask; pair ``(2i, 2i+1)`` holds the Re/Im signs of sample ``i``."""

    bits: np.ndarray
    mask: np.ndarray
    params: GaborParams | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.bits = np.asarray(self.bits, dtype=np.uint8).ravel()
        self.mask = np.asarray(self.mask, dtype=np.uint8).ravel()
        if self.bits.size != FINGERPRINT_BITS or self.mask.size != FINGERPRINT_BITS:
            raise InputError(f"fingerprint and mask must have {FINGERPRINT_BITS} bits")
        if self.bits.max(initial=0) > 1 or self.mask.max(initial=0) > 1:
            raise InputError("fingerprint bits must be 0/1")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Fingerprint):
            return NotImplemented
        return np.array_equal(self.bits, other.bits) and np.array_equal(self.mask, other.mask)


@lru_cache(maxsize=32)
def _kernel_cached(params: GaborParams) -> np.ndarray:
    k = params.kernel_size
    offs = np.arange(k, dtype=np.float64) - (k - 1) / 2.0
    x, y = np.meshgrid(offs, offs)  # x = column offset, y = row offset
    th = params.theta
    xr = x * math.cos(th) + y * math.sin(th)
    yr = -x * math.sin(th) + y * math.cos(th)
    f = params.frequency
    if params.envelope == "scaled":
        arg = f * f * (xr**2 / params.gamma**2 + yr**2 / params.eta**2) / params.sigma**2
    else:
        arg = (params.eta**2 * xr**2 + params.gamma**2 * yr**2) / (2.0 * params.sigma**2)
    norm = f * f / (math.pi * params.eta * params.gamma)
    kern = norm * np.exp(-arg) * np.exp(2j * math.pi * f * xr)
    kern.setflags(write=False)
    return kern


def gabor_kernel(params: GaborParams) -> np.ndarray:
    """Complex kernel sampled on a centred ``kernel_size`` grid."""
    return _kernel_cached(params).copy()


def convolve(image: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Zero-padded 2-D convolution, cropped to the centred ``image.shape`` window.

    ``out[i, j] = sum_{m, n} image[m, n] * kernel[i - m + cy, j - n + cx]`` with
    ``cy, cx = (kernel.shape - 1) // 2``.  Computed by FFT.
    """
    image = np.asarray(image, dtype=np.float64)
    kernel = np.asarray(kernel)
    if image.ndim != 2 or kernel.ndim != 2:
        raise InputError("convolve expects 2-D image and kernel")
    full = fftconvolve(image, kernel, mode="full")
    if not np.iscomplexobj(full):
        full = full.astype(np.complex128)
    cy, cx = (kernel.shape[0] - 1) // 2, (kernel.shape[1] - 1) // 2
    h, w = image.shape
    return full[cy : cy + h, cx : cx + w]


def _check_prepared_shape(a: np.ndarray) -> None:
    if a.shape != (PREPARED_SIZE, PREPARED_SIZE):
        raise InputError(f"expected {PREPARED_SIZE}x{PREPARED_SIZE}, got {a.shape}")


def downsample_field(field_: np.ndarray) -> np.ndarray:
    """Every 20th row and column (0-based 19, 39, ..., 639) -> 32x32."""
    field_ = np.asarray(field_)
    _check_prepared_shape(field_)
    return field_[OFFSET::STEP, OFFSET::STEP].copy()


def downsample_mask(mask: np.ndarray) -> np.ndarray:
    """Mask at the same 32x32 sample points as :func:`downsample_field`."""
    mask = np.asarray(mask)
    _check_prepared_shape(mask)
    return mask[OFFSET::STEP, OFFSET::STEP].astype(np.uint8)


def quadrant_bits(values: np.ndarray) -> np.ndarray:
    """Two Gray-coded bits per complex value: (Re >= 0, Im >= 0), interleaved."""
    v = np.asarray(values, dtype=np.complex128).ravel()
    out = np.empty(2 * v.size, dtype=np.uint8)
    out[0::2] = v.real >= 0
    out[1::2] = v.imag >= 0
    return out


def encode_fingerprint(
    field32: np.ndarray, mask32: np.ndarray, params: GaborParams | None = None
) -> Fingerprint:
    """Row-major quadrant encoding; sample ``(j, k)`` fills bits ``2(32j + k)`` and ``+1``."""
    field32 = np.asarray(field32)
    mask32 = np.asarray(mask32)
    if field32.shape != (GRID, GRID) or mask32.shape != (GRID, GRID):
        raise InputError("encode_fingerprint expects 32x32 inputs")
    bits = quadrant_bits(field32)
    mask = np.repeat((mask32.ravel() != 0).astype(np.uint8), 2)
    return Fingerprint(bits, mask, params)


def masked_hamming(bits1, bits2, mask1, mask2) -> float:
    """``|(b1 xor b2) & m1 & m2| / |m1 & m2|`` on plain 0/1 arrays."""
    b1 = np.asarray(bits1, dtype=bool)
    b2 = np.asarray(bits2, dtype=bool)
    joint = np.asarray(mask1, dtype=bool) & np.asarray(mask2, dtype=bool)
    n = int(joint.sum())
    if n == 0:
        raise IncomparableError("fingerprints share no valid bits")
    return int(((b1 ^ b2) & joint).sum()) / n


def fractional_hamming(f1: Fingerprint, f2: Fingerprint) -> float:
    return masked_hamming(f1.bits, f2.bits, f1.mask, f2.mask)


def fill_masked(samples: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Replace masked pixels by the mean of the valid ones."""
    out = np.array(samples, dtype=np.float64)
    valid = np.asarray(mask, dtype=bool)
    if valid.any():
        out[~valid] = out[valid].mean()
    return out


def fingerprint_from_prepared(
    prepared: PreparedImage, params: GaborParams = GaborParams(), fill: bool = False
) -> Fingerprint:
    """Filter, downsample and encode a prepared image.

    With ``fill`` the printed marks are replaced by the mean texture level
    before filtering, which damps the identical edge response that the print
    imprints on every sheet.
    """
    samples = fill_masked(prepared.samples, prepared.mask) if fill else prepared.samples
    response = convolve(samples, _kernel_cached(params))
    return encode_fingerprint(downsample_field(response), downsample_mask(prepared.mask), params)


def extract_fingerprint(
    capture: Capture,
    params: GaborParams = GaborParams(),
    min_component_area: int = 100,
    fill: bool = False,
) -> Fingerprint:
    """Capture -> prepared 640x640 image -> Gabor response -> 2048-bit fingerprint."""
    return fingerprint_from_prepared(prepare(capture, min_component_area), params, fill)


# ---------------------------------------------------------------------------
# PTFP1 text format


def bits_to_hex(bits: np.ndarray) -> str:
    """MSB-first packing: bit ``i`` is bit ``7 - i % 8`` of byte ``i // 8``."""
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes().hex()


def hex_to_bits(text: str, nbits: int) -> np.ndarray:
    try:
        raw = bytes.fromhex(text)
    except ValueError as exc:
        raise InputError("invalid hex payload") from exc
    if len(raw) * 8 != nbits:
        raise InputError(f"expected {nbits // 4} hex chars, got {len(text)}")
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8))


_PARAM_META = {
    "fmax": float,
    "scale": int,
    "orient": int,
    "orientations": int,
    "scales": int,
    "eta": float,
    "gamma": float,
    "sigma": float,
    "kernel_size": int,
    "envelope": str,
}
_PARAM_FIELD = {"orient": "orientation", "orientations": "n_orientations", "scales": "n_scales"}


def to_ptfp(fp: Fingerprint) -> str:
    lines = [PTFP_MAGIC, f"bits={bits_to_hex(fp.bits)}", f"mask={bits_to_hex(fp.mask)}"]
    meta = dict(fp.meta)
    if fp.params is not None:
        for key in _PARAM_META:
            meta.setdefault(f"gabor.{key}", getattr(fp.params, _PARAM_FIELD.get(key, key)))
    for key, value in meta.items():
        value = str(value)
        if "\n" in value or "=" in key or not key:
            raise InputError(f"metadata {key!r} cannot be stored in PTFP1")
        lines.append(f"meta.{key}={value}")
    return "\n".join(lines) + "\n"


def from_ptfp(text: str) -> Fingerprint:
    lines = [ln.rstrip("\r") for ln in text.splitlines() if ln.strip()]
    if len(lines) < 3 or lines[0] != PTFP_MAGIC:
        raise InputError("not a PTFP1 fingerprint file")
    if not lines[1].startswith("bits=") or not lines[2].startswith("mask="):
        raise InputError("PTFP1 requires bits= and mask= on lines 2 and 3")
    bits = hex_to_bits(lines[1][5:], FINGERPRINT_BITS)
    mask = hex_to_bits(lines[2][5:], FINGERPRINT_BITS)
    meta: dict[str, str] = {}
    for ln in lines[3:]:
        if not ln.startswith("meta.") or "=" not in ln:
            raise InputError(f"unexpected PTFP1 line: {ln!r}")
        key, value = ln[5:].split("=", 1)
        meta[key] = value
    gabor = {k[6:]: meta.pop(k) for k in list(meta) if k.startswith("gabor.")}
    params = None
    if gabor:
        try:
            kwargs = {
                _PARAM_FIELD.get(k, k): _PARAM_META[k](v) for k, v in gabor.items() if k in _PARAM_META
            }
            params = GaborParams(**kwargs)
        except (ValueError, ParameterError) as exc:
            raise InputError(f"bad Gabor metadata: {exc}") from exc
    return Fingerprint(bits, mask, params, meta)


def write_fingerprint(path: str | Path, fp: Fingerprint) -> None:
    Path(path).write_text(to_ptfp(fp), encoding="utf-8")


def read_fingerprint(path: str | Path) -> Fingerprint:
    return from_ptfp(Path(path).read_text(encoding="utf-8"))
