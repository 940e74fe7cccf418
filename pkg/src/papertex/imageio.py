"""Reading captures from disk and writing diagnostic rasters.

PNG, TIFF and JPEG go through Pillow.  Netpbm (PGM/PPM, ASCII or binary, 8 or
16 bit) is parsed here so that 16-bit colour survives intact.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import InputError
from .prep import Capture

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_NETPBM_MAGIC = {b"P2", b"P3", b"P5", b"P6"}
_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*([^\s#]+)")


def _png_header(data: bytes) -> tuple[int, int] | None:
    """(bit depth, colour type) from the IHDR chunk, or None if not a PNG."""
    if not data.startswith(_PNG_SIGNATURE) or len(data) < 29:
        return None
    return data[24], data[25]


def _read_netpbm(data: bytes, name: str) -> Capture:
    magic = data[:2]
    pos = 2
    header = []
    while len(header) < 3:
        m = _TOKEN.match(data, pos)
        if m is None:
            raise InputError(f"{name}: truncated netpbm header")
        header.append(m.group(1))
        pos = m.end()
    try:
        width, height, maxval = (int(v) for v in header)
    except ValueError:
        raise InputError(f"{name}: malformed netpbm header") from None
    if not 0 < maxval < 65536 or width <= 0 or height <= 0:
        raise InputError(f"{name}: invalid netpbm dimensions or maxval")
    channels = 3 if magic in (b"P3", b"P6") else 1
    count = width * height * channels
    if magic in (b"P2", b"P3"):
        values = np.array(data[pos:].split()[:count], dtype=np.int64)
    else:
        raster = data[pos + 1 :]  # one whitespace byte ends the header
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
        if len(raster) < count * dtype.itemsize:
            raise InputError(f"{name}: truncated netpbm raster")
        values = np.frombuffer(raster, dtype=dtype, count=count)
    if values.size != count:
        raise InputError(f"{name}: expected {count} samples, found {values.size}")
    if values.max(initial=0) > maxval:
        raise InputError(f"{name}: sample exceeds maxval {maxval}")
    depth = 16 if maxval > 255 else 8
    samples = values.astype(np.uint16 if depth == 16 else np.uint8)
    shape = (height, width, 3) if channels == 3 else (height, width)
    return Capture(samples.reshape(shape), bit_depth=depth, max_value=maxval,
                   metadata={"source": name, "format": magic.decode()})


def _read_pillow(path: Path, name: str) -> Capture:
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode in ("I;16", "I;16B", "I;16L"):
                samples = np.asarray(img, dtype=np.uint16)
                depth = 16
            elif mode == "I":
                arr = np.asarray(img)
                if arr.min() < 0 or arr.max() > 65535:
                    raise InputError(f"{name}: 32-bit samples are not supported")
                samples, depth = arr.astype(np.uint16), 16
            elif mode in ("L", "RGB"):
                samples, depth = np.asarray(img, dtype=np.uint8), 8
            elif mode in ("1", "P", "LA", "PA"):
                samples, depth = np.asarray(img.convert("L"), dtype=np.uint8), 8
            elif mode in ("RGBA", "CMYK", "YCbCr", "LAB", "HSV"):
                samples, depth = np.asarray(img.convert("RGB"), dtype=np.uint8), 8
            else:
                raise InputError(f"{name}: unsupported image mode {mode}")
            fmt = img.format or ""
    except (UnidentifiedImageError, OSError) as exc:
        raise InputError(f"{name}: cannot decode image ({exc})") from None
    return Capture(np.ascontiguousarray(samples), bit_depth=depth,
                   metadata={"source": name, "format": fmt})


def read_capture(path: str | Path) -> Capture:
    """Load a capture; raises :class:`InputError` for anything that is not a usable image."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    if data[:2] in _NETPBM_MAGIC:
        return _read_netpbm(data, str(path))
    png = _png_header(data)
    if png is not None and png[0] == 16 and png[1] in (2, 6):
        # Pillow would silently reduce these to 8 bits per channel
        raise InputError(f"{path}: 16-bit colour PNG is not supported; convert to 16-bit PPM or gray PNG")
    return _read_pillow(path, str(path))


def write_pgm16(path: str | Path, samples: np.ndarray) -> None:
    """Binary 16-bit PGM of a [0, 1] float image."""
    arr = np.clip(np.asarray(samples, dtype=np.float64), 0.0, 1.0)
    q = np.round(arr * 65535).astype(">u2")
    h, w = q.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode())
        fh.write(q.tobytes())


def write_pbm(path: str | Path, mask: np.ndarray) -> None:
    """Binary PBM; netpbm convention 1 = black, so valid (True) pixels are written white."""
    m = np.asarray(mask, dtype=bool)
    h, w = m.shape
    with open(path, "wb") as fh:
        fh.write(f"P4\n{w} {h}\n".encode())
        fh.write(np.packbits(~m, axis=1).tobytes())

