"""Geometry normalisation of a raw capture of the printed fingerprint zone.

A capture shows a dark printed rectangle on bright transmissive paper with a
filled square in its bottom-left corner.  The stages here locate the print,
undo translation and rotation, crop to the box and resample to a fixed
640x640 field, tracking a validity mask alongside the intensities.

Coordinates: points are ``(x, y)`` with ``x`` the column and ``y`` the row of
the pixel grid.  Angles are counter-clockwise as the image is displayed, i.e.
measured in a y-up frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from PIL import Image
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError

from .errors import (
    BoxNotFoundError,
    DegenerateInputError,
    FlipDetectedError,
    InputError,
    OrientationAmbiguousError,
    SquareNotFoundError,
)

PREPARED_SIZE = 640
MIN_CAPTURE_SIZE = 640
DEFAULT_MIN_COMPONENT_AREA = 100
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass
class Capture:
    """Raw image as read from disk: integer samples, gray ``(H, W)`` or colour ``(H, W, 3)``."""

    samples: np.ndarray
    bit_depth: int = 8
    metadata: dict = field(default_factory=dict)
    max_value: int | None = None

    def __post_init__(self) -> None:
        s = np.asarray(self.samples)
        if s.ndim not in (2, 3) or (s.ndim == 3 and s.shape[2] != 3):
            raise InputError(f"capture must be (H, W) or (H, W, 3), got shape {s.shape}")
        if not np.issubdtype(s.dtype, np.integer):
            raise InputError(f"capture samples must be integers, got {s.dtype}")
        if self.bit_depth not in (8, 16):
            raise InputError(f"bit depth must be 8 or 16, got {self.bit_depth}")
        if s.shape[0] < MIN_CAPTURE_SIZE or s.shape[1] < MIN_CAPTURE_SIZE:
            raise InputError(
                f"capture is {s.shape[1]}x{s.shape[0]}; at least "
                f"{MIN_CAPTURE_SIZE}x{MIN_CAPTURE_SIZE} is required"
            )
        if self.max_value is None:
            self.max_value = (1 << self.bit_depth) - 1
        if not 0 < self.max_value < (1 << self.bit_depth):
            raise InputError(f"max value {self.max_value} outside {self.bit_depth}-bit range")
        if s.size and (s.min() < 0 or s.max() > self.max_value):
            raise InputError("sample values exceed the declared bit depth")
        self.samples = s

    @property
    def height(self) -> int:
        return int(self.samples.shape[0])

    @property
    def width(self) -> int:
        return int(self.samples.shape[1])

    @property
    def channels(self) -> int:
        return 1 if self.samples.ndim == 2 else 3


@dataclass
class PrintSegmentation:
    """Printed marks found in a gray capture.

    ``box`` is the convex-hull-filled rectangle region (border included);
    ``border``, ``square`` and ``artifacts`` are disjoint dark-pixel layers.
    """

    box: np.ndarray
    border: np.ndarray
    square: np.ndarray
    artifacts: np.ndarray
    square_centroid: tuple[float, float]
    otsu_level: float
    hull: np.ndarray  # (k, 2) hull vertices as (x, y)

    @property
    def marks(self) -> np.ndarray:
        return self.border | self.square | self.artifacts


@dataclass
class PreparedImage:
    samples: np.ndarray  # (640, 640) float in [0, 1]
    mask: np.ndarray  # (640, 640) bool, True = reliable texture
    rotation_applied: float  # degrees, counter-clockwise
    translation_applied: tuple[float, float]
    crop_size: tuple[int, int] = (0, 0)  # (width, height) of the box at capture resolution


def to_grayscale(capture: Capture) -> np.ndarray:
    """Normalise a capture to float intensities in [0, 1] (Rec.601 luma for colour)."""
    s = capture.samples.astype(np.float64) / float(capture.max_value)
    if s.ndim == 3:
        r, g, b = LUMA_WEIGHTS
        s = r * s[..., 0] + g * s[..., 1] + b * s[..., 2]
    return np.clip(s, 0.0, 1.0)


def _histogram256(image: np.ndarray) -> np.ndarray:
    bins = np.minimum((np.asarray(image, dtype=np.float64) * 256.0).astype(np.int64), 255)
    return np.bincount(np.clip(bins, 0, 255).ravel(), minlength=256)


def otsu_threshold(image: np.ndarray) -> float:
    """Otsu level over a 256-bin histogram.

    Returns ``k / 256`` for the bin boundary ``k`` that maximises the
    between-class variance; pixels with intensity ``< level`` form the dark
    class.  The search uses exact integer arithmetic so ties resolve to the
    lowest ``k`` deterministically.
    """
    hist = [int(h) for h in _histogram256(image)]
    total_n = sum(hist)
    total_s = sum(i * h for i, h in enumerate(hist))
    best_k = 0
    best_num, best_den = 0, 1
    n0 = s0 = 0
    for k in range(1, 256):
        n0 += hist[k - 1]
        s0 += (k - 1) * hist[k - 1]
        n1 = total_n - n0
        if n0 == 0 or n1 == 0:
            continue
        num = (total_s * n0 - total_n * s0) ** 2
        den = n0 * n1
        if best_k == 0 or num * best_den > best_num * den:
            best_k, best_num, best_den = k, num, den
    if best_k == 0 or best_num == 0:
        raise DegenerateInputError("image histogram has a single occupied bin")
    return best_k / 256.0


def centroid(obj: np.ndarray) -> tuple[float, float]:
    """First-order moment (mean set-pixel coordinate) as ``(x, y)``."""
    rows, cols = np.nonzero(obj)
    if rows.size == 0:
        raise DegenerateInputError("centroid of an empty object")
    return float(cols.sum() / cols.size), float(rows.sum() / rows.size)


def second_moments(obj: np.ndarray) -> tuple[float, float, float]:
    """Central moments ``(u20, u11, u02)`` in the y-up frame."""
    rows, cols = np.nonzero(obj)
    if rows.size == 0:
        raise DegenerateInputError("moments of an empty object")
    x = cols - cols.mean()
    y = -(rows - rows.mean())
    return float(x @ x), float(x @ y), float(y @ y)


def orientation_angle(obj: np.ndarray) -> float:
    """Major-axis angle of ``obj`` in degrees, folded into (-45, 45].

    The major axis of the equal-moment ellipse lies at
    ``atan(2 u11 / ((u20 - u02) + sqrt((u02 - u20)^2 + 4 u11^2)))``; folding
    by 90 degrees makes landscape and portrait rectangles both read as their
    tilt from the nearest image axis.
    """
    u20, u11, u02 = second_moments(obj)
    if u20 + u02 <= 0:
        raise DegenerateInputError("object has no spatial extent")
    spread = math.sqrt((u02 - u20) ** 2 + 4.0 * u11**2)
    if spread <= 1e-9 * (u20 + u02):
        raise OrientationAmbiguousError("object is circularly symmetric in its second moments")
    denom = (u20 - u02) + spread
    if denom == 0.0:
        angle = 90.0
    else:
        angle = math.degrees(math.atan(2.0 * u11 / denom))
    while angle > 45.0:
        angle -= 90.0
    while angle <= -45.0:
        angle += 90.0
    return angle


def fill_convex(hull: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Pixels whose centres lie inside the convex polygon ``hull`` ((x, y) vertices)."""
    h, w = shape
    lo = np.full(h, np.inf)
    hi = np.full(h, -np.inf)
    for (xa, ya), (xb, yb) in zip(hull, np.roll(hull, -1, axis=0)):
        r0 = max(int(math.ceil(min(ya, yb))), 0)
        r1 = min(int(math.floor(max(ya, yb))), h - 1)
        if r1 < r0:
            continue
        rows = np.arange(r0, r1 + 1, dtype=np.float64)
        if ya == yb:
            xs_lo = np.full(rows.size, min(xa, xb))
            xs_hi = np.full(rows.size, max(xa, xb))
        else:
            xs_lo = xs_hi = xa + (rows - ya) * (xb - xa) / (yb - ya)
        lo[r0 : r1 + 1] = np.minimum(lo[r0 : r1 + 1], xs_lo)
        hi[r0 : r1 + 1] = np.maximum(hi[r0 : r1 + 1], xs_hi)
    cols = np.arange(w)
    return (cols >= np.ceil(lo - 1e-9)[:, None]) & (cols <= np.floor(hi + 1e-9)[:, None])


def _box_corners(hull: np.ndarray) -> np.ndarray:
    """Four hull vertices extreme along the image diagonals."""
    s = hull[:, 0] + hull[:, 1]
    d = hull[:, 0] - hull[:, 1]
    return hull[[np.argmin(s), np.argmax(d), np.argmax(s), np.argmin(d)]]


def segment_print_marks(
    image: np.ndarray, min_component_area: int = DEFAULT_MIN_COMPONENT_AREA
) -> PrintSegmentation:
    """Find the printed border, the filled square and any dark artefacts.

    Dark pixels (below the Otsu level) are grouped into 8-connected components;
    components smaller than ``min_component_area`` are scattered noise.  The
    survivor with the largest bounding box is the border; its convex hull,
    filled, is the box.
    """
    image = np.asarray(image, dtype=np.float64)
    level = otsu_threshold(image)
    labels, count = ndimage.label(image < level, structure=_EIGHT_CONNECTED)
    if count == 0:
        raise BoxNotFoundError("no dark marks in image")
    areas = np.bincount(labels.ravel())
    areas[0] = 0
    areas[areas < min_component_area] = 0
    if not areas.any():
        raise BoxNotFoundError("every dark component is below the noise area")
    objects = ndimage.find_objects(labels)
    # the border encloses every other mark, so its bounding box is the largest
    # (a heavy scribble can outweigh the thin border in pixel count)
    extents = np.zeros(count + 1)
    for lab in np.nonzero(areas)[0]:
        sl = objects[lab - 1]
        extents[lab] = (sl[0].stop - sl[0].start) * (sl[1].stop - sl[1].start)
    border_label = int(np.argmax(extents))
    border = labels == border_label

    rows, cols = np.nonzero(border)
    # row-wise extremes are enough to carry the convex hull
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    first = np.r_[True, rows[1:] != rows[:-1]]
    last = np.r_[rows[1:] != rows[:-1], True]
    pts = np.unique(
        np.column_stack([np.r_[cols[first], cols[last]], np.r_[rows[first], rows[last]]]), axis=0
    ).astype(np.float64)
    try:
        hull = pts[ConvexHull(pts).vertices]
    except (QhullError, ValueError) as exc:
        raise BoxNotFoundError("border component is degenerate") from exc
    box = fill_convex(hull, border.shape) | border
    if box.sum() < 0.10 * box.size:
        raise BoxNotFoundError(
            f"largest printed shape covers {box.mean():.1%} of the frame (< 10%)"
        )

    corners = _box_corners(hull)
    diag = float(np.hypot(*(hull.max(axis=0) - hull.min(axis=0))))
    inside_counts = np.bincount(labels[box], minlength=count + 1)
    square_label, square_dist = 0, math.inf
    interior: list[int] = []
    for lab in range(1, count + 1):
        if lab == border_label or areas[lab] == 0:
            continue
        if inside_counts[lab] < 0.5 * areas[lab]:
            continue
        interior.append(lab)
        sl = objects[lab - 1]
        h = sl[0].stop - sl[0].start
        w = sl[1].stop - sl[1].start
        if not 0.8 <= w / h <= 1.25 or areas[lab] < 0.5 * w * h:
            continue
        cy, cx = ndimage.center_of_mass(labels[sl] == lab)
        cx += sl[1].start
        cy += sl[0].start
        dist = float(np.min(np.hypot(corners[:, 0] - cx, corners[:, 1] - cy)))
        if dist < square_dist and dist < 0.25 * diag:
            square_label, square_dist = lab, dist
    if square_label == 0:
        raise SquareNotFoundError("no square-like mark near a box corner")
    square = labels == square_label
    artifacts = np.isin(labels, [lab for lab in interior if lab != square_label]) & ~square
    return PrintSegmentation(
        box=box,
        border=border,
        square=square,
        artifacts=artifacts,
        square_centroid=centroid(square),
        otsu_level=level,
        hull=hull,
    )


def _rotate_vec(x: np.ndarray, y: np.ndarray, degrees: float):
    a = math.radians(degrees)
    c, s = math.cos(a), math.sin(a)
    return c * x - s * y, s * x + c * y


def _resize(layer: np.ndarray, size: int, resample: Image.Resampling) -> np.ndarray:
    img = Image.fromarray(np.ascontiguousarray(layer, dtype=np.float32), mode="F")
    return np.asarray(img.resize((size, size), resample=resample), dtype=np.float64)


def normalize_geometry(
    image: np.ndarray, seg: PrintSegmentation, size: int = PREPARED_SIZE
) -> PreparedImage:
    """Rotate the box upright about its centroid, crop to it and resample to ``size``.

    Intensities are rotated bilinearly and resized with an antialiased
    bilinear filter; mask layers are rotated nearest-neighbour and any output
    pixel whose footprint touches a mark or leaves the box is masked out.
    """
    image = np.asarray(image, dtype=np.float64)
    theta = orientation_angle(seg.box)
    cx, cy = centroid(seg.box)
    rotation = -theta

    # square must land bottom-left (x < 0, y_up < 0 about the centroid)
    sx, sy = seg.square_centroid
    qx, qy = _rotate_vec(np.float64(sx - cx), np.float64(-(sy - cy)), rotation)
    hx, hy = _rotate_vec(seg.hull[:, 0] - cx, -(seg.hull[:, 1] - cy), rotation)
    half_w = 0.5 * (hx.max() - hx.min())
    half_h = 0.5 * (hy.max() - hy.min())
    if abs(qx) < 0.05 * half_w or abs(qy) < 0.05 * half_h:
        raise OrientationAmbiguousError("filled square lies on a box axis")
    if qx > 0 and qy > 0:
        rotation += 180.0
    elif not (qx < 0 and qy < 0):
        raise FlipDetectedError("filled square is in a mirrored corner; capture is flipped")
    if rotation > 180.0:
        rotation -= 360.0

    hx, hy = _rotate_vec(seg.hull[:, 0] - cx, -(seg.hull[:, 1] - cy), rotation)
    x0, x1 = float(hx.min()), float(hx.max())
    y0, y1 = float(hy.min()), float(hy.max())
    crop_w = max(int(round(x1 - x0 + 1.0)), 1)
    crop_h = max(int(round(y1 - y0 + 1.0)), 1)

    # crop pixel (i, j) centre in the rotated y-up frame, mapped back to the source
    u = x0 + np.arange(crop_w, dtype=np.float64)
    v = y1 - np.arange(crop_h, dtype=np.float64)
    uu, vv = np.meshgrid(u, v)
    bx, by = _rotate_vec(uu, vv, -rotation)
    coords = np.stack([cy - by, cx + bx])

    crop = ndimage.map_coordinates(image, coords, order=1, mode="nearest")
    marks = ndimage.binary_dilation(seg.marks, structure=_EIGHT_CONNECTED)
    valid_src = (seg.box & ~marks).astype(np.uint8)
    valid = ndimage.map_coordinates(valid_src, coords, order=0, mode="constant", cval=0)

    samples = np.clip(_resize(crop, size, Image.Resampling.BILINEAR), 0.0, 1.0)
    coverage = _resize(valid.astype(np.float32), size, Image.Resampling.BOX)
    mask = coverage >= 1.0 - 1e-4
    return PreparedImage(
        samples=samples,
        mask=mask,
        rotation_applied=rotation,
        translation_applied=(-cx, -cy),
        crop_size=(crop_w, crop_h),
    )


def prepare(
    capture: Capture, min_component_area: int = DEFAULT_MIN_COMPONENT_AREA
) -> PreparedImage:
    """Full preparation: grayscale, segmentation, geometry normalisation."""
    gray = to_grayscale(capture)
    seg = segment_print_marks(gray, min_component_area)
    return normalize_geometry(gray, seg)
