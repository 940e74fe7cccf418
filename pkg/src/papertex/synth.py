"""Synthetic paper sheets and perturbed captures with ground truth.

Sheets are latent transmission fields (smoothed white noise at two scales,
fine fibres plus coarser flocs) on a millimetre grid centred on the printed
box.  A capture renders the box (37 mm wide, 57 mm tall, 0.5 mm line) and the
5 mm filled square in its bottom-left corner over the texture, then applies
rotation, translation, illumination gain/gamma, optical blur, sensor noise
and an optional ink scribble.

Every artefact is a pure function of ``(seed, params)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import InputError, ParameterError
from .prep import Capture

BOX_WIDTH_MM = 37.0
BOX_HEIGHT_MM = 57.0
BORDER_MM = 0.5
SQUARE_MM = 5.0
SQUARE_INSET_MM = 1.5
MAX_ROTATION = 12.0

LATENT_PX_PER_MM = 20.0
LATENT_EXTENT_MM = (64.0, 84.0)  # (width, height) of the latent field
DEFAULT_CORRELATION_MM = ((0.06, 0.12), (0.5, 0.5))  # (sx, sy) per texture scale
DEFAULT_RESOLUTION = (2400, 3300)

PAPER_LOW, PAPER_HIGH = 0.45, 0.90  # transmission range of bare paper
INK_TRANSMISSION = 0.06

MANIFEST_NAME = "manifest.txt"
MANIFEST_HEADER = "# papertex synthetic dataset manifest v1"


@dataclass
class SheetModel:
    seed: int
    texture: np.ndarray  # float32, rows = sheet y (down), cols = sheet x
    sheet_id: str
    px_per_mm: float = LATENT_PX_PER_MM
    correlation_mm: tuple = DEFAULT_CORRELATION_MM


@dataclass
class CaptureParams:
    rotation: float = 0.0  # degrees, counter-clockwise
    translation: tuple[float, float] = (0.0, 0.0)  # pixels, (right, down)
    noise_sigma: float = 0.0
    illumination_gain: float = 1.0
    illumination_gamma: float = 1.0
    scribble_area_fraction: float = 0.0
    resolution: tuple[int, int] = DEFAULT_RESOLUTION  # (width, height)
    seed: int = 0  # noise and scribble draws
    blur_sigma: float = 0.7
    upside_down: bool = False
    mirrored: bool = False

    def __post_init__(self) -> None:
        if not -MAX_ROTATION <= self.rotation <= MAX_ROTATION:
            raise ParameterError(f"rotation {self.rotation} outside +-{MAX_ROTATION} degrees")
        if not 0.0 <= self.scribble_area_fraction <= 0.1:
            raise ParameterError("scribble area fraction must lie in [0, 0.1]")
        if self.noise_sigma < 0 or self.illumination_gain <= 0 or self.illumination_gamma <= 0:
            raise ParameterError("noise must be >= 0, gain and gamma > 0")
        w, h = self.resolution
        if w < 640 or h < 640:
            raise ParameterError("capture resolution must be at least 640x640")
        self.translation = (float(self.translation[0]), float(self.translation[1]))
        self.resolution = (int(w), int(h))


@dataclass
class GroundTruth:
    marks: np.ndarray  # printed border, square and scribble pixels
    scribble: np.ndarray
    rotation: float  # total applied, including any 180 degree turn
    px_per_mm: float


def _u64(seq: np.random.SeedSequence) -> int:
    lo, hi = seq.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


def generate_sheet(
    seed: int,
    sheet_id: str | None = None,
    correlation_mm=DEFAULT_CORRELATION_MM,
    px_per_mm: float = LATENT_PX_PER_MM,
) -> SheetModel:
    """Latent texture for one sheet.

    ``correlation_mm`` lists Gaussian smoothing widths ``(sx, sy)`` in mm, one
    pair per texture scale; the scales are summed with equal variance.  The
    coarsest scale sets the correlation length that the Gabor band sees and
    therefore the effective entropy of the fingerprint.
    """
    rng = np.random.default_rng(seed)
    w = int(round(LATENT_EXTENT_MM[0] * px_per_mm))
    h = int(round(LATENT_EXTENT_MM[1] * px_per_mm))
    field_ = np.zeros((h, w), dtype=np.float64)
    for sx, sy in correlation_mm:
        layer = ndimage.gaussian_filter(
            rng.standard_normal((h, w)), sigma=(sy * px_per_mm, sx * px_per_mm), mode="wrap"
        )
        field_ += layer / layer.std()
    lo, hi = field_.min(), field_.max()
    texture = ((field_ - lo) / (hi - lo)).astype(np.float32)
    return SheetModel(
        seed=int(seed),
        texture=texture,
        sheet_id=sheet_id or f"sheet-{seed}",
        px_per_mm=px_per_mm,
        correlation_mm=tuple(tuple(c) for c in correlation_mm),
    )


def capture_scale(resolution: tuple[int, int]) -> float:
    """Pixels per mm so the box fits the frame at any rotation up to 12 degrees."""
    w, h = resolution
    a = math.radians(MAX_ROTATION)
    need_w = BOX_WIDTH_MM * math.cos(a) + BOX_HEIGHT_MM * math.sin(a)
    need_h = BOX_HEIGHT_MM * math.cos(a) + BOX_WIDTH_MM * math.sin(a)
    return 0.9 * min(w / need_w, h / need_h)


def _print_layers(x: np.ndarray, y: np.ndarray):
    """Border and square membership for sheet coordinates in mm (origin at box centre, y down)."""
    hw, hh = BOX_WIDTH_MM / 2, BOX_HEIGHT_MM / 2
    outer = (np.abs(x) <= hw) & (np.abs(y) <= hh)
    inner = (np.abs(x) < hw - BORDER_MM) & (np.abs(y) < hh - BORDER_MM)
    sx0 = -hw + BORDER_MM + SQUARE_INSET_MM
    sy1 = hh - BORDER_MM - SQUARE_INSET_MM
    square = (x >= sx0) & (x <= sx0 + SQUARE_MM) & (y <= sy1) & (y >= sy1 - SQUARE_MM)
    return outer & ~inner, square


def _stamp_disk(mask, cy, cx, radius, oy, ox) -> None:
    """Set pixels whose centres lie strictly inside the circle (cy, cx, radius)."""
    iy, ix = int(round(cy)), int(round(cx))
    rr, cc = oy + iy, ox + ix
    inside = (rr - cy) ** 2 + (cc - cx) ** 2 < radius**2
    inside &= (rr >= 0) & (rr < mask.shape[0]) & (cc >= 0) & (cc < mask.shape[1])
    mask[rr[inside], cc[inside]] = True


def _scribble_raster(rng: np.random.Generator, fraction: float, px_per_mm: float, shape):
    """Random pen stroke inside the box, clear of border and square, covering ``fraction`` of the box."""
    mask = np.zeros(shape, dtype=bool)
    if fraction <= 0:
        return mask
    target = fraction * BOX_WIDTH_MM * BOX_HEIGHT_MM * px_per_mm**2
    hw = BOX_WIDTH_MM / 2 - BORDER_MM - 2.5
    hh = BOX_HEIGHT_MM / 2 - BORDER_MM - 2.5
    sq_x1 = -BOX_WIDTH_MM / 2 + BORDER_MM + SQUARE_INSET_MM + SQUARE_MM + 2.5
    sq_y0 = BOX_HEIGHT_MM / 2 - BORDER_MM - SQUARE_INSET_MM - SQUARE_MM - 2.5

    def allowed(px, py):
        return abs(px) <= hw and abs(py) <= hh and not (px <= sq_x1 and py >= sq_y0)

    radius = 0.3 * px_per_mm
    r_int = int(math.ceil(radius))
    oy, ox = np.mgrid[-r_int : r_int + 1, -r_int : r_int + 1]
    step = 0.25
    x, y = rng.uniform(-0.5 * hw, 0.5 * hw), rng.uniform(-0.5 * hh, 0.5 * hh)
    heading = rng.uniform(0, 2 * math.pi)
    cy0, cx0 = (shape[0] - 1) / 2, (shape[1] - 1) / 2
    for i in range(200_000):
        heading += rng.normal(0.0, 0.35)
        nx, ny = x + step * math.cos(heading), y + step * math.sin(heading)
        if not allowed(nx, ny):
            heading = math.atan2(-y, -x) + rng.normal(0.0, 0.6)
            continue
        x, y = nx, ny
        _stamp_disk(mask, cy0 + y * px_per_mm, cx0 + x * px_per_mm, radius, oy, ox)
        if i % 25 == 0 and mask.sum() >= target:
            break
    return mask


def render_capture(sheet: SheetModel, p: CaptureParams) -> tuple[Capture, GroundTruth]:
    """Photograph ``sheet`` under ``p``; returns an 8-bit gray capture and ground truth."""
    w, h = p.resolution
    scale = capture_scale(p.resolution)
    rng = np.random.default_rng(p.seed)
    rotation = p.rotation + (180.0 if p.upside_down else 0.0)

    rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)
    dx = cols - (w - 1) / 2 - p.translation[0]
    dy_up = -(rows - (h - 1) / 2 - p.translation[1])
    del rows, cols
    a = math.radians(-rotation)
    ca, sa = math.cos(a), math.sin(a)
    x_mm = (ca * dx - sa * dy_up) / scale
    y_mm = -(sa * dx + ca * dy_up) / scale
    del dx, dy_up
    if p.mirrored:
        x_mm = -x_mm

    lh, lw = sheet.texture.shape
    ppm = sheet.px_per_mm
    lr = y_mm * ppm + (lh - 1) / 2
    lc = x_mm * ppm + (lw - 1) / 2
    tex = ndimage.map_coordinates(sheet.texture, [lr, lc], order=1, mode="reflect")
    border, square = _print_layers(x_mm, y_mm)
    del x_mm, y_mm

    scribble_sheet = _scribble_raster(rng, p.scribble_area_fraction, ppm, sheet.texture.shape)
    if scribble_sheet.any():
        scribble = ndimage.map_coordinates(
            scribble_sheet.astype(np.uint8), [lr, lc], order=0, mode="constant"
        ).astype(bool)
    else:
        scribble = np.zeros((h, w), dtype=bool)
    del lr, lc

    marks = border | square | scribble
    trans = PAPER_LOW + (PAPER_HIGH - PAPER_LOW) * tex.astype(np.float64)
    trans[marks] = INK_TRANSMISSION
    img = np.clip(p.illumination_gain * trans, 0.0, 1.0) ** p.illumination_gamma
    if p.blur_sigma > 0:
        img = ndimage.gaussian_filter(img, p.blur_sigma)
    if p.noise_sigma > 0:
        img = img + rng.normal(0.0, p.noise_sigma, img.shape)
    samples = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    meta = {"sheet": sheet.sheet_id, "sheet_seed": str(sheet.seed)}
    return Capture(samples, bit_depth=8, metadata=meta), GroundTruth(
        marks=marks, scribble=scribble, rotation=rotation, px_per_mm=scale
    )


def random_capture_params(
    rng: np.random.Generator,
    resolution: tuple[int, int] = DEFAULT_RESOLUTION,
    max_rotation: float = MAX_ROTATION,
    noise_sigma: float = 0.02,
    gain_range: tuple[float, float] = (0.9, 1.1),
    gamma_range: tuple[float, float] = (0.9, 1.1),
    max_translation: float = 20.0,
    scribble_area_fraction: float = 0.0,
) -> CaptureParams:
    """Draw capture perturbations from the default benchmark distribution."""
    return CaptureParams(
        rotation=float(rng.uniform(-max_rotation, max_rotation)),
        translation=tuple(float(t) for t in rng.uniform(-max_translation, max_translation, 2)),
        noise_sigma=noise_sigma,
        illumination_gain=float(rng.uniform(*gain_range)),
        illumination_gamma=float(rng.uniform(*gamma_range)),
        scribble_area_fraction=scribble_area_fraction,
        resolution=resolution,
        seed=int(rng.integers(0, 2**63)),
    )


@dataclass
class ManifestEntry:
    sheet_id: str
    sheet_seed: int
    sample_id: str
    params: CaptureParams = field(default_factory=CaptureParams)

    def to_line(self) -> str:
        p = self.params
        return (
            f"sheet={self.sheet_id} seed={self.sheet_seed} sample={self.sample_id} "
            f"rotation={p.rotation!r} tx={p.translation[0]!r} ty={p.translation[1]!r} "
            f"noise={p.noise_sigma!r} gain={p.illumination_gain!r} "
            f"gamma={p.illumination_gamma!r} scribble={p.scribble_area_fraction!r} "
            f"width={p.resolution[0]} height={p.resolution[1]} render_seed={p.seed} "
            f"blur={p.blur_sigma!r}"
        )

    @classmethod
    def from_line(cls, line: str) -> "ManifestEntry":
        try:
            kv = dict(tok.split("=", 1) for tok in line.split())
            params = CaptureParams(
                rotation=float(kv["rotation"]),
                translation=(float(kv["tx"]), float(kv["ty"])),
                noise_sigma=float(kv["noise"]),
                illumination_gain=float(kv["gain"]),
                illumination_gamma=float(kv["gamma"]),
                scribble_area_fraction=float(kv["scribble"]),
                resolution=(int(kv["width"]), int(kv["height"])),
                seed=int(kv["render_seed"]),
                blur_sigma=float(kv.get("blur", 0.7)),
            )
            return cls(kv["sheet"], int(kv["seed"]), kv["sample"], params)
        except (KeyError, ValueError) as exc:
            raise InputError(f"bad manifest line: {line!r}") from exc


def plan_dataset(
    sheets: int,
    samples_per_sheet: int,
    seed: int = 0,
    resolution: tuple[int, int] = DEFAULT_RESOLUTION,
    **perturbation,
) -> list[ManifestEntry]:
    """Manifest for an ``N x T`` dataset; the rendering is a pure function of it."""
    if sheets < 1 or samples_per_sheet < 1:
        raise ParameterError("need at least one sheet and one sample per sheet")
    root = np.random.SeedSequence(seed)
    entries = []
    for n, sheet_seq in enumerate(root.spawn(sheets)):
        sheet_seed = _u64(sheet_seq)
        rng = np.random.default_rng(sheet_seq.spawn(1)[0])
        for t in range(samples_per_sheet):
            params = random_capture_params(rng, resolution=resolution, **perturbation)
            entries.append(ManifestEntry(f"sheet-{n:03d}", sheet_seed, f"s{t:02d}", params))
    return entries


def iter_captures(entries: list[ManifestEntry], correlation_mm=DEFAULT_CORRELATION_MM):
    """Yield ``(entry, capture, truth)``, generating each sheet once."""
    sheet = None
    for entry in entries:
        if sheet is None or sheet.sheet_id != entry.sheet_id or sheet.seed != entry.sheet_seed:
            sheet = generate_sheet(entry.sheet_seed, entry.sheet_id, correlation_mm)
        capture, truth = render_capture(sheet, entry.params)
        yield entry, capture, truth


def write_png(path: Path, samples: np.ndarray) -> None:
    Image.fromarray(samples).save(path, format="PNG", optimize=False, compress_level=1)


def write_dataset(entries: list[ManifestEntry], output_dir: str | Path) -> Path:
    """Render every manifest entry to ``<out>/<sheet>/<sample>.png`` and write the manifest."""
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for entry, capture, _ in iter_captures(entries):
            d = out / entry.sheet_id
            d.mkdir(exist_ok=True)
            write_png(d / f"{entry.sample_id}.png", capture.samples)
        manifest = out / MANIFEST_NAME
        manifest.write_text(
            "\n".join([MANIFEST_HEADER] + [e.to_line() for e in entries]) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise OSError(f"cannot write dataset to {out}: {exc}") from exc
    return manifest


def generate_dataset(
    sheets: int,
    samples_per_sheet: int,
    output_dir: str | Path,
    seed: int = 0,
    resolution: tuple[int, int] = DEFAULT_RESOLUTION,
    **perturbation,
) -> Path:
    entries = plan_dataset(sheets, samples_per_sheet, seed, resolution, **perturbation)
    return write_dataset(entries, output_dir)


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [ManifestEntry.from_line(ln) for ln in lines if ln.strip() and not ln.startswith("#")]


def regenerate(manifest_path: str | Path, output_dir: str | Path) -> Path:
    """Re-render a dataset from its manifest (bit-identical to the original)."""
    return write_dataset(read_manifest(manifest_path), output_dir)

