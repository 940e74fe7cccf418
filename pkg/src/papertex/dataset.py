"""Loading ``<root>/<sheet-id>/<sample-id>.ptfp`` trees and evaluating them end to end."""

from __future__ import annotations

from pathlib import Path

from .errors import InputError, PaperTexError
from .imageio import read_capture
from .metrics import DEFAULT_THRESHOLD, DatasetIndex, MetricsReport, evaluate, write_pairs_csv
from .texture import GaborParams, extract_fingerprint, read_fingerprint

CAPTURE_SUFFIXES = (".png", ".pgm", ".ppm", ".pnm", ".tif", ".tiff", ".jpg", ".jpeg")


def _scan(root: Path, suffixes: tuple[str, ...]) -> tuple[dict[tuple[str, str], Path], list[str]]:
    found: dict[tuple[str, str], Path] = {}
    problems: list[str] = []
    for sheet_dir in sorted(root.iterdir()):
        if sheet_dir.name.startswith("."):
            continue
        if not sheet_dir.is_dir():
            continue  # top-level files (manifests, reports) are not samples
        for f in sorted(sheet_dir.iterdir()):
            if f.name.startswith("."):
                continue
            if not f.is_file() or f.suffix.lower() not in suffixes:
                problems.append(f"{f}: not a {'/'.join(suffixes)} file")
                continue
            key = (sheet_dir.name, f.stem)
            if key in found:
                problems.append(f"{f}: duplicate sample id {f.stem!r} in {sheet_dir.name}")
                continue
            found[key] = f
    return found, problems


def load_dataset(
    root: str | Path,
    extract: bool = False,
    params: GaborParams = GaborParams(),
    min_component_area: int = 100,
) -> DatasetIndex:
    """Read every sample of a dataset tree; errors list every offending path."""
    root = Path(root)
    if not root.is_dir():
        raise InputError(f"dataset directory {root} does not exist")
    files, problems = _scan(root, CAPTURE_SUFFIXES if extract else (".ptfp",))
    fingerprints = {}
    for key, path in files.items():
        try:
            if extract:
                fingerprints[key] = extract_fingerprint(read_capture(path), params, min_component_area)
            else:
                fingerprints[key] = read_fingerprint(path)
        except (PaperTexError, OSError, UnicodeDecodeError) as exc:
            problems.append(f"{path}: {exc}")
    per_sheet: dict[str, int] = {}
    for sheet, _ in fingerprints:
        per_sheet[sheet] = per_sheet.get(sheet, 0) + 1
    if len(set(per_sheet.values())) > 1:
        expected = max(per_sheet.values())
        for sheet, count in sorted(per_sheet.items()):
            if count != expected:
                problems.append(f"{root / sheet}: {count} samples, expected {expected}")
    if not fingerprints and not problems:
        problems.append(f"{root}: no samples found")
    if problems:
        raise InputError("malformed dataset:\n  " + "\n  ".join(problems))
    return DatasetIndex.from_fingerprints(fingerprints)


def evaluate_directory(
    root: str | Path,
    report_path: str | Path | None = None,
    csv_path: str | Path | None = None,
    threshold: float = DEFAULT_THRESHOLD,
    extract: bool = False,
    params: GaborParams = GaborParams(),
    masked_puf: bool = False,
) -> MetricsReport:
    ds = load_dataset(root, extract, params)
    report, pairs = evaluate(ds, threshold, masked_puf)
    if report_path is not None:
        Path(report_path).write_text(report.to_text(), encoding="utf-8")
    if csv_path is not None:
        write_pairs_csv(csv_path, ds, pairs)
    return report
