from __future__ import annotations

import numpy as np
import pytest

from papertex import synth
from papertex.errors import ParameterError


def test_sheet_generation_is_deterministic():
    a, b = synth.generate_sheet(42), synth.generate_sheet(42)
    assert np.array_equal(a.texture, b.texture)
    assert a.texture.min() == 0.0 and a.texture.max() == 1.0


def test_distinct_seeds_are_uncorrelated(sheets):
    rho = np.corrcoef(sheets[1].texture.ravel(), sheets[2].texture.ravel())[0, 1]
    assert abs(rho) < 0.05


def test_correlation_length_is_configurable():
    fine = synth.generate_sheet(1, correlation_mm=((0.05, 0.05),))
    coarse = synth.generate_sheet(1, correlation_mm=((0.5, 0.5),))

    def lag_corr(t):
        return np.corrcoef(t[:, :-5].ravel(), t[:, 5:].ravel())[0, 1]

    assert lag_corr(coarse.texture) > lag_corr(fine.texture)


def test_capture_params_validation():
    with pytest.raises(ParameterError):
        synth.CaptureParams(rotation=13.0)
    with pytest.raises(ParameterError):
        synth.CaptureParams(scribble_area_fraction=0.2)
    with pytest.raises(ParameterError):
        synth.CaptureParams(resolution=(500, 900))


def test_render_is_deterministic_and_marked(sheets):
    p = synth.CaptureParams(rotation=3.0, noise_sigma=0.02, resolution=(800, 1100), seed=5)
    c1, t1 = synth.render_capture(sheets[1], p)
    c2, _ = synth.render_capture(sheets[1], p)
    assert np.array_equal(c1.samples, c2.samples)
    assert c1.samples.dtype == np.uint8 and c1.samples.shape == (1100, 800)
    assert t1.rotation == 3.0 and t1.marks.any()
    assert c1.samples[t1.marks].mean() < c1.samples[~t1.marks].mean() - 50


def test_scribble_area_fraction(sheets):
    p = synth.CaptureParams(scribble_area_fraction=0.05, resolution=(1200, 1650), seed=9)
    _, truth = synth.render_capture(sheets[2], p)
    box_px = synth.BOX_WIDTH_MM * synth.BOX_HEIGHT_MM * truth.px_per_mm**2
    assert truth.scribble.sum() / box_px == pytest.approx(0.05, rel=0.15)


def test_manifest_round_trip_and_regeneration(tmp_path):
    entries = synth.plan_dataset(2, 2, seed=3, resolution=(700, 960))
    assert [e.sheet_id for e in entries] == ["sheet-000"] * 2 + ["sheet-001"] * 2
    for e in entries:
        back = synth.ManifestEntry.from_line(e.to_line())
        assert back == e
    manifest = synth.write_dataset(entries, tmp_path / "a")
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.png"))
    assert [str(f) for f in files] == [
        "sheet-000/s00.png", "sheet-000/s01.png", "sheet-001/s00.png", "sheet-001/s01.png"
    ]
    synth.regenerate(manifest, tmp_path / "b")
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_plan_dataset_counts():
    entries = synth.plan_dataset(50, 10)
    assert len(entries) == 500 and len({e.sheet_seed for e in entries}) == 50
    assert all(abs(e.params.rotation) <= 12 for e in entries)
    with pytest.raises(ParameterError):
        synth.plan_dataset(0, 3)
