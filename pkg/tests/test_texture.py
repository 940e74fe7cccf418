from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from papertex import texture
from papertex.errors import IncomparableError, InputError, ParameterError
from papertex.prep import PreparedImage
from papertex.texture import Fingerprint, GaborParams


def direct_convolution(image: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Zero-padded full convolution by explicit sums, cropped at (K - 1) // 2."""
    h, w = image.shape
    kh, kw = kernel.shape
    cy, cx = (kh - 1) // 2, (kw - 1) // 2
    out = np.zeros((h, w), dtype=np.complex128)
    for i in range(h):
        for j in range(w):
            acc = 0j
            for a in range(kh):
                m = i + cy - a
                if not 0 <= m < h:
                    continue
                for b in range(kw):
                    n = j + cx - b
                    if 0 <= n < w:
                        acc += image[m, n] * kernel[a, b]
            out[i, j] = acc
    return out


def test_convolution_matches_direct_sum(rng):
    for _ in range(3):
        img = rng.random((24, 24))
        ker = rng.standard_normal((7, 7)) + 1j * rng.standard_normal((7, 7))
        fast = texture.convolve(img, ker)
        assert np.max(np.abs(fast - direct_convolution(img, ker))) < 1e-9


def test_convolution_even_kernel_matches_direct_sum(rng):
    img = rng.random((20, 20))
    ker = rng.standard_normal((6, 6)) + 0j
    assert np.allclose(texture.convolve(img, ker), direct_convolution(img, ker), atol=1e-10)


def test_impulse_kernel_is_identity(rng):
    img = rng.random((32, 32))
    ker = np.zeros((9, 9), dtype=np.complex128)
    ker[4, 4] = 1.0
    out = texture.convolve(img, ker)
    assert np.allclose(out.real, img, atol=1e-12) and np.allclose(out.imag, 0.0, atol=1e-12)


def test_constant_image_interior_response_is_kernel_sum():
    ker = texture.gabor_kernel(GaborParams(kernel_size=21))
    out = texture.convolve(np.full((64, 64), 0.7), ker)
    assert out[32, 32] == pytest.approx(0.7 * ker.sum(), abs=1e-10)


def test_convolution_is_linear(rng):
    a, b = rng.random((40, 40)), rng.random((40, 40))
    ker = texture.gabor_kernel(GaborParams(kernel_size=15))
    lhs = texture.convolve(2.5 * a - 0.5 * b, ker)
    rhs = 2.5 * texture.convolve(a, ker) - 0.5 * texture.convolve(b, ker)
    assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_default_frequency_and_angle():
    p = GaborParams()
    assert p.frequency == pytest.approx(0.0625)
    assert p.theta == pytest.approx(6 * math.pi / 8)


@pytest.mark.parametrize("envelope", ["scaled", "fixed"])
def test_kernel_centre_value(envelope):
    p = GaborParams(kernel_size=101, envelope=envelope)
    k = texture.gabor_kernel(p)
    expected = p.frequency**2 / (math.pi * p.eta * p.gamma)
    assert k[50, 50] == pytest.approx(expected, rel=1e-15)
    assert k[50, 50].imag == 0.0


@pytest.mark.parametrize("envelope", ["scaled", "fixed"])
def test_kernel_symmetric_in_y_for_zero_angle(envelope):
    k = texture.gabor_kernel(GaborParams(orientation=1, kernel_size=31, envelope=envelope))
    assert np.allclose(k, k[::-1, :], atol=1e-15)


def test_scaled_envelope_has_near_unit_dc_gain():
    k = texture.gabor_kernel(GaborParams(scale=1, kernel_size=100))
    envelope = np.abs(k)
    assert envelope.sum() == pytest.approx(1.0, rel=1e-3)


def test_invalid_params_rejected():
    for kwargs in ({"sigma": 0}, {"eta": -1}, {"scale": 0}, {"orientation": 9}, {"kernel_size": 0}):
        with pytest.raises(ParameterError):
            GaborParams(**kwargs)


def test_downsample_index_bookkeeping():
    field = (640 * np.arange(640)[:, None] + np.arange(640)[None, :]).astype(np.complex128)
    out = texture.downsample_field(field)
    j, k = np.mgrid[0:32, 0:32]
    assert out.shape == (32, 32)
    assert np.array_equal(out.real, 640 * (20 * j + 19) + (20 * k + 19))


def test_downsample_mask_samples_single_pixels(rng):
    mask = np.ones((640, 640), dtype=bool)
    mask[19, 19] = False
    out = texture.downsample_mask(mask)
    assert not out[0, 0] and out.sum() == 1023
    rand = rng.random((640, 640)) < 0.5
    oracle = np.array([[rand[20 * j + 19, 20 * k + 19] for k in range(32)] for j in range(32)])
    assert np.array_equal(texture.downsample_mask(rand), oracle)


def test_downsample_rejects_wrong_size():
    with pytest.raises(InputError):
        texture.downsample_field(np.zeros((64, 64)))


@pytest.mark.parametrize(
    "value,bits", [(3 + 2j, [1, 1]), (-1 + 5j, [0, 1]), (-2 - 2j, [0, 0]), (4 - 1j, [1, 0]), (0j, [1, 1])]
)
def test_quadrant_codes(value, bits):
    assert list(texture.quadrant_bits(np.array([value]))) == bits


@settings(max_examples=50, deadline=None)
@given(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False))
def test_gray_adjacency(z):
    if z.real == 0 or z.imag == 0:
        return
    base = texture.quadrant_bits(np.array([z]))
    for neighbour in (complex(-z.real, z.imag), complex(z.real, -z.imag)):
        assert int(np.sum(base != texture.quadrant_bits(np.array([neighbour])))) == 1


def test_encoding_is_scale_invariant(rng):
    field = rng.standard_normal((32, 32)) + 1j * rng.standard_normal((32, 32))
    mask = rng.random((32, 32)) < 0.9
    a = texture.encode_fingerprint(field, mask)
    b = texture.encode_fingerprint(3.7 * field, mask)
    assert a == b
    assert np.array_equal(a.mask[0::2], a.mask[1::2])
    i = 32 * 5 + 7
    assert a.bits[2 * i] == (field[5, 7].real >= 0) and a.bits[2 * i + 1] == (field[5, 7].imag >= 0)


def bits_of(s: str) -> np.ndarray:
    return np.array([int(c) for c in s], dtype=np.uint8)


def test_masked_hamming_hand_example():
    hd = texture.masked_hamming(
        bits_of("10110010"), bits_of("10011010"), bits_of("11111111"), bits_of("11110110")
    )
    assert hd == pytest.approx(1 / 6)


def test_masked_hamming_identity_and_complement(rng):
    b = rng.integers(0, 2, 2048).astype(np.uint8)
    full = np.ones(2048, dtype=np.uint8)
    assert texture.masked_hamming(b, b, full, full) == 0.0
    assert texture.masked_hamming(b, 1 - b, full, full) == 1.0


def test_masked_hamming_empty_joint_mask():
    z = np.zeros(8, dtype=np.uint8)
    with pytest.raises(IncomparableError):
        texture.masked_hamming(z, z, z, np.ones(8, dtype=np.uint8))


fingerprints = st.builds(
    lambda b, m: Fingerprint(b, m),
    arrays(np.uint8, 2048, elements=st.integers(0, 1)),
    arrays(np.uint8, 2048, elements=st.integers(0, 1)),
)


@settings(max_examples=40, deadline=None)
@given(fingerprints, fingerprints)
def test_hamming_symmetric_and_bounded(f1, f2):
    if not (f1.mask & f2.mask).any():
        return
    hd = texture.fractional_hamming(f1, f2)
    assert 0.0 <= hd <= 1.0
    assert hd == texture.fractional_hamming(f2, f1)
    assert texture.fractional_hamming(f1, f1) == 0.0 or not f1.mask.any()


@settings(max_examples=40, deadline=None)
@given(fingerprints)
def test_ptfp_round_trip(fp):
    fp.meta["note"] = "x y"
    back = texture.from_ptfp(texture.to_ptfp(fp))
    assert back == fp and back.meta["note"] == "x y"


def test_ptfp_layout_is_msb_first():
    bits = np.zeros(2048, dtype=np.uint8)
    bits[0] = 1
    bits[15] = 1
    text = texture.to_ptfp(Fingerprint(bits, np.ones(2048, dtype=np.uint8), GaborParams()))
    lines = text.splitlines()
    assert lines[0] == "PTFP1"
    assert lines[1] == "bits=8001" + "0" * 508
    assert lines[2] == "mask=" + "f" * 512
    assert all(ln.startswith("meta.") for ln in lines[3:])
    assert texture.from_ptfp(text).params == GaborParams()


@pytest.mark.parametrize(
    "text",
    [
        "PTFP2\nbits=00\nmask=00\n",
        "PTFP1\nbits=" + "0" * 510 + "\nmask=" + "0" * 512 + "\n",
        "PTFP1\nbits=" + "zz" * 256 + "\nmask=" + "0" * 512 + "\n",
        "PTFP1\nbits=" + "0" * 512 + "\nmask=" + "0" * 512 + "\ngarbage\n",
    ],
)
def test_ptfp_rejects_malformed(text):
    with pytest.raises(InputError):
        texture.from_ptfp(text)


def test_fingerprint_validation():
    with pytest.raises(InputError):
        Fingerprint(np.zeros(100), np.zeros(100))
    with pytest.raises(InputError):
        Fingerprint(np.full(2048, 2), np.ones(2048))


def test_fingerprint_from_prepared_uses_mask(rng):
    samples = rng.random((640, 640))
    mask = np.ones((640, 640), dtype=bool)
    mask[:320] = False
    fp = texture.fingerprint_from_prepared(PreparedImage(samples, mask, 0.0, (0.0, 0.0)))
    assert fp.mask[: 2 * 32 * 16].sum() == 0 and fp.mask[2 * 32 * 16 :].all()


def test_extraction_deterministic_and_discriminative(small_captures):
    fps = {k: texture.extract_fingerprint(cap) for k, (cap, _) in small_captures.items()}
    assert texture.extract_fingerprint(small_captures[(1, 0)][0]) == fps[(1, 0)]
    for seed in (1, 2, 3):
        assert texture.fractional_hamming(fps[(seed, 0)], fps[(seed, 1)]) < 0.25
    for a, b in ((1, 2), (1, 3), (2, 3)):
        assert 0.42 <= texture.fractional_hamming(fps[(a, 0)], fps[(b, 1)]) <= 0.58
