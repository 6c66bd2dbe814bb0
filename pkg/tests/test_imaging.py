import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from showprog.errors import InvalidInputError, ScalingError
from showprog.imaging import (
    PageImage,
    binarize_text_mask,
    encode_png,
    fit_under_byte_limit,
    iter_page_files,
    load_mask,
    load_page_image,
    save_mask,
    save_page_image,
    to_greyscale,
)


def luma_oracle(r, g, b):
    # Independent per-pixel BT.601 reference in plain floats.
    return int(0.299 * r + 0.587 * g + 0.114 * b + 0.5 + 1e-9)


def test_white_rgb_becomes_white_grey():
    rgb = np.full((4, 5, 3), 255, dtype=np.uint8)
    grey = to_greyscale(rgb)
    assert grey.pixels.shape == (4, 5)
    assert (grey.pixels == 255).all()


def test_grey_input_is_identity():
    page = PageImage("d", 0, np.arange(12, dtype=np.uint8).reshape(3, 4))
    out = to_greyscale(page)
    assert np.array_equal(out.pixels, page.pixels)
    assert np.array_equal(to_greyscale(page.pixels).pixels, page.pixels)


def test_pure_red_matches_oracle():
    rgb = np.zeros((1, 1, 3), dtype=np.uint8)
    rgb[0, 0] = (255, 0, 0)
    assert to_greyscale(rgb).pixels[0, 0] == luma_oracle(255, 0, 0) == 76


def test_random_colour_pixels_match_oracle():
    rng = np.random.default_rng(3)
    rgb = rng.integers(0, 256, size=(20, 30, 3), dtype=np.uint8)
    grey = to_greyscale(rgb).pixels
    for y in range(20):
        for x in range(30):
            r, g, b = (int(v) for v in rgb[y, x])
            assert grey[y, x] == luma_oracle(r, g, b)


def test_pil_rgba_input():
    img = Image.new("RGBA", (3, 2), (0, 0, 255, 128))
    assert to_greyscale(img).pixels[0, 0] == luma_oracle(0, 0, 255)


def test_empty_image_rejected():
    with pytest.raises(InvalidInputError):
        to_greyscale(np.zeros((0, 0, 3), dtype=np.uint8))


@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_greyscale_idempotent(h, w, seed):
    rgb = np.random.default_rng(seed).integers(0, 256, size=(h, w, 3), dtype=np.uint8)
    once = to_greyscale(rgb)
    assert np.array_equal(to_greyscale(once).pixels, once.pixels)


def test_fit_noop_when_small():
    page = PageImage("d", 0, np.full((32, 32), 200, dtype=np.uint8))
    assert fit_under_byte_limit(page, 5_000_000) is page


def test_fit_large_noise_page():
    rng = np.random.default_rng(0)
    # ~50 MB of incompressible grey levels
    px = rng.integers(0, 256, size=(5000, 10000), dtype=np.uint8)
    page = PageImage("d", 0, px)
    assert len(encode_png(page)) > 45_000_000
    out = fit_under_byte_limit(page, 5_000_000)
    assert len(encode_png(out)) <= 5_000_000
    assert out.width_px / out.height_px == pytest.approx(2.0, rel=1e-3)
    assert fit_under_byte_limit(out, 5_000_000) is out


def test_fit_impossible_limit():
    page = PageImage("d", 0, np.zeros((10, 10), dtype=np.uint8))
    with pytest.raises(ScalingError):
        fit_under_byte_limit(page, 1)


def test_mask_blank_and_black():
    white = PageImage("d", 0, np.full((10, 12), 255, dtype=np.uint8))
    black = PageImage("d", 0, np.zeros((10, 12), dtype=np.uint8))
    assert not binarize_text_mask(white).bits.any()
    assert binarize_text_mask(black).bits.all()


def test_mask_two_columns():
    px = np.full((50, 100), 255, dtype=np.uint8)
    px[5:45, 10:30] = 0
    px[5:45, 60:85] = 0
    mask = binarize_text_mask(PageImage("d", 0, px), radius=0)
    cols = mask.bits.sum(axis=0)
    nonzero = set(np.flatnonzero(cols))
    assert nonzero == set(range(10, 30)) | set(range(60, 85))


@settings(max_examples=40, deadline=None)
@given(
    st.lists(
        st.tuples(st.integers(0, 39), st.integers(0, 39), st.integers(1, 10), st.integers(1, 10)),
        min_size=1,
        max_size=5,
    ),
    st.integers(0, 3),
)
def test_mask_covers_ink_within_radius(rects, radius):
    px = np.full((40, 40), 255, dtype=np.uint8)
    for y, x, h, w in rects:
        px[y : y + h, x : x + w] = 0
    mask = binarize_text_mask(PageImage("d", 0, px), radius=radius).bits
    ink = px == 0
    assert mask.shape == px.shape
    assert mask[ink].all()
    ys, xs = np.nonzero(ink)
    for y, x in zip(*np.nonzero(mask)):
        cheb = np.maximum(np.abs(ys - y), np.abs(xs - x)).min()
        assert cheb <= radius


def test_page_and_mask_files_round_trip(tmp_path):
    px = np.full((20, 30), 255, dtype=np.uint8)
    px[2:8, 3:9] = 0
    page = PageImage("prog-1", 2, px)
    save_page_image(page, tmp_path / "prog-1" / "2.png")
    (tmp_path / "prog-1" / "notes.txt").write_text("ignored")
    [(doc, idx, path)] = list(iter_page_files(tmp_path))
    assert (doc, idx) == ("prog-1", 2)
    loaded = load_page_image(path, doc, idx)
    assert np.array_equal(loaded.pixels, px)

    mask = binarize_text_mask(page, radius=0)
    save_mask(mask, tmp_path / "masks" / "2.png")
    assert np.array_equal(load_mask(tmp_path / "masks" / "2.png").bits, mask.bits)
