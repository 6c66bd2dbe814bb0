import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from showprog.errors import InvalidSeparatorError, MissingDataError
from showprog.imaging import PageImage, TextMask, binarize_text_mask
from showprog.segmentation import (
    PeakParams,
    ProjectionProfile,
    ReferenceWidthTable,
    SegmentationReport,
    SeparatorSet,
    compute_reference_widths,
    detect_separators,
    filter_separators,
    gaussian_smooth,
    normalize_pages,
    reorder_born_digital,
    segment_document,
    select_candidates,
    split_page,
    vertical_projection,
)
from synth import spread

REFS_877 = ReferenceWidthTable({("born-digital", 2007): 877}, 0.93)


def profile_from(values, sigma=4.0):
    values = np.asarray(values, dtype=float)
    return ProjectionProfile(values, gaussian_smooth(values, sigma), sigma)


def page(width, height=10, doc="d", index=0):
    return PageImage(doc, index, np.full((height, width), 255, dtype=np.uint8))


# -- projection ---------------------------------------------------------------


def test_projection_blank_mask():
    prof = vertical_projection(TextMask(np.zeros((8, 20), dtype=bool)), sigma=1.0)
    assert len(prof.values) == len(prof.smoothed) == 20
    assert not prof.values.any() and not prof.smoothed.any()


def test_projection_single_column():
    bits = np.zeros((7, 20), dtype=bool)
    bits[:, 10] = True
    prof = vertical_projection(TextMask(bits), sigma=1.0)
    assert prof.values[10] == 7
    assert prof.values.sum() == 7


def test_projection_matches_double_loop_oracle():
    rng = np.random.default_rng(11)
    bits = rng.random((30, 45)) < 0.1
    prof = vertical_projection(TextMask(bits), sigma=2.0)
    expected = []
    for x in range(45):
        total = 0
        for y in range(30):
            if bits[y][x]:
                total += 1
        expected.append(total)
    assert prof.values.tolist() == expected


def test_smoothing_preserves_mass_and_constants():
    flat = gaussian_smooth(np.full(50, 3.0), 2.5)
    assert np.allclose(flat, 3.0)
    spike = np.zeros(101)
    spike[50] = 1.0
    assert gaussian_smooth(spike, 3.0).sum() == pytest.approx(1.0)


# -- separators ---------------------------------------------------------------


def test_uniform_profile_has_no_separator():
    assert detect_separators(profile_from(np.full(300, 5.0))).xs == ()


def test_two_column_profile():
    values = np.zeros(1000)
    values[:400] = 50
    values[600:] = 50
    seps = detect_separators(profile_from(values, sigma=5.0), PeakParams(distance=100))
    assert len(seps) == 1
    assert 400 <= seps.xs[0] < 600


def test_three_bands_two_gaps():
    values = np.zeros(900)
    for a, b in [(0, 250), (325, 575), (650, 900)]:
        values[a:b] = 30
    seps = detect_separators(profile_from(values, sigma=4.0), PeakParams(distance=100))
    assert len(seps) == 2
    assert 250 <= seps.xs[0] < 325
    assert 575 <= seps.xs[1] < 650


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.integers(5, 60), min_size=3, max_size=9),
    st.lists(st.integers(0, 40), min_size=3, max_size=9),
)
def test_detection_is_mirror_symmetric(bands, heights):
    values = np.concatenate(
        [np.full(b, float(h if i % 2 == 0 else 0)) for i, (b, h) in enumerate(zip(bands, heights))]
    )
    params = PeakParams(distance=1)
    fwd = detect_separators(profile_from(values, 2.0), params).xs
    rev = detect_separators(profile_from(values[::-1], 2.0), params).xs
    width = len(values)
    assert len(fwd) == len(rev)
    # Split positions fall between columns; odd-width gaps round by at most one pixel.
    for a, b in zip(fwd, sorted(width - x for x in rev)):
        assert abs(a - b) <= 1


# -- splitting ----------------------------------------------------------------


def test_split_identity_and_symmetric():
    p = page(1000)
    assert split_page(p, ()) == [p]
    halves = split_page(p, (500,))
    assert [h.width_px for h in halves] == [500, 500]
    assert [h.origin for h in halves] == [(0, 0), (0, 1)]


def test_split_three_way():
    parts = split_page(page(1000, height=7), (300, 700))
    assert [p.width_px for p in parts] == [300, 400, 300]
    assert all(p.height_px == 7 for p in parts)


@pytest.mark.parametrize("xs", [(0,), (1000,), (700, 300), (5, 5)])
def test_split_rejects_bad_separators(xs):
    with pytest.raises(InvalidSeparatorError):
        split_page(page(1000), xs)


@given(st.integers(2, 400), st.data())
def test_split_conserves_width(width, data):
    xs = sorted(data.draw(st.sets(st.integers(1, width - 1), max_size=6)))
    parts = split_page(page(width, height=3), xs)
    assert len(parts) == len(xs) + 1
    assert sum(p.width_px for p in parts) == width


# -- reference widths ---------------------------------------------------------


def test_reference_width_medians():
    table = compute_reference_widths(
        {2007: [877, 877, 877], 2014: [768], 1990: [700, 710, 1060, 1065, 1068]}
    )
    assert table.median_for(2007) == 877
    assert table.median_for(2014) == 768
    assert table.median_for(1990) == 1060
    assert compute_reference_widths({1: [10, 20, 30, 40]}).median_for(1) == 20


def test_reference_width_missing_data():
    with pytest.raises(MissingDataError):
        compute_reference_widths({2007: []})
    with pytest.raises(MissingDataError):
        REFS_877.median_for(1999)


def test_reference_table_round_trip(tmp_path):
    table = ReferenceWidthTable.avignon()
    assert table.median_for(2007) == 877
    assert table.median_for(1971) == 917
    assert table.tolerance == 0.93
    path = tmp_path / "refs.csv"
    table.dump(path)
    again = ReferenceWidthTable.load(path)
    assert again == table
    assert again.dumps() == path.read_text()


def test_select_candidates_rule():
    assert not select_candidates([877] * 4, REFS_877, 2007)
    assert select_candidates([877, 400], REFS_877, 2007)
    assert select_candidates([1800], REFS_877, 2007)
    assert not select_candidates([page(877), page(1631)], REFS_877, 2007)
    with pytest.raises(MissingDataError):
        select_candidates([877], REFS_877, 2010)


def test_filter_separators():
    keep = filter_separators(SeparatorSet((877,)), 1754, REFS_877, 2007)
    assert keep.xs == (877,)
    # 815 px is just under 0.93 * 877 = 815.61, so this one goes.
    assert filter_separators(SeparatorSet((815,)), 1754, REFS_877, 2007).xs == ()
    assert filter_separators(SeparatorSet((100,)), 1754, REFS_877, 2007).xs == ()
    assert filter_separators(SeparatorSet(()), 1754, REFS_877, 2007).xs == ()
    gutters = SeparatorSet((440, 877, 1315))
    assert filter_separators(gutters, 1754, REFS_877, 2007).xs == (877,)


@given(st.integers(900, 4000), st.data())
def test_filter_never_adds_and_keeps_wide_slices(width, data):
    xs = tuple(sorted(data.draw(st.sets(st.integers(1, width - 1), max_size=8))))
    kept = filter_separators(SeparatorSet(xs), width, REFS_877, 2007).xs
    assert len(kept) <= len(xs)
    assert set(kept) <= set(xs)
    edges = [0, *kept, width]
    if kept:
        assert all(b - a >= REFS_877.threshold(2007) for a, b in zip(edges, edges[1:]))


# -- normalisation ------------------------------------------------------------

REFS_SMALL = ReferenceWidthTable({("synthetic", 2000): 300}, 0.93)


def test_normalize_splits_square_page_with_empty_middle():
    px = np.full((700, 700), 255, dtype=np.uint8)
    px[50:650, 40:320] = 0
    px[50:650, 380:660] = 0
    square = PageImage("d", 0, px)
    out = normalize_pages([square], [binarize_text_mask(square)], REFS_SMALL, 2000)
    assert [p.width_px for p in out] == [350, 350]


def test_normalize_keeps_text_across_middle():
    px = np.full((700, 700), 255, dtype=np.uint8)
    px[50:650, 40:660] = 0
    square = PageImage("d", 0, px)
    out = normalize_pages([square], [binarize_text_mask(square)], REFS_SMALL, 2000)
    assert out == [square]


def test_normalize_width_guard():
    narrow = page(500, height=500)
    out = normalize_pages([narrow], [binarize_text_mask(narrow)], REFS_SMALL, 2000)
    assert out == [narrow]


# -- reordering ---------------------------------------------------------------


def test_reorder_flyer():
    assert reorder_born_digital([1, 2, 3, 4, 5, 6]) == [6, 2, 1, 3, 4, 5]
    assert reorder_born_digital(["a", "b", "c"]) == ["c", "b", "a"]


def test_reorder_short_passthrough(caplog):
    with caplog.at_level(logging.WARNING):
        assert reorder_born_digital(["a", "b"]) == ["a", "b"]
    assert "reorder skipped" in caplog.text


@given(st.lists(st.integers(), min_size=0, max_size=12))
def test_reorder_is_permutation(items):
    assert sorted(reorder_born_digital(items)) == sorted(items)


def test_reorder_flyer_fixture():
    # Front of a 3-panel flyer holds (inside-left, back, cover); the reverse
    # holds the three inside panels. Expected reading order is cover first.
    front, _ = spread("ttt", 300, 400, seed=1, doc_id="flyer", page_index=0)
    back, _ = spread("ttt", 300, 400, seed=2, doc_id="flyer", page_index=1)
    refs = ReferenceWidthTable({("born-digital", 2016): 300})
    out, record = segment_document([front, back], refs, 2016, born_digital=True)
    assert record.subpages_out == 6
    assert [p.origin for p in out] == [(1, 2), (0, 1), (0, 0), (0, 2), (1, 0), (1, 1)]
    assert [p.page_index for p in out] == list(range(6))


# -- whole document -----------------------------------------------------------


def test_segment_conforming_document():
    doc = [spread("tt", 300, 400, seed=s, page_index=s)[0] for s in range(4)]
    out, record = segment_document(doc, REFS_SMALL, 2000)
    assert len(out) == 8
    assert record.phase == "pre-only"
    assert all(abs(p.width_px - 300) < 40 for p in out)
    assert sum(p.width_px for p in out) == sum(p.width_px for p in doc)


def test_segment_fused_page_triggers_post():
    doc = [spread("tt", 300, 400, seed=1)[0], spread("tb", 300, 400, seed=2, page_index=1)[0]]
    out, record = segment_document(doc, REFS_SMALL, 2000)
    assert record.phase == "post-applied"
    assert len(out) == 4


def test_segment_single_page_identity():
    single = spread("t", 300, 400, seed=5)[0]
    out, record = segment_document([single], REFS_SMALL, 2000)
    assert len(out) == 1
    assert np.array_equal(out[0].pixels, single.pixels)
    assert record.subpages_out == record.pages_in == 1


def test_segment_is_fixpoint_on_own_output():
    doc = [spread("22", 300, 400, seed=3)[0], spread("tb", 300, 400, seed=4, page_index=1)[0]]
    out, _ = segment_document(doc, REFS_SMALL, 2000)
    again, record = segment_document(out, REFS_SMALL, 2000)
    assert [p.width_px for p in again] == [p.width_px for p in out]
    assert record.subpages_out == len(out)


def test_segmentation_report_files():
    doc = [spread("tt", 300, 400, seed=1, doc_id="a")[0]]
    _, record = segment_document(doc, REFS_SMALL, 2000)
    report = SegmentationReport([record])
    text = report.to_jsonl()
    assert text.count("\n") == 1 and '"doc_id": "a"' in text
    summary = report.summary_markdown()
    assert "| All |" in summary and "| 2 |" in summary
