"""Two-phase page segmentation: split on projection gaps, then repair by width."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import InvalidInputError, InvalidSeparatorError
from ..imaging import PageImage, TextMask, binarize_text_mask
from .profile import PeakParams, ProjectionProfile, find_gap_peaks, vertical_projection
from .report import DocumentRecord
from .widths import ReferenceWidthTable, select_candidates

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SeparatorSet:
    xs: tuple[int, ...]
    source_page: tuple[str, int] = ("", 0)
    profile: ProjectionProfile | None = None

    def __iter__(self):
        return iter(self.xs)

    def __len__(self) -> int:
        return len(self.xs)

    def validate(self, width: int) -> None:
        prev = 0
        for x in self.xs:
            if not prev < x < width:
                raise InvalidSeparatorError(
                    f"separator {x} out of order or outside (0, {width}) in {self.xs}"
                )
            prev = x


@dataclass(frozen=True)
class SegmentationParams:
    peaks: PeakParams = field(default_factory=PeakParams)
    mask_radius: int = 1
    band_fraction: float = 0.04
    band_density: float = 0.005
    reorder_born_digital: bool = True


def detect_separators(
    profile: ProjectionProfile,
    params: PeakParams = PeakParams(),
    reference_width: float | None = None,
    source_page: tuple[str, int] = ("", 0),
) -> SeparatorSet:
    xs = find_gap_peaks(
        profile.smoothed,
        distance=params.distance_for(reference_width),
        prominence_fraction=params.prominence_fraction,
    )
    width = len(profile)
    xs = [x for x in xs if 0 < x < width]
    return SeparatorSet(tuple(xs), source_page, profile)


def _slice_bounds(xs: Sequence[int], width: int) -> list[tuple[int, int]]:
    edges = [0, *xs, width]
    return list(zip(edges[:-1], edges[1:]))


def split_page(image: PageImage, seps: SeparatorSet | Sequence[int]) -> list[PageImage]:
    """Cut ``image`` at each separator, left to right.

    Children keep the parent's ``page_index``; their ``origin`` gains the slice
    number so the source column range stays traceable.
    """
    if not isinstance(seps, SeparatorSet):
        seps = SeparatorSet(tuple(seps))
    seps.validate(image.width_px)
    if not seps.xs:
        return [image]
    base = image.origin or (image.page_index,)
    return [
        image.with_pixels(np.ascontiguousarray(image.pixels[:, a:b]), origin=base + (k,))
        for k, (a, b) in enumerate(_slice_bounds(seps.xs, image.width_px))
    ]


def split_mask(mask: TextMask, xs: Sequence[int]) -> list[TextMask]:
    return [mask.crop_columns(a, b) for a, b in _slice_bounds(xs, mask.width_px)]


def filter_separators(
    seps: SeparatorSet, page_width: int, refs: ReferenceWidthTable, year: int
) -> SeparatorSet:
    """Drop separators that would leave a subpage narrower than the threshold.

    Scans left to right and keeps a separator only when the slice it closes and
    the remainder of the page are both at least ``tolerance x median`` wide.
    """
    t = refs.threshold(year)
    kept: list[int] = []
    last = 0
    for x in seps.xs:
        if x - last >= t and page_width - x >= t:
            kept.append(x)
            last = x
    return SeparatorSet(tuple(kept), seps.source_page, seps.profile)


def _band_is_empty(mask: TextMask, band_fraction: float, density: float) -> bool:
    w = mask.width_px
    band = max(1, int(round(w * band_fraction)))
    start = max(0, (w - band) // 2)
    region = mask.bits[:, start : start + band]
    return region.size == 0 or float(region.mean()) < density


def normalize_pages(
    subpages: Sequence[PageImage],
    masks: Sequence[TextMask],
    refs: ReferenceWidthTable,
    year: int,
    band_fraction: float = 0.04,
    band_density: float = 0.005,
) -> list[PageImage]:
    """Halve subpages wider than twice the threshold whose central band is blank.

    Halves are checked again, so a strip of four fused pages ends as four.
    """
    if len(subpages) != len(masks):
        raise InvalidInputError("masks must align with subpages")
    t = refs.threshold(year)
    out: list[PageImage] = []
    stack = list(zip(subpages, masks))[::-1]
    while stack:
        page, mask = stack.pop()
        w = page.width_px
        if w > 2 * t and w >= 2 and _band_is_empty(mask, band_fraction, band_density):
            mid = w // 2
            halves = split_page(page, (mid,))
            stack.extend(reversed(list(zip(halves, split_mask(mask, (mid,))))))
        else:
            out.append(page)
    return out


def reorder_born_digital(subpages: Sequence[PageImage]) -> list:
    """Restore reading order of a folded flyer.

    Swaps the first two subpages, then moves the last one (the cover) to the
    front: ``[1, 2, 3, 4, 5, 6] -> [6, 2, 1, 3, 4, 5]``.
    """
    pages = list(subpages)
    if len(pages) < 3:
        log.warning("reorder skipped: %d subpage(s), need at least 3", len(pages))
        return pages
    pages[0], pages[1] = pages[1], pages[0]
    return [pages[-1], *pages[:-1]]


MaskProvider = Callable[[PageImage], TextMask]


def segment_document(
    doc: Sequence[PageImage],
    refs: ReferenceWidthTable,
    year: int,
    params: SegmentationParams = SegmentationParams(),
    masks: Sequence[TextMask] | MaskProvider | None = None,
    born_digital: bool = False,
) -> tuple[list[PageImage], DocumentRecord]:
    """Run the whole pipeline on one document.

    Phase 1 splits every page on projection gaps. If any resulting width breaks
    the reference rule, phase 2 redoes the split with width filtering and then
    halves fused pages. ``masks`` may be precomputed (aligned with ``doc``) or a
    callable; the Otsu baseline is used otherwise.
    """
    if not doc:
        raise InvalidInputError("cannot segment an empty document")
    median = refs.median_for(year)
    if masks is None:
        page_masks = [binarize_text_mask(p, params.mask_radius) for p in doc]
    elif callable(masks):
        page_masks = [masks(p) for p in doc]
    else:
        page_masks = list(masks)
        if len(page_masks) != len(doc):
            raise InvalidInputError("masks must align with document pages")

    detected = []
    for page, mask in zip(doc, page_masks):
        if (mask.width_px, mask.height_px) != (page.width_px, page.height_px):
            raise InvalidInputError(f"mask size mismatch on page {page.page_index}")
        profile = vertical_projection(mask, params.peaks.sigma_for(page.width_px))
        detected.append(
            detect_separators(profile, params.peaks, median, (page.doc_id, page.page_index))
        )

    phase1 = [sub for page, seps in zip(doc, detected) for sub in split_page(page, seps)]
    needs_post = select_candidates(phase1, refs, year)

    if not needs_post:
        final, used = phase1, detected
    else:
        final, used = [], []
        for page, mask, seps in zip(doc, page_masks, detected):
            kept = filter_separators(seps, page.width_px, refs, year)
            used.append(kept)
            final.extend(
                normalize_pages(
                    split_page(page, kept),
                    split_mask(mask, kept.xs),
                    refs,
                    year,
                    params.band_fraction,
                    params.band_density,
                )
            )

    if born_digital and params.reorder_born_digital:
        final = reorder_born_digital(final)
    final = [p.with_pixels(p.pixels, page_index=i, origin=p.origin or (p.page_index,))
             for i, p in enumerate(final)]

    record = DocumentRecord(
        doc_id=doc[0].doc_id,
        year=year,
        born_digital=born_digital,
        pages_in=len(doc),
        subpages_out=len(final),
        phase="post-applied" if needs_post else "pre-only",
        separators=[list(s.xs) for s in used],
        widths=[p.width_px for p in final],
    )
    log.info("segmented doc=%s pages=%d subpages=%d phase=%s",
             record.doc_id, record.pages_in, record.subpages_out, record.phase)
    return final, record
