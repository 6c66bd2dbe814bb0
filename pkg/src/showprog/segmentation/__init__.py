"""Split programme pages into subpages using vertical projection profiles."""

from .pipeline import (
    SegmentationParams,
    SeparatorSet,
    detect_separators,
    filter_separators,
    normalize_pages,
    reorder_born_digital,
    segment_document,
    split_mask,
    split_page,
)
from .profile import PeakParams, ProjectionProfile, find_gap_peaks, gaussian_smooth, vertical_projection
from .report import DocumentRecord, SegmentationReport
from .widths import (
    DEFAULT_TOLERANCE,
    ReferenceWidthTable,
    compute_reference_widths,
    lower_median,
    select_candidates,
)

__all__ = [
    "DEFAULT_TOLERANCE",
    "DocumentRecord",
    "PeakParams",
    "ProjectionProfile",
    "ReferenceWidthTable",
    "SegmentationParams",
    "SegmentationReport",
    "SeparatorSet",
    "compute_reference_widths",
    "detect_separators",
    "filter_separators",
    "find_gap_peaks",
    "gaussian_smooth",
    "lower_median",
    "normalize_pages",
    "reorder_born_digital",
    "segment_document",
    "select_candidates",
    "split_mask",
    "split_page",
    "vertical_projection",
]
