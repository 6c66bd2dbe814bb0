"""Synthetic page builders shared by the segmentation tests."""

import numpy as np

from showprog.imaging import PageImage

LINE_H = 6
LINE_PITCH = 14


def subpage(width, height, rng, columns=1, blank=False, margin=0.08, gutter=0.12):
    """White page with ragged black text lines; returns the pixel array."""
    px = np.full((height, width), 255, dtype=np.uint8)
    if blank:
        return px
    left = int(round(width * margin))
    right = width - left
    gut = int(round(width * gutter)) if columns > 1 else 0
    col_w = (right - left - gut * (columns - 1)) // columns
    top = int(round(height * margin))
    for c in range(columns):
        x0 = left + c * (col_w + gut)
        for y in range(top, height - top - LINE_H, LINE_PITCH):
            length = int(col_w * rng.uniform(0.6, 1.0))
            px[y : y + LINE_H, x0 : x0 + length] = 0
    return px


def spread(layout, width, height, seed=0, doc_id="doc", page_index=0):
    """Concatenate subpages side by side.

    ``layout`` is a sequence of specs: ``"t"`` text, ``"2"`` two-column text,
    ``"b"`` blank. Returns the page and the true gap bands ``(start, stop)``
    between neighbouring text subpages.
    """
    rng = np.random.default_rng(seed)
    parts = []
    for spec in layout:
        parts.append(subpage(width, height, rng, columns=2 if spec == "2" else 1, blank=spec == "b"))
    px = np.hstack(parts)
    margin = int(round(width * 0.08))
    gaps = [(k * width - margin, k * width + margin) for k in range(1, len(layout))]
    return PageImage(doc_id, page_index, px), gaps
