"""Order-insensitive line matching between a reference and a hypothesis page."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..transcription.markdown import TranscriptionDoc
from .metrics import cer, levenshtein_ratio, wer


@dataclass(frozen=True)
class LineMatch:
    ref_index: int
    hyp_index: int
    ratio: float
    wer: float
    cer: float


@dataclass
class LineAlignment:
    matches: list[LineMatch] = field(default_factory=list)
    precision: float = 1.0
    recall: float = 1.0

    @property
    def mean_ratio(self) -> float:
        if not self.matches:
            return 0.0
        return sum(m.ratio for m in self.matches) / len(self.matches)


def prf_counts(matched: int, n_hyp: int, n_ref: int) -> tuple[float, float]:
    """Precision and recall; an empty side counts as perfect only if both are empty."""
    if n_hyp == 0 and n_ref == 0:
        return 1.0, 1.0
    precision = matched / n_hyp if n_hyp else 0.0
    recall = matched / n_ref if n_ref else 0.0
    return precision, recall


def _greedy(ref, hyp, ratios, threshold):
    order = sorted(
        ((ratios[i][j], i, j) for i in range(len(ref)) for j in range(len(hyp)) if ratios[i][j] >= threshold),
        # Tie-break on content, not position, so hypothesis order cannot matter.
        key=lambda t: (-t[0], ref[t[1]], hyp[t[2]], t[1], t[2]),
    )
    used_r, used_h, pairs = set(), set(), []
    for _, i, j in order:
        if i in used_r or j in used_h:
            continue
        used_r.add(i)
        used_h.add(j)
        pairs.append((i, j))
    return pairs


def _optimal(ref, hyp, ratios, threshold):
    if not ref or not hyp:
        return []
    r = np.array(ratios)
    eligible = r >= threshold
    # Maximise the match count first, total similarity second.
    weight = np.where(eligible, len(ref) + len(hyp) + 1 + r, 0.0)
    rows, cols = linear_sum_assignment(weight, maximize=True)
    return [(int(i), int(j)) for i, j in zip(rows, cols) if eligible[i, j]]


def align_lines(
    reference: TranscriptionDoc,
    hypothesis: TranscriptionDoc,
    threshold: float = 0.8,
    optimal: bool = False,
) -> LineAlignment:
    """Pair lines whose Levenshtein ratio reaches ``threshold``, each used once.

    Greedy best-first by default; ``optimal=True`` solves the assignment
    problem instead (slower, used as a cross-check).
    """
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    ref, hyp = reference.lines(), hypothesis.lines()
    ratios = [[levenshtein_ratio(a, b) for b in hyp] for a in ref]
    pairs = (_optimal if optimal else _greedy)(ref, hyp, ratios, threshold)
    matches = [
        LineMatch(i, j, ratios[i][j], wer(ref[i], hyp[j]), cer(ref[i], hyp[j]))
        for i, j in sorted(pairs)
    ]
    precision, recall = prf_counts(len(matches), len(hyp), len(ref))
    return LineAlignment(matches, precision, recall)
