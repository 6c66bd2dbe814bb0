"""String metrics: edit distance, Levenshtein ratio, WER, CER and Jaccard."""

from __future__ import annotations

import unicodedata
from typing import Hashable, Sequence


def edit_distance(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Unit-cost Levenshtein distance between two sequences."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def levenshtein_ratio(a: str, b: str) -> float:
    """``1 - distance / max(len(a), len(b))``; two empty strings score 1.0."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - edit_distance(a, b) / longest


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def strip_punctuation(token: str) -> str:
    start, end = 0, len(token)
    while start < end and _is_punct(token[start]):
        start += 1
    while end > start and _is_punct(token[end - 1]):
        end -= 1
    return token[start:end]


def tokenize(text: str, strip_punct: bool = True, casefold: bool = False) -> list[str]:
    """Whitespace tokens, optionally trimmed of edge punctuation and case-folded.

    Tokens that were pure punctuation disappear when ``strip_punct`` is set.
    """
    tokens = text.split()
    if strip_punct:
        tokens = [t for t in (strip_punctuation(t) for t in tokens) if t]
    if casefold:
        tokens = [t.casefold() for t in tokens]
    return tokens


def word_count(text: str) -> int:
    return len(tokenize(text))


def error_rate(reference: Sequence, hypothesis: Sequence) -> float:
    """(S + D + I) / N. An empty reference scores the hypothesis length."""
    if not reference:
        return float(len(hypothesis))
    return edit_distance(reference, hypothesis) / len(reference)


def wer(reference: str, hypothesis: str, strip_punct: bool = False, casefold: bool = False) -> float:
    """Word error rate over whitespace tokens (case and punctuation kept by default)."""
    return error_rate(
        tokenize(reference, strip_punct, casefold), tokenize(hypothesis, strip_punct, casefold)
    )


def cer(reference: str, hypothesis: str) -> float:
    return error_rate(reference, hypothesis)


def ngrams(tokens: Sequence[str], n: int) -> set[tuple[str, ...]]:
    return {tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)}


def jaccard(reference: str, hypothesis: str, n: int = 1, casefold: bool = True) -> float:
    """Jaccard index of word n-gram sets; 1.0 when both sets are empty."""
    if n < 1:
        raise ValueError("n must be positive")
    a = ngrams(tokenize(reference, True, casefold), n)
    b = ngrams(tokenize(hypothesis, True, casefold), n)
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)
