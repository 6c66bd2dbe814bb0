"""Named-entity sets, a baseline extractor, and fuzzy one-to-one matching."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol

from ..errors import InvalidInputError
from .metrics import levenshtein_ratio, strip_punctuation

KINDS = ("person", "place", "org", "other")


def normalize_surface(text: str) -> str:
    """Collapse whitespace, trim edge punctuation and case-fold."""
    words = [strip_punctuation(w) for w in text.split()]
    return " ".join(w for w in words if w).casefold()


@dataclass(frozen=True)
class Entity:
    surface: str
    kind: str = "other"


class EntitySet:
    """A multiset of normalized ``(surface, kind)`` entities."""

    def __init__(self, entities: Iterable[Entity | tuple[str, str] | str] = ()):
        self.counts: Counter[Entity] = Counter()
        for e in entities:
            self.add(e)

    def add(self, entity: Entity | tuple[str, str] | str) -> None:
        if isinstance(entity, str):
            entity = Entity(entity)
        elif not isinstance(entity, Entity):
            entity = Entity(*entity)
        if entity.kind not in KINDS:
            raise InvalidInputError(f"unknown entity kind: {entity.kind!r}")
        surface = normalize_surface(entity.surface)
        if not surface:
            raise InvalidInputError("entity surface is empty after normalization")
        self.counts[Entity(surface, entity.kind)] += 1

    def surfaces(self) -> list[str]:
        return sorted(self.counts.elements(), key=lambda e: (e.surface, e.kind))

    def __len__(self) -> int:
        return sum(self.counts.values())

    def __eq__(self, other) -> bool:
        return isinstance(other, EntitySet) and self.counts == other.counts

    def __repr__(self) -> str:
        return f"EntitySet({[ (e.surface, e.kind) for e in self.surfaces() ]!r})"


@dataclass
class NerResult:
    precision: float
    recall: float
    matches: list[tuple[str, str, float]] = field(default_factory=list)


def ner_prf(reference: EntitySet, hypothesis: EntitySet, fuzzy_threshold: float = 0.85) -> NerResult:
    """Match entities one-to-one: exact surfaces first, then fuzzy by ratio.

    Kinds are ignored for matching; extractors disagree on them far more
    often than on the surfaces themselves.
    """
    if not 0 < fuzzy_threshold <= 1:
        raise ValueError("fuzzy_threshold must lie in (0, 1]")
    ref = Counter(e.surface for e in reference.counts.elements())
    hyp = Counter(e.surface for e in hypothesis.counts.elements())
    matches: list[tuple[str, str, float]] = []
    for surface in sorted(ref.keys() & hyp.keys()):
        n = min(ref[surface], hyp[surface])
        matches.extend([(surface, surface, 1.0)] * n)
        ref[surface] -= n
        hyp[surface] -= n
    rest_r = sorted(ref.elements())
    rest_h = sorted(hyp.elements())
    candidates = sorted(
        (
            (levenshtein_ratio(a, b), a, b, i, j)
            for i, a in enumerate(rest_r)
            for j, b in enumerate(rest_h)
        ),
        key=lambda t: (-t[0], t[1], t[2], t[3], t[4]),
    )
    used_r, used_h = set(), set()
    for ratio, a, b, i, j in candidates:
        if ratio < fuzzy_threshold:
            break
        if i in used_r or j in used_h:
            continue
        used_r.add(i)
        used_h.add(j)
        matches.append((a, b, ratio))
    n_ref, n_hyp = len(reference), len(hypothesis)
    if n_ref == 0 and n_hyp == 0:
        return NerResult(1.0, 1.0, [])
    precision = len(matches) / n_hyp if n_hyp else 0.0
    recall = len(matches) / n_ref if n_ref else 0.0
    return NerResult(precision, recall, sorted(matches))


class EntityExtractor(Protocol):
    def __call__(self, text: str) -> EntitySet: ...


def load_gazetteer(path: Path) -> dict[str, str]:
    """Read ``surface[<TAB>kind]`` lines; ``#`` starts a comment."""
    entries: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        surface, _, kind = line.partition("\t")
        kind = kind.strip() or "other"
        if kind not in KINDS:
            raise InvalidInputError(f"{path}: unknown entity kind {kind!r}")
        entries[surface.strip()] = kind
    return entries


_PARTICLES = frozenset({"de", "du", "des", "la", "le", "les", "von", "van", "di", "da", "del"})


class BaselineExtractor:
    """Capitalized token runs plus gazetteer lookups.

    A run is two or more capitalized words, optionally joined by lowercase
    name particles ("de", "von"...); edge punctuation ends a run. Gazetteer
    surfaces are found case-insensitively on word boundaries, carry their
    listed kind, and take precedence over overlapping runs.
    """

    def __init__(self, gazetteer: dict[str, str] | None = None, min_tokens: int = 2):
        self.gazetteer = gazetteer or {}
        self.min_tokens = min_tokens
        self._gaz = [
            (re.compile(r"(?<!\w)" + re.escape(s) + r"(?!\w)", re.IGNORECASE), k)
            for s, k in sorted(self.gazetteer.items(), key=lambda kv: (-len(kv[0]), kv[0]))
        ]

    def _runs(self, line: str) -> list[tuple[int, int]]:
        spans: list[tuple[int, int]] = []
        run: list[tuple[int, int, bool]] = []

        def flush():
            while run and not run[-1][2]:
                run.pop()
            if sum(1 for r in run if r[2]) >= self.min_tokens:
                spans.append((run[0][0], run[-1][1]))
            run.clear()

        for m in re.finditer(r"\S+", line):
            raw = m.group()
            word = strip_punctuation(raw)
            if not word:
                flush()
                continue
            offset = raw.index(word)
            start = m.start() + offset
            end = start + len(word)
            cap = word[0].isupper()
            if not (cap or (run and word in _PARTICLES)):
                flush()
                continue
            if run and offset:
                flush()
            run.append((start, end, cap))
            if end < m.end():
                flush()  # trailing punctuation closes the run
        flush()
        return spans

    def __call__(self, text: str) -> EntitySet:
        out = EntitySet()
        for line in text.splitlines():
            taken: list[tuple[int, int]] = []
            for pattern, kind in self._gaz:
                for m in pattern.finditer(line):
                    if any(m.start() < e and s < m.end() for s, e in taken):
                        continue
                    taken.append((m.start(), m.end()))
                    out.add(Entity(m.group(), kind))
            for s, e in self._runs(line):
                if any(s < te and ts < e for ts, te in taken):
                    continue
                out.add(Entity(line[s:e], "other"))
        return out
