"""Entity store with referential-integrity and schema validation."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator

from ..errors import ConflictError
from .model import (
    CHANGE_KINDS,
    Entity,
    HumanMadeObject,
    Production,
    ShowEvent,
    WorkConcept,
    references,
)
from .vocab import Vocabularies, default_vocabularies

INFLUENCE_RELATIONS = ("text-source", "author", "inspiration", "collective")


@dataclass(frozen=True)
class Violation:
    entity_id: str
    rule: str
    message: str

    def __str__(self) -> str:
        return f"{self.entity_id}: [{self.rule}] {self.message}"


class ProductionGraph:
    def __init__(self, entities: Iterable[Entity] = ()):
        self._entities: dict[str, Entity] = {}
        for e in entities:
            self.add(e)

    def add(self, entity: Entity) -> "ProductionGraph":
        if entity.id in self._entities:
            raise ConflictError(f"duplicate entity id: {entity.id}")
        self._entities[entity.id] = entity
        return self

    def get(self, entity_id: str) -> Entity | None:
        return self._entities.get(entity_id)

    def __contains__(self, entity_id: str) -> bool:
        return entity_id in self._entities

    def __iter__(self) -> Iterator[Entity]:
        return iter(sorted(self._entities.values(), key=lambda e: e.id))

    def __len__(self) -> int:
        return len(self._entities)

    def __eq__(self, other) -> bool:
        return isinstance(other, ProductionGraph) and self._entities == other._entities

    def of_type(self, cls: type) -> list:
        return [e for e in self if type(e) is cls]


def add_entity(graph: ProductionGraph, entity: Entity) -> ProductionGraph:
    """Store ``entity``; dangling references are allowed until validation."""
    return graph.add(entity)


def validate_graph(graph: ProductionGraph, vocab: Vocabularies | None = None) -> list[Violation]:
    vocab = vocab or default_vocabularies()
    out: list[Violation] = []
    for e in graph:
        for fieldname, target, allowed in references(e):
            found = graph.get(target)
            if found is None:
                out.append(Violation(e.id, "reference", f"{fieldname} -> {target} does not resolve"))
            elif not isinstance(found, allowed):
                want = "/".join(t.__name__ for t in allowed)
                out.append(Violation(e.id, "reference-type",
                                     f"{fieldname} -> {target} is a {type(found).__name__}, expected {want}"))
        if isinstance(e, WorkConcept):
            out += _check_work(e)
        elif isinstance(e, Production):
            out += _check_production(e, vocab)
        elif isinstance(e, ShowEvent):
            out += _check_show(e, graph, vocab)
        elif isinstance(e, HumanMadeObject) and not e.title.text.strip():
            out.append(Violation(e.id, "title", "title is empty"))
    return out


def _check_work(w: WorkConcept) -> list[Violation]:
    out = []
    if not w.title.text.strip():
        out.append(Violation(w.id, "title", "title is empty"))
    if w.director is None:
        out.append(Violation(w.id, "work-director", "a work concept needs exactly one director"))
    if w.year is None:
        out.append(Violation(w.id, "work-year", "a work concept needs exactly one year"))
    for inf in w.influences:
        if inf.relation not in INFLUENCE_RELATIONS:
            out.append(Violation(w.id, "influence-relation", f"unknown relation {inf.relation!r}"))
    return out


def _check_production(p: Production, vocab: Vocabularies) -> list[Violation]:
    out = []
    if not p.title.text.strip():
        out.append(Violation(p.id, "title", "title is empty"))
    if p.timespan and p.timespan.begin > p.timespan.end:
        out.append(Violation(p.id, "timespan-order",
                             f"begins {p.timespan.begin} after it ends {p.timespan.end}"))
    if p.classification not in vocab.aat:
        out.append(Violation(p.id, "classification", f"unknown AAT term {p.classification}"))
    for (agent, role), n in Counter((c.agent, c.role) for c in p.cast_and_crew).items():
        if n > 1:
            out.append(Violation(p.id, "cast-duplicate", f"{agent} listed {n} times as {role}"))
    for c in p.cast_and_crew:
        if c.role not in vocab.roles:
            out.append(Violation(p.id, "role", f"unknown role {c.role!r}"))
    return out


def _check_show(s: ShowEvent, graph: ProductionGraph, vocab: Vocabularies) -> list[Violation]:
    out = []
    parent = graph.get(s.part_of)
    if isinstance(parent, Production) and parent.timespan and s.date:
        if not parent.timespan.contains(s.date):
            out.append(Violation(s.id, "show-within-production",
                                 f"{s.date} lies outside {parent.timespan.begin}..{parent.timespan.end}"))
    if s.time is not None and s.date is None:
        out.append(Violation(s.id, "show-time", "a time of day needs a date"))
    if s.duration is not None and s.duration <= 0:
        out.append(Violation(s.id, "show-duration", "duration must be positive"))
    for c in s.cast_changes:
        if c.role not in vocab.roles:
            out.append(Violation(s.id, "role", f"unknown role {c.role!r}"))
        if c.change not in CHANGE_KINDS:
            out.append(Violation(s.id, "cast-change", f"unknown change kind {c.change!r}"))
    return out


def graph_warnings(graph: ProductionGraph) -> list[Violation]:
    """Incomplete but valid shapes: a work with no production, a production with no show."""
    realized = {p.realizes for p in graph.of_type(Production)}
    shown = {s.part_of for s in graph.of_type(ShowEvent)}
    out = [Violation(w.id, "work-without-production", "no production realizes this work")
           for w in graph.of_type(WorkConcept) if w.id not in realized]
    out += [Violation(p.id, "production-without-show", "no show is attached")
            for p in graph.of_type(Production) if p.id not in shown]
    return out
