"""Linked Art flavoured JSON-LD, one document per entity.

Documents are written with sorted keys and two-space indentation so the
same graph always produces the same bytes. Vocabulary terms appear as full
IRIs; the reader maps them back to term ids through the loaded vocabularies.
"""

from __future__ import annotations

import hashlib
import json
from datetime import date, datetime
from pathlib import Path
from typing import Any, Mapping

from ..io import write_if_changed
from ..errors import GraphError, MissingDataError, ParseError, UnsupportedPatternError
from .graph import ProductionGraph, validate_graph
from .model import (
    CastChange,
    CastEntry,
    Entity,
    Group,
    HumanMadeObject,
    Influence,
    LangString,
    Person,
    Place,
    Production,
    ShowEvent,
    Timespan,
    WorkConcept,
    label_of,
    tier_of,
)
from .vocab import PRIMARY_NAME, Vocabularies, default_vocabularies

LINKED_ART_CONTEXT = "https://linked.art/ns/v1/linked-art.json"

CLASS_NAMES = {
    WorkConcept: "PropositionalObject",
    Production: "Activity",
    ShowEvent: "Activity",
    Person: "Person",
    Group: "Group",
    Place: "Place",
    HumanMadeObject: "HumanMadeObject",
}


def dumps(doc: Mapping) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


# -- encoding -----------------------------------------------------------------


class _Encoder:
    def __init__(self, graph: ProductionGraph, vocab: Vocabularies):
        self.graph = graph
        self.vocab = vocab

    def ref(self, entity_id: str) -> dict:
        target = self.graph.get(entity_id)
        return {"id": entity_id, "type": CLASS_NAMES[type(target)], "_label": label_of(target)}

    def term(self, term_id: str, vocab=None) -> dict:
        t = vocab.get(term_id) if vocab else self.vocab.term(term_id)
        return {"id": t.iri, "type": "Type", "_label": t.label}

    def name(self, s: LangString) -> dict:
        return {
            "type": "Name",
            "content": s.text,
            "classified_as": [self.term(PRIMARY_NAME)],
            "language": [{"id": self.vocab.language_iri(s.language), "type": "Language",
                          "_label": self.vocab.language_label(s.language)}],
        }

    def part(self, pid: str, classes: list[dict], agent: str) -> dict:
        return {"id": pid, "type": "Activity", "classified_as": classes,
                "carried_out_by": [self.ref(agent)]}

    def encode(self, e: Entity) -> dict:
        doc: dict[str, Any] = {"@context": LINKED_ART_CONTEXT, "id": e.id,
                               "type": CLASS_NAMES[type(e)], "_label": label_of(e)}
        if isinstance(e, (Person, Group, Place)):
            doc["identified_by"] = [{"type": "Name", "content": e.name}]
        elif isinstance(e, HumanMadeObject):
            doc["identified_by"] = [self.name(e.title)]
        elif isinstance(e, WorkConcept):
            self._work(e, doc)
        elif isinstance(e, Production):
            self._production(e, doc)
        else:
            self._show(e, doc)
        return doc

    def _work(self, w: WorkConcept, doc: dict) -> None:
        doc["identified_by"] = [self.name(w.title)]
        creation: dict[str, Any] = {}
        if w.director:
            creation["carried_out_by"] = [self.ref(w.director)]
        if w.year is not None:
            creation["timespan"] = {"type": "TimeSpan",
                                    "begin_of_the_begin": f"{w.year:04d}-01-01T00:00:00Z",
                                    "end_of_the_end": f"{w.year:04d}-12-31T23:59:59Z"}
        if creation:
            doc["created_by"] = {"type": "Creation", **creation}
        if w.influences:
            doc["attributed_by"] = [
                {"type": "AttributeAssignment",
                 "classified_as": [self.term(i.relation, self.vocab.ext)],
                 "assigned": [self.ref(i.target)]}
                for i in w.influences
            ]

    def _production(self, p: Production, doc: dict) -> None:
        doc["classified_as"] = [self.term(p.classification, self.vocab.aat)]
        doc["identified_by"] = [self.name(p.title)]
        doc["used_specific_object"] = [self.ref(p.realizes)]
        if p.venue:
            doc["took_place_at"] = [self.ref(p.venue)]
        if p.timespan:
            doc["timespan"] = {"type": "TimeSpan",
                               "begin_of_the_begin": f"{p.timespan.begin.isoformat()}T00:00:00Z",
                               "end_of_the_end": f"{p.timespan.end.isoformat()}T23:59:59Z"}
        parts = [self.part(f"{p.id}#cast-{i}", [self.term(c.role, self.vocab.roles)], c.agent)
                 for i, c in enumerate(p.cast_and_crew)]
        parts += [self.part(f"{p.id}#funding-{i}", [self.term("funding", self.vocab.ext)], f)
                  for i, f in enumerate(p.funders)]
        if p.programmed_by:
            parts.append(self.part(f"{p.id}#programming", [self.term("programming", self.vocab.ext)],
                                   p.programmed_by))
        if parts:
            doc["part"] = parts

    def _show(self, s: ShowEvent, doc: dict) -> None:
        doc["classified_as"] = [self.term("show", self.vocab.ext)]
        doc["part_of"] = [self.ref(s.part_of)]
        span: dict[str, Any] = {}
        if s.date:
            day = s.date.isoformat()
            if s.time is not None:
                start = f"{day}T{s.time.strftime('%H:%M:%S')}Z"
                span["begin_of_the_begin"] = span["end_of_the_begin"] = start
            else:
                span["begin_of_the_begin"] = f"{day}T00:00:00Z"
            span["end_of_the_end"] = f"{day}T23:59:59Z"
        if s.duration is not None:
            span["duration"] = {"type": "Dimension", "value": s.duration,
                                "unit": self.term("minutes", self.vocab.ext)}
        if span:
            doc["timespan"] = {"type": "TimeSpan", **span}
        if s.cast_changes:
            doc["part"] = [
                self.part(f"{s.id}#change-{i}",
                          [self.term(c.role, self.vocab.roles),
                           self.term(f"cast-{c.change}", self.vocab.ext)], c.agent)
                for i, c in enumerate(s.cast_changes)
            ]
        if s.notes:
            doc["referred_to_by"] = [{"type": "LinguisticObject", "content": s.notes,
                                      "classified_as": [self.term("note", self.vocab.ext)]}]


def _file_names(graph: ProductionGraph) -> dict[str, str]:
    names: dict[str, str] = {}
    seen: dict[str, list[str]] = {}
    for e in graph:
        base = f"{tier_of(e)}/{e.id.rstrip('/').rsplit('/', 1)[-1].replace('#', '-')}"
        seen.setdefault(base, []).append(e.id)
    for base, ids in seen.items():
        for eid in ids:
            suffix = "" if len(ids) == 1 else "-" + hashlib.sha1(eid.encode()).hexdigest()[:8]
            names[eid] = f"{base}{suffix}.json"
    return names


def to_jsonld(graph: ProductionGraph, vocab: Vocabularies | None = None) -> dict[str, str]:
    """Map ``<tier>/<name>.json`` to document text for every entity."""
    vocab = vocab or default_vocabularies()
    violations = validate_graph(graph, vocab)
    if violations:
        raise GraphError(f"graph has {len(violations)} violation(s)", violations)
    enc = _Encoder(graph, vocab)
    names = _file_names(graph)
    return {names[e.id]: dumps(enc.encode(e)) for e in graph}


def write_jsonld(graph: ProductionGraph, root: Path, vocab: Vocabularies | None = None) -> list[Path]:
    root = Path(root)
    return [write_if_changed(root / name, text) for name, text in sorted(to_jsonld(graph, vocab).items())]


# -- decoding -----------------------------------------------------------------


class _Decoder:
    def __init__(self, vocab: Vocabularies, source: str):
        self.vocab = vocab
        self.source = source

    def fail(self, path: str, msg: str):
        raise ParseError(f"{self.source}: {path}: {msg}")

    def get(self, obj: Mapping, key: str, path: str, default=...):
        if not isinstance(obj, Mapping):
            self.fail(path, "expected an object")
        if key not in obj:
            if default is not ...:
                return default
            self.fail(f"{path}.{key}", "missing")
        return obj[key]

    def first(self, obj: Mapping, key: str, path: str):
        items = self.get(obj, key, path)
        if not isinstance(items, list) or not items:
            self.fail(f"{path}.{key}", "expected a non-empty list")
        return items[0]

    def ref_id(self, obj: Mapping, key: str, path: str) -> str:
        return str(self.get(self.first(obj, key, path), "id", f"{path}.{key}[0]"))

    def term_id(self, term: Mapping, path: str) -> str:
        iri = self.get(term, "id", path)
        try:
            return self.vocab.resolve_iri(iri)
        except MissingDataError as exc:
            self.fail(path, str(exc))

    def classes(self, obj: Mapping, path: str) -> list[str]:
        return [self.term_id(t, f"{path}.classified_as[{i}]")
                for i, t in enumerate(self.get(obj, "classified_as", path, []))]

    def langstring(self, doc: Mapping, path: str) -> LangString:
        name = self.first(doc, "identified_by", path)
        text = self.get(name, "content", f"{path}.identified_by[0]")
        lang_iri = self.get(self.first(name, "language", f"{path}.identified_by[0]"), "id",
                            f"{path}.identified_by[0].language[0]")
        try:
            return LangString(text, self.vocab.language_code(lang_iri))
        except MissingDataError as exc:
            self.fail(f"{path}.identified_by[0].language[0]", str(exc))

    def day(self, stamp: str, path: str) -> date:
        try:
            return datetime.strptime(stamp, "%Y-%m-%dT%H:%M:%SZ").date()
        except (TypeError, ValueError):
            self.fail(path, f"bad timestamp {stamp!r}")

    def decode(self, doc: Any) -> Entity:
        if not isinstance(doc, Mapping):
            self.fail("$", "expected a JSON object")
        kind = self.get(doc, "type", "$")
        eid = str(self.get(doc, "id", "$"))
        if kind in ("Person", "Group", "Place"):
            name = self.get(self.first(doc, "identified_by", "$"), "content", "$.identified_by[0]")
            return {"Person": Person, "Group": Group, "Place": Place}[kind](eid, name)
        if kind == "HumanMadeObject":
            return HumanMadeObject(eid, self.langstring(doc, "$"))
        if kind == "PropositionalObject":
            return self._work(doc, eid)
        if kind == "Activity":
            if "show" in self.classes(doc, "$"):
                return self._show(doc, eid)
            return self._production(doc, eid)
        raise UnsupportedPatternError(f"{self.source}: unsupported class {kind!r}")

    def _work(self, doc: Mapping, eid: str) -> WorkConcept:
        creation = self.get(doc, "created_by", "$", {})
        director = None
        if "carried_out_by" in creation:
            director = self.ref_id(creation, "carried_out_by", "$.created_by")
        year = None
        if "timespan" in creation:
            stamp = self.get(creation["timespan"], "begin_of_the_begin", "$.created_by.timespan")
            year = self.day(stamp, "$.created_by.timespan.begin_of_the_begin").year
        influences = []
        for i, a in enumerate(self.get(doc, "attributed_by", "$", [])):
            p = f"$.attributed_by[{i}]"
            rel = self.classes(a, p)
            if len(rel) != 1:
                self.fail(p, "expected exactly one relation term")
            influences.append(Influence(self.ref_id(a, "assigned", p), rel[0]))
        return WorkConcept(eid, self.langstring(doc, "$"), director, year, tuple(influences))

    def _production(self, doc: Mapping, eid: str) -> Production:
        classes = self.classes(doc, "$")
        if len(classes) != 1:
            self.fail("$.classified_as", "expected exactly one classification")
        timespan = None
        if "timespan" in doc:
            ts = doc["timespan"]
            timespan = Timespan(
                self.day(self.get(ts, "begin_of_the_begin", "$.timespan"), "$.timespan.begin_of_the_begin"),
                self.day(self.get(ts, "end_of_the_end", "$.timespan"), "$.timespan.end_of_the_end"),
            )
        cast, funders, programmed_by = [], [], None
        for i, part in enumerate(self.get(doc, "part", "$", [])):
            p = f"$.part[{i}]"
            kinds = self.classes(part, p)
            agent = self.ref_id(part, "carried_out_by", p)
            if kinds == ["funding"]:
                funders.append(agent)
            elif kinds == ["programming"]:
                programmed_by = agent
            elif len(kinds) == 1 and kinds[0] in self.vocab.roles:
                cast.append(CastEntry(agent, kinds[0]))
            else:
                self.fail(p, f"unrecognised part classification {kinds}")
        return Production(
            eid,
            realizes=self.ref_id(doc, "used_specific_object", "$"),
            title=self.langstring(doc, "$"),
            venue=self.ref_id(doc, "took_place_at", "$") if "took_place_at" in doc else None,
            timespan=timespan,
            cast_and_crew=tuple(cast),
            funders=tuple(funders),
            classification=classes[0],
            programmed_by=programmed_by,
        )

    def _show(self, doc: Mapping, eid: str) -> ShowEvent:
        day = tod = duration = None
        ts = self.get(doc, "timespan", "$", {})
        if "end_of_the_end" in ts:
            day = self.day(ts["end_of_the_end"], "$.timespan.end_of_the_end")
        if "end_of_the_begin" in ts:
            try:
                tod = datetime.strptime(ts["end_of_the_begin"], "%Y-%m-%dT%H:%M:%SZ").time()
            except (TypeError, ValueError):
                self.fail("$.timespan.end_of_the_begin", "bad timestamp")
        if "duration" in ts:
            duration = self.get(ts["duration"], "value", "$.timespan.duration")
            if not isinstance(duration, int):
                self.fail("$.timespan.duration.value", "expected an integer")
        changes = []
        for i, part in enumerate(self.get(doc, "part", "$", [])):
            p = f"$.part[{i}]"
            kinds = self.classes(part, p)
            role = [k for k in kinds if k in self.vocab.roles]
            delta = [k[5:] for k in kinds if k.startswith("cast-")]
            if len(role) != 1 or len(delta) != 1:
                self.fail(p, "a cast change needs one role and one change kind")
            changes.append(CastChange(self.ref_id(part, "carried_out_by", p), role[0], delta[0]))
        notes = None
        if "referred_to_by" in doc:
            notes = self.get(self.first(doc, "referred_to_by", "$"), "content", "$.referred_to_by[0]")
        return ShowEvent(eid, self.ref_id(doc, "part_of", "$"), day, tod, duration, tuple(changes), notes)


def parse_document(text: str, source: str = "<document>", vocab: Vocabularies | None = None) -> Entity:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return _Decoder(vocab or default_vocabularies(), source).decode(doc)


def from_jsonld(documents: str | Mapping[str, str], vocab: Vocabularies | None = None) -> ProductionGraph:
    """Rebuild a graph from one document text or a ``{name: text}`` mapping."""
    if isinstance(documents, str):
        documents = {"<document>": documents}
    graph = ProductionGraph()
    for name in sorted(documents):
        graph.add(parse_document(documents[name], name, vocab))
    return graph


def read_jsonld(root: Path, vocab: Vocabularies | None = None) -> ProductionGraph:
    root = Path(root)
    if not root.is_dir():
        raise NotADirectoryError(f"not a directory: {root}")
    docs = {str(p.relative_to(root)): p.read_text(encoding="utf-8") for p in root.glob("*/*.json")}
    return from_jsonld(docs, vocab)
