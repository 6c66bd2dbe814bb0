"""Sorted, lossless N-Triples export and import.

Classes come from CIDOC CRM; properties live in the extension namespace.
Ordered lists (cast, funders, influences, cast changes) become fragment
nodes ``<entity>#cast-0`` so order survives the sort.
"""

from __future__ import annotations

import re
import unicodedata
from collections import defaultdict
from datetime import date, time

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
)
from .vocab import EXT_NS, Vocabularies, default_vocabularies

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
CRM = "http://www.cidoc-crm.org/cidoc-crm/"
XSD = "http://www.w3.org/2001/XMLSchema#"

CLASSES = {
    WorkConcept: CRM + "E89_Propositional_Object",
    Production: CRM + "E7_Activity",
    ShowEvent: CRM + "E7_Activity",
    Person: CRM + "E21_Person",
    Group: CRM + "E74_Group",
    Place: CRM + "E53_Place",
    HumanMadeObject: CRM + "E22_Human-Made_Object",
}


def P(name: str) -> str:
    return EXT_NS + name


# -- terms --------------------------------------------------------------------

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r"}


def iri(value: str) -> str:
    if re.search(r"[\s<>\"{}|^`\\]", value):
        raise ValueError(f"not a valid IRI: {value!r}")
    return f"<{value}>"


def _escape(c: str) -> str:
    if c in _ESCAPES:
        return _ESCAPES[c]
    if unicodedata.category(c) in ("Cc", "Zl", "Zp"):
        return f"\\u{ord(c):04X}"
    return c


def literal(value: str, language: str | None = None, datatype: str | None = None) -> str:
    body = "".join(_escape(c) for c in value)
    if language:
        return f'"{body}"@{language}'
    if datatype:
        return f'"{body}"^^<{datatype}>'
    return f'"{body}"'


def triple(s: str, p: str, o: str) -> str:
    return f"{iri(s)} {iri(p)} {o} ."


# -- export -------------------------------------------------------------------


def _entity_triples(e: Entity, vocab: Vocabularies) -> list[str]:
    out = [triple(e.id, RDF_TYPE, iri(CLASSES[type(e)]))]
    add = lambda p, o, s=e.id: out.append(triple(s, P(p), o))  # noqa: E731
    if isinstance(e, (Person, Group, Place)):
        add("name", literal(e.name))
    elif isinstance(e, HumanMadeObject):
        add("title", literal(e.title.text, e.title.language))
    elif isinstance(e, WorkConcept):
        add("title", literal(e.title.text, e.title.language))
        if e.director:
            add("director", iri(e.director))
        if e.year is not None:
            add("year", literal(f"{e.year:04d}", datatype=XSD + "gYear"))
        for i, inf in enumerate(e.influences):
            node = f"{e.id}#influence-{i}"
            add("influence", iri(node))
            add("target", iri(inf.target), node)
            add("relation", iri(vocab.ext.get(inf.relation).iri), node)
    elif isinstance(e, Production):
        add("title", literal(e.title.text, e.title.language))
        add("realizes", iri(e.realizes))
        add("classification", iri(vocab.aat.get(e.classification).iri))
        if e.venue:
            add("venue", iri(e.venue))
        if e.timespan:
            add("begin", literal(e.timespan.begin.isoformat(), datatype=XSD + "date"))
            add("end", literal(e.timespan.end.isoformat(), datatype=XSD + "date"))
        for i, c in enumerate(e.cast_and_crew):
            node = f"{e.id}#cast-{i}"
            add("cast", iri(node))
            add("agent", iri(c.agent), node)
            add("role", iri(vocab.roles.get(c.role).iri), node)
        for i, f in enumerate(e.funders):
            node = f"{e.id}#funding-{i}"
            add("funding", iri(node))
            add("agent", iri(f), node)
        if e.programmed_by:
            add("programmedBy", iri(e.programmed_by))
    elif isinstance(e, ShowEvent):
        add("partOf", iri(e.part_of))
        if e.date:
            add("date", literal(e.date.isoformat(), datatype=XSD + "date"))
        if e.time is not None:
            add("time", literal(e.time.strftime("%H:%M:%S"), datatype=XSD + "time"))
        if e.duration is not None:
            add("durationMinutes", literal(str(e.duration), datatype=XSD + "integer"))
        for i, c in enumerate(e.cast_changes):
            node = f"{e.id}#change-{i}"
            add("castChange", iri(node))
            add("agent", iri(c.agent), node)
            add("role", iri(vocab.roles.get(c.role).iri), node)
            add("change", literal(c.change), node)
        if e.notes:
            add("notes", literal(e.notes))
    return out


def to_ntriples(graph: ProductionGraph, vocab: Vocabularies | None = None) -> str:
    vocab = vocab or default_vocabularies()
    violations = validate_graph(graph, vocab)
    if violations:
        raise GraphError(f"graph has {len(violations)} violation(s)", violations)
    lines = sorted(line for e in graph for line in _entity_triples(e, vocab))
    return "".join(line + "\n" for line in lines)


# -- import -------------------------------------------------------------------

_LINE = re.compile(
    r'^<([^>]*)> <([^>]*)> (<[^>]*>|"((?:[^"\\]|\\.)*)"(?:@([A-Za-z0-9-]+)|\^\^<([^>]*)>)?) \.$'
)
_UNESCAPE = re.compile(r'\\(u[0-9A-Fa-f]{4}|U[0-9A-Fa-f]{8}|.)')


def _unescape(body: str) -> str:
    def sub(m):
        code = m.group(1)
        if code[0] in "uU":
            return chr(int(code[1:], 16))
        return {"n": "\n", "r": "\r", "t": "\t"}.get(code, code)

    return _UNESCAPE.sub(sub, body)


class _Obj:
    __slots__ = ("iri", "text", "language", "datatype")

    def __init__(self, iri=None, text=None, language=None, datatype=None):
        self.iri, self.text, self.language, self.datatype = iri, text, language, datatype


def parse_ntriples(text: str) -> dict[str, dict[str, list[_Obj]]]:
    subjects: dict[str, dict[str, list[_Obj]]] = defaultdict(lambda: defaultdict(list))
    for lineno, line in enumerate(text.split("\n"), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        m = _LINE.match(line.strip())
        if not m:
            raise ParseError(f"line {lineno}: not an N-Triples statement")
        s, p, o, body, lang, dtype = m.groups()
        obj = _Obj(iri=o[1:-1]) if o.startswith("<") else _Obj(None, _unescape(body), lang, dtype)
        subjects[s][p].append(obj)
    return subjects


def _one(props, key, subject, required=True):
    vals = props.get(P(key), [])
    if len(vals) > 1:
        raise ParseError(f"{subject}: more than one {key}")
    if not vals:
        if required:
            raise ParseError(f"{subject}: missing {key}")
        return None
    return vals[0]


def _ordered(props, key, subjects):
    nodes = [o.iri for o in props.get(P(key), [])]
    nodes.sort(key=lambda n: int(n.rsplit("-", 1)[1]))
    return [(n, subjects.get(n, {})) for n in nodes]


def from_ntriples(text: str, vocab: Vocabularies | None = None) -> ProductionGraph:
    vocab = vocab or default_vocabularies()
    subjects = parse_ntriples(text)

    def term(obj, v, subject):
        try:
            return v.by_iri(obj.iri).id
        except MissingDataError as exc:
            raise ParseError(f"{subject}: {exc}") from None

    graph = ProductionGraph()
    for s in sorted(subjects):
        props = subjects[s]
        types = [o.iri for o in props.get(RDF_TYPE, [])]
        if not types:
            continue  # list nodes carry no class
        cls = types[0]
        title = _one(props, "title", s, required=False)
        lang = LangString(title.text, title.language or "") if title else None
        if cls == CLASSES[Person] or cls == CLASSES[Group] or cls == CLASSES[Place]:
            kind = {CLASSES[Person]: Person, CLASSES[Group]: Group, CLASSES[Place]: Place}[cls]
            graph.add(kind(s, _one(props, "name", s).text))
        elif cls == CLASSES[HumanMadeObject]:
            graph.add(HumanMadeObject(s, lang))
        elif cls == CLASSES[WorkConcept]:
            director = _one(props, "director", s, False)
            year = _one(props, "year", s, False)
            influences = tuple(
                Influence(_one(n, "target", node).iri, term(_one(n, "relation", node), vocab.ext, node))
                for node, n in _ordered(props, "influence", subjects)
            )
            graph.add(WorkConcept(s, lang, director.iri if director else None,
                                  int(year.text) if year else None, influences))
        elif cls == CLASSES[Production] and P("realizes") in props:
            begin, end = _one(props, "begin", s, False), _one(props, "end", s, False)
            venue, prog = _one(props, "venue", s, False), _one(props, "programmedBy", s, False)
            graph.add(Production(
                s,
                realizes=_one(props, "realizes", s).iri,
                title=lang,
                venue=venue.iri if venue else None,
                timespan=Timespan(date.fromisoformat(begin.text), date.fromisoformat(end.text))
                if begin and end else None,
                cast_and_crew=tuple(
                    CastEntry(_one(n, "agent", node).iri, term(_one(n, "role", node), vocab.roles, node))
                    for node, n in _ordered(props, "cast", subjects)
                ),
                funders=tuple(_one(n, "agent", node).iri for node, n in _ordered(props, "funding", subjects)),
                classification=term(_one(props, "classification", s), vocab.aat, s),
                programmed_by=prog.iri if prog else None,
            ))
        elif cls == CLASSES[ShowEvent]:
            d, t = _one(props, "date", s, False), _one(props, "time", s, False)
            dur, notes = _one(props, "durationMinutes", s, False), _one(props, "notes", s, False)
            graph.add(ShowEvent(
                s,
                part_of=_one(props, "partOf", s).iri,
                date=date.fromisoformat(d.text) if d else None,
                time=time.fromisoformat(t.text) if t else None,
                duration=int(dur.text) if dur else None,
                cast_changes=tuple(
                    CastChange(_one(n, "agent", node).iri, term(_one(n, "role", node), vocab.roles, node),
                               _one(n, "change", node).text)
                    for node, n in _ordered(props, "castChange", subjects)
                ),
                notes=notes.text if notes else None,
            ))
        else:
            raise UnsupportedPatternError(f"{s}: unsupported class {cls}")
    return graph
