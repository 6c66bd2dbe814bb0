"""Turn an accepted draft into Work / Production / Show fragments."""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from datetime import date

from ..errors import ConflictError, GatedDraftError
from ..ontology.graph import ProductionGraph
from ..ontology.model import (
    DEFAULT_BASE,
    CastEntry,
    Entity,
    Group,
    Influence,
    LangString,
    Person,
    Place,
    Production,
    ShowEvent,
    WorkConcept,
    mint_iri,
)
from .catalog import PropertyCatalog
from .draft import Draft, LangLiteral
from .reward import formal_reward

FRENCH_MONTHS = {
    "janvier": 1, "fevrier": 2, "mars": 3, "avril": 4, "mai": 5, "juin": 6,
    "juillet": 7, "aout": 8, "septembre": 9, "octobre": 10, "novembre": 11, "decembre": 12,
}

_WORDY = re.compile(r"^(?:[a-z]+\s+)?(\d{1,2})(?:er)?\s+([a-z]+)\.?\s+(\d{4})$")
_NUMERIC = re.compile(r"^(\d{1,2})[/.-](\d{1,2})[/.-](\d{4})$")
_ISO = re.compile(r"^(\d{4})-(\d{2})-(\d{2})$")


def _fold(text: str) -> str:
    nfkd = unicodedata.normalize("NFKD", text.casefold())
    return "".join(c for c in nfkd if not unicodedata.combining(c))


def normalize_date(text: str) -> date | None:
    """``12 juillet 1975``, ``1er mai 1980``, ``12/07/1975`` or ISO; None otherwise."""
    s = " ".join(_fold(text).split())
    try:
        if m := _ISO.match(s):
            return date(int(m[1]), int(m[2]), int(m[3]))
        if m := _NUMERIC.match(s):
            return date(int(m[3]), int(m[2]), int(m[1]))
        if (m := _WORDY.match(s)) and m[2] in FRENCH_MONTHS:
            return date(int(m[3]), FRENCH_MONTHS[m[2]], int(m[1]))
    except ValueError:  # 31 fevrier and friends
        return None
    return None


@dataclass(frozen=True)
class Fragments:
    graph: ProductionGraph
    work: str
    production: str | None = None
    show: str | None = None
    side: tuple[tuple[str, str], ...] = ()
    provenance: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()


def _text(value) -> str:
    return value.text if isinstance(value, LangLiteral) else str(value)


def _lang(value, default: str = "fr") -> LangString:
    if isinstance(value, LangLiteral):
        return LangString(value.text, value.language or default)
    return LangString(str(value), default)


def _put(graph: ProductionGraph, entity: Entity) -> str:
    """Add unless an identical entity is already there."""
    existing = graph.get(entity.id)
    if existing is None:
        graph.add(entity)
    elif existing != entity:
        raise ConflictError(f"{entity.id} already holds a different {type(existing).__name__}")
    return entity.id


def merge_graphs(target: ProductionGraph, source: ProductionGraph) -> ProductionGraph:
    for e in source:
        _put(target, e)
    return target


def triples_to_entities(draft: Draft, catalog: PropertyCatalog, base: str = DEFAULT_BASE) -> Fragments:
    """Map catalogued properties onto ontology fields through their bindings.

    Agents, places and the work are minted from their names so that two
    drafts naming the same person share one node. The work's director is
    the first ``mise-en-scene`` agent and its year the first performance
    year. Catalogued properties bound to ``side`` are returned verbatim.
    """
    score = formal_reward(draft, catalog)
    if not score.formal_pass:
        raise GatedDraftError("draft failed the formal reward: " + "; ".join(score.violations))

    graph = ProductionGraph()
    title = None
    influences: list[Influence] = []
    cast: list[CastEntry] = []
    venue = None
    show_date = None
    date_text = None
    side, provenance, warnings = [], [], []

    for t in draft.triples:
        b = catalog[t.property.strip()].binding
        value = _text(t.object).strip()
        if b.target == "A.title":
            title = _lang(t.object)
        elif b.target == "A.influence":
            influences.append(Influence(_put(graph, Person(mint_iri("Person", value, base), value)), b.argument))
        elif b.target == "B.cast":
            cls = Group if b.agent_kind == "group" else Person
            agent = _put(graph, cls(mint_iri(cls.__name__, value, base), value))
            cast.append(CastEntry(agent, b.argument))
        elif b.target == "B.venue":
            venue = _put(graph, Place(mint_iri("Place", value, base), value))
        elif b.target == "C.date":
            date_text = value
            show_date = normalize_date(value)
            if show_date is None:
                warnings.append(f"unparseable date kept verbatim: {value!r}")
        elif b.target == "provenance":
            provenance.append(value)
        else:
            side.append((t.property.strip(), value))

    if title is None:
        title = LangString(draft.subject)
        warnings.append("no title property; the subject stands in")
    work_id = mint_iri("WorkConcept", title.text, base)
    director = next((c.agent for c in cast if c.role == "mise-en-scene"), None)
    if director is None:
        warnings.append("no director: the work concept stays incomplete")
    if show_date is None:
        warnings.append("no first performance year: the work concept stays incomplete")
    graph.add(WorkConcept(work_id, title, director, show_date.year if show_date else None, tuple(influences)))

    production_id = show_id = None
    if cast or venue or date_text:
        production_id = mint_iri("Production", title.text, base)
        graph.add(Production(production_id, work_id, title, venue=venue, cast_and_crew=tuple(cast)))
    if date_text:
        key = show_date.isoformat() if show_date else date_text
        show_id = mint_iri("ShowEvent", f"{title.text} {key}", base)
        notes = [] if show_date else [f"first performance: {date_text}"]
        notes += [f"stated in: {p}" for p in provenance]
        graph.add(ShowEvent(show_id, production_id, date=show_date, notes="\n".join(notes) or None))

    return Fragments(graph, work_id, production_id, show_id, tuple(side), tuple(provenance), tuple(warnings))
