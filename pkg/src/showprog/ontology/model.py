"""Typed entities of the Work (A) / Production (B) / Show (C) model.

References between entities are IRIs; the graph resolves them. B points to
its A and C points to its B, never the reverse.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from datetime import date, time
from typing import Optional, Union

from .vocab import PERFORMANCES

DEFAULT_BASE = "https://example.org/showprog/id"

KIND_PATHS = {
    "WorkConcept": "work",
    "Production": "production",
    "ShowEvent": "show",
    "Person": "person",
    "Group": "group",
    "Place": "place",
    "HumanMadeObject": "object",
}


def slugify(text: str) -> str:
    ascii_ = unicodedata.normalize("NFKD", text).encode("ascii", "ignore").decode()
    slug = re.sub(r"[^a-z0-9]+", "-", ascii_.lower()).strip("-")
    return slug or "x"


def mint_iri(kind: str, name: str, base: str = DEFAULT_BASE) -> str:
    """``<base>/<kind path>/<slug>``; the same inputs always give the same IRI."""
    return f"{base.rstrip('/')}/{KIND_PATHS[kind]}/{slugify(name)}"


@dataclass(frozen=True)
class LangString:
    text: str
    language: str = "fr"


@dataclass(frozen=True)
class Timespan:
    begin: date
    end: date

    def contains(self, day: date) -> bool:
        return self.begin <= day <= self.end


@dataclass(frozen=True)
class Person:
    id: str
    name: str


@dataclass(frozen=True)
class Group:
    id: str
    name: str


@dataclass(frozen=True)
class Place:
    id: str
    name: str


@dataclass(frozen=True)
class HumanMadeObject:
    """A text, play, image or object that inspired a staging."""

    id: str
    title: LangString


@dataclass(frozen=True)
class Influence:
    target: str
    relation: str  # extension term id, e.g. "text-source"


@dataclass(frozen=True)
class WorkConcept:
    id: str
    title: LangString
    director: Optional[str] = None
    year: Optional[int] = None
    influences: tuple[Influence, ...] = ()


@dataclass(frozen=True)
class CastEntry:
    agent: str
    role: str  # role vocabulary term id


@dataclass(frozen=True)
class Production:
    id: str
    realizes: str
    title: LangString
    venue: Optional[str] = None
    timespan: Optional[Timespan] = None
    cast_and_crew: tuple[CastEntry, ...] = ()
    funders: tuple[str, ...] = ()
    classification: str = PERFORMANCES
    programmed_by: Optional[str] = None


@dataclass(frozen=True)
class CastChange:
    agent: str
    role: str
    change: str = "addition"  # or "removal"


CHANGE_KINDS = ("addition", "removal")


@dataclass(frozen=True)
class ShowEvent:
    id: str
    part_of: str
    date: Optional[date] = None
    time: Optional[time] = None
    duration: Optional[int] = None  # minutes
    cast_changes: tuple[CastChange, ...] = ()
    notes: Optional[str] = None


Entity = Union[WorkConcept, Production, ShowEvent, Person, Group, Place, HumanMadeObject]
AGENT_TYPES = (Person, Group)
TIER = {WorkConcept: "A", Production: "B", ShowEvent: "C"}


def tier_of(entity: Entity) -> str:
    """Directory name used for serialized documents."""
    if type(entity) in TIER:
        return TIER[type(entity)]
    if isinstance(entity, AGENT_TYPES):
        return "agents"
    if isinstance(entity, Place):
        return "places"
    return "objects"


def label_of(entity: Entity) -> str:
    if isinstance(entity, (Person, Group, Place)):
        return entity.name
    if isinstance(entity, ShowEvent):
        return entity.id.rsplit("/", 1)[-1]
    return entity.title.text


def references(entity: Entity) -> list[tuple[str, str, tuple[type, ...]]]:
    """``(field, target id, allowed target types)`` for every outgoing reference."""
    refs: list[tuple[str, str, tuple[type, ...]]] = []
    if isinstance(entity, WorkConcept):
        if entity.director:
            refs.append(("director", entity.director, (Person,)))
        for inf in entity.influences:
            refs.append(("influences", inf.target, (HumanMadeObject, Person, Group)))
    elif isinstance(entity, Production):
        refs.append(("realizes", entity.realizes, (WorkConcept,)))
        if entity.venue:
            refs.append(("venue", entity.venue, (Place,)))
        refs += [("cast_and_crew", c.agent, AGENT_TYPES) for c in entity.cast_and_crew]
        refs += [("funders", f, (Group,)) for f in entity.funders]
        if entity.programmed_by:
            refs.append(("programmed_by", entity.programmed_by, (Group,)))
    elif isinstance(entity, ShowEvent):
        refs.append(("part_of", entity.part_of, (Production,)))
        refs += [("cast_changes", c.agent, AGENT_TYPES) for c in entity.cast_changes]
    return refs
