"""A worked example graph: a 2024 staging of Faulkner at La Fabrica.

Tier B carries the festival run (26 June to 7 July 2024) and the venue.
The two shows in tier C (dates, times, running time) are illustrative
values inside that run.
"""

from __future__ import annotations

from datetime import date, time

from .graph import ProductionGraph
from .model import (
    DEFAULT_BASE,
    CastEntry,
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
    mint_iri,
)


def absalom_graph(base: str = DEFAULT_BASE) -> ProductionGraph:
    def m(kind, name):
        return mint_iri(kind, name, base)

    director = Person(m("Person", "Séverine Chavrier"), "Séverine Chavrier")
    author = Person(m("Person", "William Faulkner"), "William Faulkner")
    novel = HumanMadeObject(m("HumanMadeObject", "Absalom, Absalom! (novel)"),
                            LangString("Absalom, Absalom!", "en"))
    festival = Group(m("Group", "Festival d'Avignon"), "Festival d'Avignon")
    venue = Place(m("Place", "La Fabrica"), "La Fabrica")
    work = WorkConcept(
        m("WorkConcept", "Absalon Absalon Chavrier 2024"),
        LangString("Absalon, Absalon !", "fr"),
        director=director.id,
        year=2024,
        influences=(Influence(novel.id, "text-source"), Influence(author.id, "author")),
    )
    production = Production(
        m("Production", "Absalon Absalon Festival d'Avignon 2024"),
        realizes=work.id,
        title=LangString("Absalon, Absalon !", "fr"),
        venue=venue.id,
        timespan=Timespan(date(2024, 6, 26), date(2024, 7, 7)),
        cast_and_crew=(CastEntry(director.id, "mise-en-scene"),),
        programmed_by=festival.id,
    )
    shows = [
        ShowEvent(m("ShowEvent", "Absalon Absalon 2024-06-28"), production.id,
                  date(2024, 6, 28), time(19, 0), duration=260),
        ShowEvent(m("ShowEvent", "Absalon Absalon 2024-07-02"), production.id,
                  date(2024, 7, 2), time(19, 0), duration=260),
    ]
    return ProductionGraph([director, author, novel, festival, venue, work, production, *shows])
