from dataclasses import replace
from datetime import date, time, timedelta
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from showprog.errors import ConflictError, GraphError, ParseError, UnsupportedPatternError
from showprog.ontology import (
    CastChange,
    CastEntry,
    Group,
    HumanMadeObject,
    Influence,
    LangString,
    Person,
    Place,
    Production,
    ProductionGraph,
    ShowEvent,
    Timespan,
    WorkConcept,
    absalom_graph,
    add_entity,
    default_vocabularies,
    from_jsonld,
    from_ntriples,
    graph_warnings,
    mint_iri,
    read_jsonld,
    to_jsonld,
    to_ntriples,
    validate_graph,
    write_jsonld,
)

GOLDEN = Path(__file__).parent / "fixtures" / "absalom"
AAT_PERFORMANCES = "http://vocab.getty.edu/aat/300069200"

DIRECTOR = Person("urn:p:1", "Guy Rétoré")
WORK = WorkConcept("urn:a:1", LangString("Coquin de Coq"), DIRECTOR.id, 1975)
PROD = Production("urn:b:1", WORK.id, LangString("Coquin de Coq"),
                  timespan=Timespan(date(1975, 7, 10), date(1975, 7, 20)))


def rules(graph):
    return sorted(v.rule for v in validate_graph(graph))


# -- graph construction and validation -----------------------------------------


def test_add_and_conflict():
    g = ProductionGraph()
    add_entity(g, WORK)
    add_entity(g, PROD)
    assert WORK.id in g and PROD.id in g
    with pytest.raises(ConflictError):
        add_entity(g, WORK)


def test_dangling_reference_flagged_later():
    g = ProductionGraph([PROD])
    assert rules(g) == ["reference"]
    assert "realizes" in validate_graph(g)[0].message


def test_absalom_fixture_is_valid():
    g = absalom_graph()
    assert validate_graph(g) == []
    assert graph_warnings(g) == []
    prod = g.of_type(Production)[0]
    assert prod.timespan == Timespan(date(2024, 6, 26), date(2024, 7, 7))
    assert g.get(prod.venue).name == "La Fabrica"


def test_show_outside_production_span():
    g = ProductionGraph([DIRECTOR, WORK, PROD, ShowEvent("urn:c:1", PROD.id, date(1975, 8, 1))])
    assert rules(g) == ["show-within-production"]


def test_work_needs_director_and_year():
    g = ProductionGraph([replace(WORK, director=None, year=None)])
    assert rules(g) == ["work-director", "work-year"]


def test_schema_rules():
    bad = replace(PROD, timespan=Timespan(date(1975, 7, 20), date(1975, 7, 10)),
                  cast_and_crew=(CastEntry(DIRECTOR.id, "interprete"),) * 2 + (CastEntry(DIRECTOR.id, "juggler"),),
                  classification="123")
    g = ProductionGraph([DIRECTOR, WORK, bad])
    assert rules(g) == ["cast-duplicate", "classification", "role", "timespan-order"]
    typed = replace(PROD, realizes=DIRECTOR.id)
    assert rules(ProductionGraph([DIRECTOR, WORK, typed])) == ["reference-type"]


def test_partial_graphs_warn_but_validate():
    g = ProductionGraph([DIRECTOR, WORK])
    assert validate_graph(g) == []
    assert [w.rule for w in graph_warnings(g)] == ["work-without-production"]
    g.add(PROD)
    assert [w.rule for w in graph_warnings(g)] == ["production-without-show"]


def test_arrow_directions():
    g = absalom_graph()
    work = g.of_type(WorkConcept)[0]
    assert not any(f in ("realizes", "part_of") for f in vars(work))
    assert all(s.part_of in g for s in g.of_type(ShowEvent))
    assert all(p.realizes == work.id for p in g.of_type(Production))


def test_roles_resolve_against_vocabulary():
    roles = default_vocabularies().roles
    for p in absalom_graph().of_type(Production):
        assert all(c.role in roles for c in p.cast_and_crew)


@pytest.mark.parametrize("extra", [DIRECTOR, Place("urn:x", "Nowhere"), ShowEvent("urn:c", "urn:nope")])
def test_validation_monotone_except_resolution(extra):
    g = ProductionGraph([PROD, replace(WORK, year=None)])
    before = set(validate_graph(g))
    g.add(extra)
    gone = before - set(validate_graph(g))
    assert all(v.rule == "reference" and extra.id in v.message for v in gone)


def test_mint_iri_is_stable():
    assert mint_iri("Person", "Séverine Chavrier") == "https://example.org/showprog/id/person/severine-chavrier"
    assert mint_iri("Place", "La Fabrica", "http://x/") == "http://x/place/la-fabrica"


# -- JSON-LD --------------------------------------------------------------------


def test_jsonld_golden_and_round_trip(tmp_path):
    g = absalom_graph()
    docs = to_jsonld(g)
    golden = {str(p.relative_to(GOLDEN / "jsonld")): p.read_text(encoding="utf-8")
              for p in (GOLDEN / "jsonld").glob("*/*.json")}
    assert docs == golden
    assert AAT_PERFORMANCES in docs["B/absalon-absalon-festival-d-avignon-2024.json"]
    assert from_jsonld(docs) == g
    write_jsonld(g, tmp_path)
    assert read_jsonld(tmp_path) == g


def test_empty_graph_has_no_documents():
    assert to_jsonld(ProductionGraph()) == {}
    assert to_ntriples(ProductionGraph()) == ""


def test_invalid_graph_refused():
    with pytest.raises(GraphError) as info:
        to_jsonld(ProductionGraph([PROD]))
    assert info.value.violations[0].rule == "reference"
    with pytest.raises(GraphError):
        to_ntriples(ProductionGraph([PROD]))


def test_jsonld_parse_errors():
    text = next(iter(to_jsonld(absalom_graph()).values()))
    with pytest.raises(ParseError) as info:
        from_jsonld(text[: len(text) // 2])
    assert ":" in str(info.value)
    with pytest.raises(UnsupportedPatternError):
        from_jsonld('{"id": "urn:x", "type": "Spaceship"}')
    with pytest.raises(ParseError):
        from_jsonld('{"id": "urn:x", "type": "PropositionalObject"}')


# -- N-Triples ------------------------------------------------------------------


def test_ntriples_minimal_work():
    lines = to_ntriples(ProductionGraph([DIRECTOR, WORK])).splitlines()
    work_lines = [ln for ln in lines if ln.startswith("<urn:a:1>")]
    preds = sorted(ln.split()[1].rsplit("#", 1)[-1].rstrip(">") for ln in work_lines)
    assert preds == ["director", "title", "type", "year"]
    assert any('"Coquin de Coq"@fr' in ln for ln in work_lines)


def test_ntriples_golden_and_round_trip():
    g = absalom_graph()
    nt = to_ntriples(g)
    assert nt == (GOLDEN / "absalom.nt").read_text(encoding="utf-8")
    assert nt.splitlines() == sorted(nt.splitlines())
    again = from_ntriples(nt)
    assert again == g
    assert to_ntriples(again) == nt


def test_ntriples_parse_error():
    with pytest.raises(ParseError):
        from_ntriples("<a> <b> c .\n")


# -- random graphs round-trip ---------------------------------------------------

_text = st.text(st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=15).filter(str.strip)
_roles = st.sampled_from(sorted(t.id for t in default_vocabularies().roles))
_day = st.dates(date(1947, 1, 1), date(2030, 12, 31))


@st.composite
def graphs(draw):
    g = ProductionGraph()
    people = [Person(f"urn:person:{i}", draw(_text)) for i in range(draw(st.integers(1, 3)))]
    groups = [Group(f"urn:group:{i}", draw(_text)) for i in range(draw(st.integers(0, 2)))]
    place = Place("urn:place:0", draw(_text))
    obj = HumanMadeObject("urn:obj:0", LangString(draw(_text), draw(st.sampled_from(["fr", "en", "de"]))))
    for e in [*people, *groups, place, obj]:
        g.add(e)
    agents = [a.id for a in people + groups]
    for w in range(draw(st.integers(1, 2))):
        work = WorkConcept(f"urn:work:{w}", LangString(draw(_text)), draw(st.sampled_from(people)).id,
                           draw(st.integers(1947, 2030)),
                           tuple(Influence(t, r) for t, r in draw(st.lists(
                               st.tuples(st.sampled_from([obj.id, people[0].id]),
                                         st.sampled_from(["text-source", "author", "inspiration"])),
                               max_size=2))))
        g.add(work)
        for b in range(draw(st.integers(0, 2))):
            start = draw(_day)
            span = Timespan(start, start + timedelta(days=draw(st.integers(0, 30))))
            cast = tuple(dict.fromkeys(CastEntry(a, r) for a, r in draw(st.lists(
                st.tuples(st.sampled_from(agents), _roles), max_size=4))))
            prod = Production(f"urn:prod:{w}-{b}", work.id, LangString(draw(_text), "fr"),
                              venue=draw(st.sampled_from([None, place.id])), timespan=span,
                              cast_and_crew=cast,
                              funders=tuple(g2.id for g2 in groups if draw(st.booleans())),
                              programmed_by=groups[0].id if groups and draw(st.booleans()) else None)
            g.add(prod)
            for c in range(draw(st.integers(0, 2))):
                day = span.begin + timedelta(days=draw(st.integers(0, (span.end - span.begin).days)))
                g.add(ShowEvent(
                    f"urn:show:{w}-{b}-{c}", prod.id, day,
                    draw(st.sampled_from([None, time(20, 30), time(0, 0)])),
                    draw(st.sampled_from([None, 90])),
                    tuple(CastChange(a, r, k) for a, r, k in draw(st.lists(
                        st.tuples(st.sampled_from(agents), _roles, st.sampled_from(["addition", "removal"])),
                        max_size=2))),
                    draw(st.one_of(st.none(), _text)),
                ))
    return g


@settings(max_examples=60, deadline=None)
@given(graphs())
def test_random_graph_round_trips(g):
    assert validate_graph(g) == []
    docs = to_jsonld(g)
    assert from_jsonld(docs) == g
    nt = to_ntriples(g)
    assert from_ntriples(nt) == g
    assert to_ntriples(from_ntriples(nt)) == nt
    assert to_jsonld(from_jsonld(docs)) == docs
