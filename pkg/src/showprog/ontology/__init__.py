"""Work / Production / Show knowledge graph with JSON-LD and N-Triples I/O."""

from .examples import absalom_graph
from .graph import ProductionGraph, Violation, add_entity, graph_warnings, validate_graph
from .jsonld import LINKED_ART_CONTEXT, from_jsonld, parse_document, read_jsonld, to_jsonld, write_jsonld
from .model import (
    DEFAULT_BASE,
    CastChange,
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
    slugify,
)
from .ntriples import from_ntriples, to_ntriples
from .vocab import Term, Vocabularies, Vocabulary, default_vocabularies, load_vocabularies

__all__ = [
    "CastChange", "CastEntry", "DEFAULT_BASE", "Group", "HumanMadeObject", "Influence",
    "LINKED_ART_CONTEXT", "LangString", "Person", "Place", "Production", "ProductionGraph",
    "ShowEvent", "Term", "Timespan", "Violation", "Vocabularies", "Vocabulary", "WorkConcept",
    "absalom_graph", "add_entity", "default_vocabularies", "from_jsonld", "from_ntriples",
    "graph_warnings", "load_vocabularies", "mint_iri", "parse_document", "read_jsonld", "slugify",
    "to_jsonld", "to_ntriples", "validate_graph", "write_jsonld",
]
