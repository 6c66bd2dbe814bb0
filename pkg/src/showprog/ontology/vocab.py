"""Controlled vocabularies loaded from versioned ``term_id<TAB>label<TAB>iri`` files."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from ..errors import ConfigurationError, MissingDataError

PERFORMANCES = "300069200"
PRIMARY_NAME = "300404670"
LANGUAGE_TERMS = {"en": "300388277", "fr": "300388306"}
LANGUAGE_FALLBACK = "https://example.org/showprog/lang/"

EXT_NS = "https://example.org/showprog/ns#"


@dataclass(frozen=True)
class Term:
    id: str
    label: str
    iri: str


class Vocabulary:
    def __init__(self, name: str, terms: list[Term]):
        self.name = name
        self._by_id = {t.id: t for t in terms}
        self._by_iri = {t.iri: t for t in terms}

    def __contains__(self, term_id: str) -> bool:
        return term_id in self._by_id

    def __len__(self) -> int:
        return len(self._by_id)

    def __iter__(self):
        return iter(self._by_id.values())

    def get(self, term_id: str) -> Term:
        try:
            return self._by_id[term_id]
        except KeyError:
            raise MissingDataError(f"{self.name}: unknown term {term_id!r}") from None

    def by_iri(self, iri: str) -> Term:
        try:
            return self._by_iri[iri]
        except KeyError:
            raise MissingDataError(f"{self.name}: unknown term IRI {iri!r}") from None

    @classmethod
    def loads(cls, name: str, text: str) -> "Vocabulary":
        rows = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        reader = csv.DictReader(rows, delimiter="\t")
        if reader.fieldnames != ["term_id", "label", "iri"]:
            raise ConfigurationError(f"{name}: expected header term_id, label, iri")
        return cls(name, [Term(r["term_id"], r["label"], r["iri"]) for r in reader])

    @classmethod
    def load(cls, path: Path) -> "Vocabulary":
        path = Path(path)
        return cls.loads(path.name, path.read_text(encoding="utf-8"))


def _bundled(name: str) -> Vocabulary:
    text = resources.files("showprog.ontology").joinpath("data", name).read_text(encoding="utf-8")
    return Vocabulary.loads(name, text)


@dataclass(frozen=True)
class Vocabularies:
    aat: Vocabulary
    roles: Vocabulary
    ext: Vocabulary

    def language_iri(self, code: str) -> str:
        term = LANGUAGE_TERMS.get(code)
        if term and term in self.aat:
            return self.aat.get(term).iri
        return LANGUAGE_FALLBACK + code

    def language_code(self, iri: str) -> str:
        if iri.startswith(LANGUAGE_FALLBACK):
            return iri[len(LANGUAGE_FALLBACK):]
        term = self.aat.by_iri(iri).id
        for code, tid in LANGUAGE_TERMS.items():
            if tid == term:
                return code
        raise MissingDataError(f"no language code for {iri}")

    def language_label(self, code: str) -> str:
        term = LANGUAGE_TERMS.get(code)
        return self.aat.get(term).label if term and term in self.aat else code

    def term(self, term_id: str) -> Term:
        """Look a term up in AAT, then the extension list."""
        if term_id in self.aat:
            return self.aat.get(term_id)
        return self.ext.get(term_id)

    def resolve_iri(self, iri: str) -> str:
        for vocab in (self.aat, self.ext, self.roles):
            try:
                return vocab.by_iri(iri).id
            except MissingDataError:
                continue
        raise MissingDataError(f"unknown vocabulary IRI {iri!r}")


@lru_cache(maxsize=1)
def default_vocabularies() -> Vocabularies:
    return Vocabularies(_bundled("aat.tsv"), _bundled("bnf-roles.tsv"), _bundled("extension.tsv"))


def load_vocabularies(aat: Path | None = None, roles: Path | None = None,
                      ext: Path | None = None) -> Vocabularies:
    base = default_vocabularies()
    return Vocabularies(
        Vocabulary.load(aat) if aat else base.aat,
        Vocabulary.load(roles) if roles else base.roles,
        Vocabulary.load(ext) if ext else base.ext,
    )
