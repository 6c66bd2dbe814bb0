"""The closed property catalog and its bindings onto ontology fields."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from ..errors import ConfigurationError

_ID_RE = re.compile(r"^P[1-9][0-9]*$")
_BINDING_RE = re.compile(r"^(?P<tier>[ABC])\.(?P<field>[a-z_]+)(?::(?P<arg>[a-z0-9-]+))?(?:@(?P<agent>group|person))?$")


@dataclass(frozen=True)
class Binding:
    """Where a property's value goes: ``B.cast:mise-en-scene`` and friends."""

    target: str  # "A.title", "B.cast", ..., or "side" / "provenance"
    argument: Optional[str] = None
    agent_kind: str = "person"

    @classmethod
    def parse(cls, text: str) -> "Binding":
        text = text.strip()
        if text in ("side", "provenance"):
            return cls(text)
        m = _BINDING_RE.match(text)
        if not m:
            raise ConfigurationError(f"bad binding {text!r}")
        return cls(f"{m['tier']}.{m['field']}", m["arg"], m["agent"] or "person")


@dataclass(frozen=True)
class CatalogEntry:
    label: str
    wikidata_id: str
    binding: Binding


class PropertyCatalog:
    def __init__(self, entries: list[CatalogEntry]):
        self.entries: dict[str, CatalogEntry] = {}
        for e in entries:
            if e.label in self.entries:
                raise ConfigurationError(f"duplicate catalog label {e.label!r}")
            if not _ID_RE.match(e.wikidata_id):
                raise ConfigurationError(f"malformed property id {e.wikidata_id!r} for {e.label!r}")
            self.entries[e.label] = e

    def __contains__(self, label: str) -> bool:
        return label in self.entries

    def __getitem__(self, label: str) -> CatalogEntry:
        return self.entries[label]

    def labels(self) -> list[str]:
        return list(self.entries)

    @classmethod
    def loads(cls, text: str) -> "PropertyCatalog":
        rows = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        reader = csv.DictReader(rows, delimiter="\t")
        if reader.fieldnames != ["label", "wikidata_id", "binding"]:
            raise ConfigurationError("catalog header must be: label, wikidata_id, binding")
        return cls([CatalogEntry(r["label"].strip(), r["wikidata_id"].strip(), Binding.parse(r["binding"]))
                    for r in reader])

    @classmethod
    def load(cls, path: Path) -> "PropertyCatalog":
        return cls.loads(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def default(cls) -> "PropertyCatalog":
        return cls.loads(resources.files("showprog.triples").joinpath("data").joinpath("catalog.tsv")
                         .read_text(encoding="utf-8"))

    def rules_text(self) -> str:
        """Human-readable rule list for the judge prompt."""
        lines = ["- Only these properties are allowed, each at most once:"]
        lines += [f"  - {e.label} ({e.wikidata_id})" for e in self.entries.values()]
        lines.append("- A title carries a language tag.")
        lines.append("- Dates of first performance are calendar dates.")
        return "\n".join(lines)
