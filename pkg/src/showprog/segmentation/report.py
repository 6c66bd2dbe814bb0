"""Segmentation bookkeeping: one record per document plus corpus summaries."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path


@dataclass
class DocumentRecord:
    doc_id: str
    year: int
    born_digital: bool
    pages_in: int
    subpages_out: int
    phase: str  # "pre-only" | "post-applied"
    separators: list[list[int]] = field(default_factory=list)
    widths: list[int] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "DocumentRecord":
        return cls(**json.loads(line))


@dataclass
class SegmentationReport:
    records: list[DocumentRecord] = field(default_factory=list)

    def add(self, record: DocumentRecord) -> None:
        self.records.append(record)

    @property
    def flagged(self) -> int:
        return sum(r.phase == "post-applied" for r in self.records)

    def to_jsonl(self) -> str:
        ordered = sorted(self.records, key=lambda r: r.doc_id)
        return "".join(r.to_json() + "\n" for r in ordered)

    @classmethod
    def read_jsonl(cls, path: Path) -> "SegmentationReport":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls([DocumentRecord.from_json(line) for line in lines if line.strip()])

    def summary_markdown(self) -> str:
        """Overall results table; the correct/incorrect cells are left for reviewers."""
        groups = [
            ("All", self.records),
            ("Born-digital documents", [r for r in self.records if r.born_digital]),
            ("Digitised documents", [r for r in self.records if not r.born_digital]),
        ]
        lines = [
            "| Corpus | Correct % | Correct #page | Incorrect % | Incorrect #page | Total |",
            "|---|---|---|---|---|---|",
        ]
        for name, recs in groups:
            total = sum(r.subpages_out for r in recs)
            lines.append(f"| {name} |  |  |  |  | {total} |")
        lines += [
            "",
            f"Documents: {len(self.records)}; flagged for post-segmentation: {self.flagged}",
            "",
        ]
        return "\n".join(lines)
