"""Markdown transcriptions: titles, body text, page markers and the unreadable sentinel."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

UNTRANSCRIBABLE = "[UNABLE TO TRANSCRIBE]"

TITLE = "title"
BODY = "body"
PAGE_MARKER = "page-marker"
UNREADABLE = "untranscribable"

_PAGE_RE = re.compile(r"^PAGE\s+(\S+)$")
_MD_FILE_RE = re.compile(r"^(\d+)\.md$")


@dataclass(frozen=True)
class Block:
    kind: str
    text: str

    def render(self) -> str:
        if self.kind == TITLE:
            return f"# {self.text}"
        if self.kind == PAGE_MARKER:
            return f"PAGE {self.text}"
        if self.kind == UNREADABLE:
            return UNTRANSCRIBABLE
        return self.text


@dataclass
class TranscriptionDoc:
    doc_id: str = ""
    page_index: int = 0
    blocks: list[Block] = field(default_factory=list)
    # Set when the service refused the page even with the fallback prompt.
    policy_refused: bool = False

    @classmethod
    def untranscribable(cls, doc_id="", page_index=0, policy_refused=False):
        return cls(doc_id, page_index, [Block(UNREADABLE, "")], policy_refused)

    @property
    def is_untranscribable(self) -> bool:
        return len(self.blocks) == 1 and self.blocks[0].kind == UNREADABLE

    def render(self) -> str:
        return "\n".join(b.render() for b in self.blocks)

    def lines(self) -> list[str]:
        """Non-blank text lines, titles without their ``#`` marker."""
        out = []
        for block in self.blocks:
            if block.kind == UNREADABLE:
                continue
            for line in block.text.split("\n"):
                if line.strip():
                    out.append(line.strip())
        return out

    def text(self) -> str:
        return "\n".join(self.lines())


def parse_markdown(raw: str, doc_id: str = "", page_index: int = 0) -> TranscriptionDoc:
    """Split a transcription into blocks. Never fails.

    Consecutive plain lines (blank ones included) form a single body block so
    that rendering gives back the input up to trailing whitespace.
    """
    lines = [line.rstrip() for line in raw.rstrip().split("\n")] if raw.strip() else []
    if lines and any(l.strip() == UNTRANSCRIBABLE for l in lines):
        if all(l.strip() in ("", UNTRANSCRIBABLE) for l in lines) and sum(
            l.strip() == UNTRANSCRIBABLE for l in lines
        ) == 1:
            return TranscriptionDoc.untranscribable(doc_id, page_index)

    blocks: list[Block] = []
    body: list[str] = []

    def flush():
        if body:
            blocks.append(Block(BODY, "\n".join(body)))
            body.clear()

    for line in lines:
        if line.startswith("# "):
            flush()
            blocks.append(Block(TITLE, line[2:]))
            continue
        m = _PAGE_RE.match(line)
        if m:
            flush()
            blocks.append(Block(PAGE_MARKER, m.group(1)))
            continue
        body.append(line)
    flush()
    return TranscriptionDoc(doc_id, page_index, blocks)


def transcription_path(root: Path, doc_id: str, page_index: int) -> Path:
    return Path(root) / doc_id / f"{page_index}.md"


def write_transcription(root: Path, doc: TranscriptionDoc) -> Path:
    path = transcription_path(root, doc.doc_id, doc.page_index)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(doc.render() + "\n", encoding="utf-8")
    return path


def read_transcription(path: Path, doc_id: str, page_index: int) -> TranscriptionDoc:
    return parse_markdown(Path(path).read_text(encoding="utf-8"), doc_id, page_index)


def iter_transcriptions(root: Path) -> Iterator[tuple[str, int, Path]]:
    root = Path(root)
    for doc_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        found = []
        for path in doc_dir.iterdir():
            m = _MD_FILE_RE.match(path.name)
            if m:
                found.append((int(m.group(1)), path))
        for index, path in sorted(found):
            yield doc_dir.name, index, path
