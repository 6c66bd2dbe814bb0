"""Token-delimited drafts: thinking trace, strategy trace, then subject/property/object data."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from ..errors import MalformedDraftError

THINKING_START, THINKING_END = "<|thinking_start|>", "<|thinking_end|>"
STRATEGY_START, STRATEGY_END = "<|strategy_start|>", "<|strategy_end|>"
DATA_START, DATA_END = "<|data_start|>", "<|data_end|>"
SUBJECT, PROPERTY, OBJECT = "<|subject|>", "<|property|>", "<|object|>"

TOKENS = (THINKING_START, THINKING_END, STRATEGY_START, STRATEGY_END,
          DATA_START, DATA_END, SUBJECT, PROPERTY, OBJECT)
_TOKEN_RE = re.compile("|".join(re.escape(t) for t in TOKENS))

# Either quote character may open or close each string; generators mix them.
_LITERAL_RE = re.compile(
    r"""^\{\s*['"]text['"]\s*:\s*['"](?P<text>.*?)['"]\s*,\s*"""
    r"""['"]language['"]\s*:\s*['"](?P<lang>[^'"]*)['"]\s*\}$""",
    re.DOTALL,
)


@dataclass(frozen=True)
class LangLiteral:
    text: str
    language: str

    def render(self) -> str:
        return f"{{'text': '{self.text}', 'language': '{self.language}'}}"

    def __str__(self) -> str:
        return self.text


ObjectValue = Union[str, LangLiteral]


@dataclass(frozen=True)
class Triple:
    property: str
    object: ObjectValue

    @property
    def text(self) -> str:
        return str(self.object)


@dataclass(frozen=True)
class Draft:
    thinking: str
    strategy: str
    subject: str
    triples: tuple[Triple, ...]

    def properties(self) -> list[str]:
        return [t.property for t in self.triples]

    def values(self, prop: str) -> list[ObjectValue]:
        return [t.object for t in self.triples if t.property == prop]


def parse_object(raw: str) -> ObjectValue:
    text = raw.strip()
    m = _LITERAL_RE.match(text)
    if m:
        return LangLiteral(m.group("text"), m.group("lang").strip())
    return text


def _sections(raw: str) -> tuple[dict[str, str], list[tuple[str, int]]]:
    """Split on the outer section delimiters, checking order and balance."""
    pairs = [(THINKING_START, THINKING_END, "thinking"), (STRATEGY_START, STRATEGY_END, "strategy"),
             (DATA_START, DATA_END, "data")]
    tokens = [(m.group(), m.start()) for m in _TOKEN_RE.finditer(raw)]
    outer = [(t, off) for t, off in tokens if t not in (SUBJECT, PROPERTY, OBJECT)]
    found: dict[str, str] = {}
    cursor, last_rank, i = 0, -1, 0
    while i < len(outer):
        tok, off = outer[i]
        rank = next((r for r, (s, _, _) in enumerate(pairs) if s == tok), None)
        if rank is None:
            raise MalformedDraftError(f"unexpected {tok}", off)
        start, end, name = pairs[rank]
        if rank <= last_rank:
            raise MalformedDraftError(f"{name} section out of order or repeated", off)
        if raw[cursor:off].strip():
            raise MalformedDraftError("text outside any section", cursor + _lead(raw[cursor:off]))
        if i + 1 >= len(outer) or outer[i + 1][0] != end:
            raise MalformedDraftError(f"{start} is not closed by {end}", off)
        close = outer[i + 1][1]
        inner_start = off + len(start)
        for t, o in tokens:
            if inner_start <= o < close and name != "data":
                raise MalformedDraftError(f"{t} inside the {name} section", o)
        found[name] = raw[inner_start:close]
        cursor = close + len(end)
        last_rank = rank
        i += 2
    if raw[cursor:].strip():
        raise MalformedDraftError("text after the last section", cursor + _lead(raw[cursor:]))
    data_tokens = [(t, o) for t, o in tokens if t in (SUBJECT, PROPERTY, OBJECT)]
    return found, data_tokens


def _lead(s: str) -> int:
    return len(s) - len(s.lstrip())


def parse_draft(raw: str) -> Draft:
    """Parse a draft; raises :class:`MalformedDraftError` with a character offset."""
    sections, _ = _sections(raw)
    if "data" not in sections:
        raise MalformedDraftError("missing data section", len(raw))
    data = sections["data"]
    base = raw.index(DATA_START) + len(DATA_START)
    parts = [(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(data)]
    if not parts or parts[0][0] != SUBJECT:
        raise MalformedDraftError("data section must open with <|subject|>", base)
    if data[: parts[0][1]].strip():
        raise MalformedDraftError("text before <|subject|>", base)
    bounds = parts + [("", len(data), len(data))]
    subject = data[parts[0][2]: bounds[1][1]].strip()
    if not subject:
        raise MalformedDraftError("empty subject", base + parts[0][1])
    triples = []
    k = 1
    while k < len(parts):
        tok, start, end = parts[k]
        if tok != PROPERTY:
            raise MalformedDraftError(f"expected <|property|>, found {tok}", base + start)
        if k + 1 >= len(parts) or parts[k + 1][0] != OBJECT:
            raise MalformedDraftError("<|property|> without <|object|>", base + start)
        label = data[end: parts[k + 1][1]].strip()
        if not label:
            raise MalformedDraftError("empty property label", base + start)
        obj_raw = data[parts[k + 1][2]: bounds[k + 2][1]]
        obj = parse_object(obj_raw)
        if not str(obj).strip() and not isinstance(obj, LangLiteral):
            raise MalformedDraftError("empty object", base + parts[k + 1][1])
        triples.append(Triple(label, obj))
        k += 2
    if not triples:
        raise MalformedDraftError("a draft needs at least one triple", base)
    return Draft(
        sections.get("thinking", "").strip("\n"),
        sections.get("strategy", "").strip("\n"),
        subject,
        tuple(triples),
    )


def render_draft(draft: Draft) -> str:
    lines = [THINKING_START, draft.thinking, THINKING_END, "",
             STRATEGY_START, draft.strategy, STRATEGY_END, "",
             DATA_START, f" {SUBJECT}{draft.subject}"]
    for t in draft.triples:
        obj = t.object.render() if isinstance(t.object, LangLiteral) else t.object
        lines.append(f" {PROPERTY}{t.property}{OBJECT}{obj}")
    lines.append(DATA_END)
    return "\n".join(lines) + "\n"
