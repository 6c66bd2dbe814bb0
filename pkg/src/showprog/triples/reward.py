"""Formal and judge-based rewards for drafts."""

from __future__ import annotations

import re
import string
import threading
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Protocol

import httpx

from ..errors import ConfigurationError, GatedDraftError, TransportError
from .catalog import PropertyCatalog
from .draft import Draft, LangLiteral

GRADE_MIN, GRADE_MAX = 0, 10


@dataclass(frozen=True)
class RewardScore:
    formal_pass: bool
    grade: int | None = None
    violations: tuple[str, ...] = ()

    def __post_init__(self):
        if self.grade is not None and not self.formal_pass:
            raise ValueError("a draft that fails the formal reward cannot carry a grade")

    @property
    def reward(self) -> int:
        """What the draft earns: zero on formal failure or a missing grade."""
        return self.grade if self.formal_pass and self.grade is not None else 0


def formal_reward(draft: Draft, catalog: PropertyCatalog) -> RewardScore:
    """Pass iff every property is catalogued and none repeats."""
    labels = [p.strip() for p in draft.properties()]
    violations = []
    for label in dict.fromkeys(labels):
        if label not in catalog:
            violations.append(f"unknown property: {label}")
    for label, n in Counter(labels).items():
        if n > 1:
            violations.append(f"duplicate property: {label}")
    return RewardScore(not violations, None, tuple(violations))


# -- judge --------------------------------------------------------------------


class Judge(Protocol):
    def __call__(self, prompt: str) -> str: ...


def load_judge_template(path: Path | None = None) -> string.Template:
    if path is None:
        text = resources.files("showprog.triples").joinpath("data").joinpath("judge_prompt.txt").read_text(encoding="utf-8")
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigurationError(f"cannot read judge template {path}: {exc}") from exc
    return string.Template(text)


def data_lines(draft: Draft) -> str:
    out = [f"subject: {draft.subject}"]
    for t in draft.triples:
        value = f"{t.object.text} @{t.object.language}" if isinstance(t.object, LangLiteral) else t.object
        out.append(f"{t.property}: {value}")
    return "\n".join(out)


def render_judge_prompt(draft: Draft, ground_truth: Draft, catalog: PropertyCatalog,
                        template: string.Template | None = None) -> str:
    template = template or load_judge_template()
    return template.safe_substitute(
        rules=catalog.rules_text(),
        ground_truth=data_lines(ground_truth),
        candidate=data_lines(draft),
    )


_GRADE_RE = re.compile(r"^\s*(?:grade\s*[:=]\s*)?(\d{1,2})\s*(?:/\s*10)?\s*\.?\s*$", re.IGNORECASE)


def parse_grade(text: str, grade_range: tuple[int, int] = (GRADE_MIN, GRADE_MAX)) -> int | None:
    m = _GRADE_RE.match(text)
    if not m:
        return None
    grade = int(m.group(1))
    return grade if grade_range[0] <= grade <= grade_range[1] else None


def soft_reward(
    draft: Draft,
    ground_truth: Draft,
    judge: Judge,
    catalog: PropertyCatalog,
    template: string.Template | None = None,
    formal: RewardScore | None = None,
    retries: int = 1,
    grade_range: tuple[int, int] = (GRADE_MIN, GRADE_MAX),
) -> RewardScore:
    """Ask the judge for a grade, 0 to 10 unless ``grade_range`` says otherwise.

    The draft must already have passed the formal reward. An unusable
    answer is retried ``retries`` times, then the grade is left absent and
    the failure recorded as a violation. Transport errors propagate.
    """
    formal = formal or formal_reward(draft, catalog)
    if not formal.formal_pass:
        raise GatedDraftError("draft failed the formal reward; it must not reach the judge")
    prompt = render_judge_prompt(draft, ground_truth, catalog, template)
    answers = []
    for _ in range(retries + 1):
        answer = judge(prompt)
        grade = parse_grade(answer, grade_range)
        if grade is not None:
            return RewardScore(True, grade, formal.violations)
        answers.append(answer)
    shown = ", ".join(repr(a[:40]) for a in answers)
    return RewardScore(True, None, formal.violations + (f"unusable judge answer: {shown}",))


# -- stub and HTTP judges -----------------------------------------------------

_SECTION_RE = {tag: re.compile(rf"<{tag}>\n?(.*?)\n?</{tag}>", re.DOTALL) for tag in ("ground_truth", "candidate")}


def _norm(value: str) -> str:
    return " ".join(value.casefold().split())


def _partial(a: str, b: str) -> bool:
    if not a or not b:
        return False
    if a.startswith(b) or b.startswith(a) or a in b or b in a:
        return True
    wa, wb = set(a.split()), set(b.split())
    return len(wa & wb) * 2 >= max(len(wa), len(wb))


def _fields(block: str) -> dict[str, str]:
    out = {}
    for line in block.splitlines():
        key, sep, value = line.partition(": ")
        if sep:
            out[key.strip()] = _norm(value)
    return out


@dataclass
class RubricJudge:
    """Deterministic offline judge reading the prompt's tagged data blocks.

    Each ground-truth field earns 1 for an exact (case- and space-folded)
    match, 0.5 for a partial one (prefix, containment or half the words).
    The grade is ``floor(10 * credit / max(|truth|, |candidate|))``, so
    extra fields cost as much as missing ones. ``answers`` can script raw
    replies to exercise the unusable-answer path.
    """

    answers: list[str] = field(default_factory=list)
    calls: int = 0
    prompts: list[str] = field(default_factory=list)

    def __post_init__(self):
        self._lock = threading.Lock()

    def grade(self, prompt: str) -> int:
        blocks = {}
        for tag, rx in _SECTION_RE.items():
            m = rx.search(prompt)
            blocks[tag] = _fields(m.group(1)) if m else {}
        truth, cand = blocks["ground_truth"], blocks["candidate"]
        denom = max(len(truth), len(cand))
        if denom == 0:
            return GRADE_MAX
        credit = 0.0
        for key, value in truth.items():
            if key in cand:
                credit += 1.0 if cand[key] == value else 0.5 if _partial(cand[key], value) else 0.0
        return int(10 * credit / denom)  # floor: only a full match earns 10

    def __call__(self, prompt: str) -> str:
        with self._lock:
            self.calls += 1
            self.prompts.append(prompt)
            if self.answers:
                return self.answers.pop(0)
        return str(self.grade(prompt))


class HttpJudge:
    """``POST {base_url}/grade`` with ``{"prompt": ...}``; expects ``{"grade": ...}``."""

    def __init__(self, base_url: str, token: str | None = None, client: httpx.Client | None = None,
                 timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.client = client or httpx.Client(timeout=timeout)
        self.headers = {"Authorization": f"Bearer {token}"} if token else {}

    def __call__(self, prompt: str) -> str:
        try:
            resp = self.client.post(self.base_url + "/grade", json={"prompt": prompt}, headers=self.headers)
        except httpx.TransportError as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code >= 500 or resp.status_code == 429:
            raise TransportError(f"judge: HTTP {resp.status_code}")
        resp.raise_for_status()
        return str(resp.json().get("grade", ""))
