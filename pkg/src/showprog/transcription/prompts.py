"""Transcription prompt templates."""

from __future__ import annotations

import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..errors import ConfigurationError

STANDARD = "standard"
FALLBACK = "fallback"

_STANDARD_FILE = "standard.txt"
_FALLBACK_PREFIX_FILE = "fallback_prefix.txt"


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str
    kind: str = STANDARD  # or "fallback-prefixed"

    def render(self, **slots: str) -> str:
        # $-placeholders only; literal text (quotes, colons, braces) passes through.
        return string.Template(self.body).safe_substitute(**slots)


def _read(template_dir: Path | None, name: str) -> str:
    if template_dir is None:
        res = resources.files(__package__).joinpath("templates", name)
        return res.read_text(encoding="utf-8")
    path = Path(template_dir) / name
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ConfigurationError(f"missing prompt template: {path}") from exc


def load_templates(template_dir: Path | None = None) -> dict[str, PromptTemplate]:
    standard = _read(template_dir, _STANDARD_FILE)
    prefix = _read(template_dir, _FALLBACK_PREFIX_FILE)
    return {
        STANDARD: PromptTemplate(STANDARD, standard, STANDARD),
        FALLBACK: PromptTemplate(FALLBACK, prefix + standard, "fallback-prefixed"),
    }


def build_prompt(kind: str = STANDARD, template_dir: Path | None = None, **slots: str) -> str:
    templates = load_templates(template_dir)
    if kind not in templates:
        raise ConfigurationError(f"unknown prompt kind {kind!r}")
    return templates[kind].render(**slots)
