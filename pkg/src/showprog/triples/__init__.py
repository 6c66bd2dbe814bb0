"""Draft parsing, rewards, step scoring and mapping onto the ontology."""

from .catalog import Binding, CatalogEntry, PropertyCatalog
from .draft import Draft, LangLiteral, Triple, parse_draft, render_draft
from .mapping import Fragments, merge_graphs, normalize_date, triples_to_entities
from .reward import (
    HttpJudge,
    Judge,
    RewardScore,
    RubricJudge,
    formal_reward,
    load_judge_template,
    parse_grade,
    render_judge_prompt,
    soft_reward,
)
from .step import (
    StepBatch,
    StepLog,
    StepSummary,
    read_step_log,
    read_trace,
    replay,
    score_step,
    synthetic_trace,
    write_trace,
)

__all__ = [
    "Binding", "CatalogEntry", "Draft", "Fragments", "HttpJudge", "Judge", "LangLiteral",
    "PropertyCatalog", "RewardScore", "RubricJudge", "StepBatch", "StepLog", "StepSummary",
    "Triple", "formal_reward", "load_judge_template", "merge_graphs", "normalize_date",
    "parse_draft", "parse_grade", "read_step_log", "read_trace", "render_draft",
    "render_judge_prompt", "replay", "score_step", "soft_reward", "synthetic_trace",
    "triples_to_entities", "write_trace",
]
