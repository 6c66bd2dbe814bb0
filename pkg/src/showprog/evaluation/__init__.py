"""Transcription scoring at document, line and entity granularity."""

from .lines import LineAlignment, LineMatch, align_lines
from .metrics import cer, edit_distance, jaccard, levenshtein_ratio, ngrams, tokenize, wer
from .ner import BaselineExtractor, Entity, EntitySet, NerResult, load_gazetteer, ner_prf
from .report import (
    METRICS,
    Aggregate,
    EvalConfig,
    EvalPair,
    EvalReport,
    FileMatch,
    PairScores,
    aggregate,
    build_report,
    evaluate_dirs,
    make_pair,
    match_files,
    score_pair,
)

__all__ = [
    "Aggregate", "BaselineExtractor", "Entity", "EntitySet", "EvalConfig", "EvalPair",
    "EvalReport", "FileMatch", "LineAlignment", "LineMatch", "METRICS", "NerResult",
    "PairScores", "aggregate", "align_lines", "build_report", "cer", "edit_distance",
    "evaluate_dirs", "jaccard", "levenshtein_ratio", "load_gazetteer", "make_pair",
    "match_files", "ner_prf", "ngrams", "score_pair", "tokenize", "wer",
]
