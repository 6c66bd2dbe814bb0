"""Pairing of transcription trees, per-pair scoring and corpus reports."""

from __future__ import annotations

import json
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from ..errors import InvalidInputError
from ..transcription.markdown import TranscriptionDoc, iter_transcriptions, read_transcription
from .lines import align_lines
from .metrics import cer, jaccard, levenshtein_ratio, tokenize, wer
from .ner import BaselineExtractor, EntityExtractor, ner_prf

METRICS = (
    "levenshtein",
    "wer",
    "cer",
    "jaccard_words",
    "jaccard_bigrams",
    "line_precision",
    "line_recall",
    "line_levenshtein",
    "ner_precision",
    "ner_recall",
    "ner_levenshtein",
)
# Error rates are unbounded above; everything else lives in [0, 1].
ERROR_RATES = ("wer", "cer")
AGGREGATIONS = ("both", "weighted", "median")


@dataclass(frozen=True)
class EvalPair:
    reference: TranscriptionDoc
    hypothesis: TranscriptionDoc
    word_count_weight: float

    @property
    def key(self) -> tuple[str, int]:
        return self.reference.doc_id, self.reference.page_index


def make_pair(reference: TranscriptionDoc, hypothesis: TranscriptionDoc) -> EvalPair:
    # A page with no reference words still counts once.
    return EvalPair(reference, hypothesis, float(max(1, len(tokenize(reference.text())))))


@dataclass
class FileMatch:
    pairs: list[EvalPair]
    unmatched_reference: list[tuple[str, int]]
    unmatched_hypothesis: list[tuple[str, int]]


def match_files(reference_dir: Path, hypothesis_dir: Path) -> FileMatch:
    """Pair ``<doc>/<page>.md`` files of two trees by ``(doc_id, page_index)``."""
    trees = []
    for root in (Path(reference_dir), Path(hypothesis_dir)):
        if not root.is_dir():
            raise NotADirectoryError(f"not a readable directory: {root}")
        trees.append({(d, i): p for d, i, p in iter_transcriptions(root)})
    ref, hyp = trees
    pairs = [
        make_pair(read_transcription(ref[k], *k), read_transcription(hyp[k], *k))
        for k in sorted(ref.keys() & hyp.keys())
    ]
    return FileMatch(pairs, sorted(ref.keys() - hyp.keys()), sorted(hyp.keys() - ref.keys()))


@dataclass
class EvalConfig:
    line_threshold: float = 0.8
    ner_threshold: float = 0.85
    optimal_lines: bool = False
    metrics: tuple[str, ...] = METRICS
    aggregation: str = "both"
    workers: int = 1
    extractor: EntityExtractor = field(default_factory=BaselineExtractor)

    def __post_init__(self):
        unknown = set(self.metrics) - set(METRICS)
        if unknown:
            raise InvalidInputError(f"unknown metrics: {', '.join(sorted(unknown))}")
        if self.aggregation not in AGGREGATIONS:
            raise InvalidInputError(f"aggregation must be one of {AGGREGATIONS}")
        # Keep canonical column order whatever order the caller used.
        self.metrics = tuple(m for m in METRICS if m in self.metrics)


@dataclass
class PairScores:
    doc_id: str
    page_index: int
    weight: float
    scores: dict[str, float]


@dataclass(frozen=True)
class Aggregate:
    weighted_mean: float
    median: float
    std: float


def _mean_ratio(ratios: Sequence[float], empty_both: bool) -> float:
    if ratios:
        return sum(ratios) / len(ratios)
    return 1.0 if empty_both else 0.0


def score_pair(pair: EvalPair, config: EvalConfig) -> PairScores:
    ref, hyp = pair.reference, pair.hypothesis
    wanted = set(config.metrics)
    s: dict[str, float] = {}
    ref_text, hyp_text = ref.text(), hyp.text()
    if "levenshtein" in wanted:
        s["levenshtein"] = levenshtein_ratio(ref.render(), hyp.render())
    if "wer" in wanted:
        s["wer"] = wer(ref_text, hyp_text)
    if "cer" in wanted:
        s["cer"] = cer(ref_text, hyp_text)
    if "jaccard_words" in wanted:
        s["jaccard_words"] = jaccard(ref_text, hyp_text, 1)
    if "jaccard_bigrams" in wanted:
        s["jaccard_bigrams"] = jaccard(ref_text, hyp_text, 2)
    if wanted & {"line_precision", "line_recall", "line_levenshtein"}:
        al = align_lines(ref, hyp, config.line_threshold, config.optimal_lines)
        both_empty = not ref.lines() and not hyp.lines()
        s["line_precision"] = al.precision
        s["line_recall"] = al.recall
        s["line_levenshtein"] = _mean_ratio([m.ratio for m in al.matches], both_empty)
    if wanted & {"ner_precision", "ner_recall", "ner_levenshtein"}:
        r_ents, h_ents = config.extractor(ref_text), config.extractor(hyp_text)
        res = ner_prf(r_ents, h_ents, config.ner_threshold)
        s["ner_precision"] = res.precision
        s["ner_recall"] = res.recall
        s["ner_levenshtein"] = _mean_ratio(
            [m[2] for m in res.matches], len(r_ents) == 0 and len(h_ents) == 0
        )
    return PairScores(ref.doc_id, ref.page_index, pair.word_count_weight,
                      {m: s[m] for m in config.metrics})


def aggregate(values: Sequence[float], weights: Sequence[float]) -> Aggregate:
    total = sum(weights)
    wmean = sum(v * w for v, w in zip(values, weights)) / total
    # Clamp float round-off so the mean never escapes [min, max].
    wmean = min(max(wmean, min(values)), max(values))
    return Aggregate(wmean, statistics.median(values), statistics.pstdev(values))


@dataclass
class EvalReport:
    pairs: list[PairScores]
    corpus: dict[str, Aggregate]
    config: EvalConfig
    unmatched_reference: list[tuple[str, int]] = field(default_factory=list)
    unmatched_hypothesis: list[tuple[str, int]] = field(default_factory=list)

    def to_jsonl(self) -> str:
        lines = []
        for p in self.pairs:
            rec = {"record": "pair", "doc_id": p.doc_id, "page_index": p.page_index,
                   "weight": p.weight}
            rec.update({k: _r(v) for k, v in p.scores.items()})
            lines.append(json.dumps(rec, ensure_ascii=False))
        for side, items in (("reference", self.unmatched_reference),
                            ("hypothesis", self.unmatched_hypothesis)):
            for doc_id, page in items:
                lines.append(json.dumps({"record": "unmatched", "side": side, "doc_id": doc_id,
                                         "page_index": page}, ensure_ascii=False))
        corpus = {"record": "corpus", "pairs": len(self.pairs)}
        for m, a in self.corpus.items():
            if self.config.aggregation in ("both", "weighted"):
                corpus[f"{m}.weighted_mean"] = _r(a.weighted_mean)
            if self.config.aggregation in ("both", "median"):
                corpus[f"{m}.median"] = _r(a.median)
                corpus[f"{m}.std"] = _r(a.std)
        lines.append(json.dumps(corpus, ensure_ascii=False))
        return "\n".join(lines) + "\n"

    def easyocr_summary(self) -> list[tuple[str, float, float]]:
        """(metric, median, std) rows; Jaccard reported as distance ``1 - index``."""
        rows = []
        for name, metric, distance in (
            ("Jaccard (words)", "jaccard_words", True),
            ("Jaccard (2-grams)", "jaccard_bigrams", True),
            ("CER", "cer", False),
            ("WER", "wer", False),
        ):
            if metric not in self.corpus:
                continue
            values = [p.scores[metric] for p in self.pairs]
            if distance:
                values = [1.0 - v for v in values]
            rows.append((name, statistics.median(values), statistics.pstdev(values)))
        return rows

    def to_markdown(self) -> str:
        c = self.corpus
        out = ["# Transcription evaluation", "",
               f"Pairs: {len(self.pairs)}. Unmatched reference files: "
               f"{len(self.unmatched_reference)}. Unmatched hypothesis files: "
               f"{len(self.unmatched_hypothesis)}.", ""]

        def wm(m):
            return _f(c[m].weighted_mean) if m in c else "n/a"

        def pr(a, b):
            return f"{wm(a)}/{wm(b)}" if a in c or b in c else "n/a"

        if self.config.aggregation in ("both", "weighted"):
            out += ["## Word-count weighted means", "",
                    "| Lev. full document | P/R lines | Lev. lines | P/R NER | Lev. NER |",
                    "|---|---|---|---|---|",
                    f"| {wm('levenshtein')} | {pr('line_precision', 'line_recall')} | "
                    f"{wm('line_levenshtein')} | {pr('ner_precision', 'ner_recall')} | "
                    f"{wm('ner_levenshtein')} |", ""]
        if self.config.aggregation in ("both", "median"):
            summary = self.easyocr_summary()
            if summary:
                out += ["## Medians (Jaccard as distance)", "",
                        "| Metric | Score | Standard deviation |", "|---|---|---|"]
                out += [f"| {n} | {_f(m, 2)} | {_f(s, 2)} |" for n, m, s in summary]
                out.append("")
        cols = list(self.config.metrics)
        out += ["## Per page", "",
                "| doc_id | page | weight | " + " | ".join(cols) + " |",
                "|---|---|---|" + "---|" * len(cols)]
        for p in self.pairs:
            out.append(f"| {p.doc_id} | {p.page_index} | {p.weight:g} | "
                       + " | ".join(_f(p.scores[m]) for m in cols) + " |")
        if self.unmatched_reference or self.unmatched_hypothesis:
            out += ["", "## Unmatched files", ""]
            out += [f"- reference only: {d}/{i}" for d, i in self.unmatched_reference]
            out += [f"- hypothesis only: {d}/{i}" for d, i in self.unmatched_hypothesis]
        out += ["", "WER and CER with an empty reference equal the hypothesis length "
                "in tokens or characters."]
        return "\n".join(out) + "\n"


def _r(x: float) -> float:
    return round(x, 6)


def _f(x: float, digits: int = 4) -> str:
    return f"{x:.{digits}f}"


def build_report(
    pairs: Sequence[EvalPair],
    config: EvalConfig | None = None,
    unmatched_reference: Sequence[tuple[str, int]] = (),
    unmatched_hypothesis: Sequence[tuple[str, int]] = (),
) -> EvalReport:
    if not pairs:
        raise InvalidInputError("cannot build a report from zero pairs")
    config = config or EvalConfig()
    ordered = sorted(pairs, key=lambda p: p.key)
    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            scored = list(pool.map(lambda p: score_pair(p, config), ordered))
    else:
        scored = [score_pair(p, config) for p in ordered]
    weights = [p.weight for p in scored]
    corpus = {m: aggregate([p.scores[m] for p in scored], weights) for m in config.metrics}
    return EvalReport(scored, corpus, config, list(unmatched_reference), list(unmatched_hypothesis))


def evaluate_dirs(reference_dir: Path, hypothesis_dir: Path, config: EvalConfig | None = None) -> EvalReport:
    found = match_files(reference_dir, hypothesis_dir)
    return build_report(found.pairs, config, found.unmatched_reference, found.unmatched_hypothesis)
