"""Scoring of training-step batches and the step-series journal."""

from __future__ import annotations

import json
import random
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from ..errors import InvalidInputError, MalformedDraftError, ParseError
from .catalog import PropertyCatalog
from .draft import Draft, LangLiteral, Triple, parse_draft, render_draft
from .reward import GRADE_MAX, Judge, RewardScore, formal_reward, soft_reward

PROBLEMS_PER_STEP = 4
DRAFTS_PER_PROBLEM = 8


@dataclass(frozen=True)
class StepBatch:
    step_index: int
    problems: tuple[str, ...]
    drafts: tuple[tuple[str, ...], ...]  # raw draft text, one row per problem
    scores: tuple[tuple[RewardScore, ...], ...] | None = None

    def check_complete(self, problems: int = PROBLEMS_PER_STEP, drafts: int = DRAFTS_PER_PROBLEM) -> None:
        if self.step_index < 0:
            raise InvalidInputError(f"negative step index {self.step_index}")
        if len(self.problems) != problems or len(self.drafts) != problems:
            raise InvalidInputError(f"step {self.step_index}: expected {problems} problems, "
                                    f"got {len(self.problems)} ids and {len(self.drafts)} draft rows")
        for pid, row in zip(self.problems, self.drafts):
            if len(row) != drafts:
                raise InvalidInputError(f"step {self.step_index}: problem {pid} has {len(row)} drafts, "
                                        f"expected {drafts}")

    def flat_scores(self) -> list[RewardScore]:
        return [s for row in self.scores or () for s in row]


@dataclass(frozen=True)
class StepSummary:
    step_index: int
    mean_grade: float
    pass_rate: float
    judged: int
    absent: int

    def to_record(self) -> dict:
        return {
            "step": self.step_index,
            "mean_grade": round(self.mean_grade, 6),
            "pass_rate": round(self.pass_rate, 6),
            "judged": self.judged,
            "absent": self.absent,
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> "StepSummary":
        return cls(int(rec["step"]), float(rec["mean_grade"]), float(rec["pass_rate"]),
                   int(rec["judged"]), int(rec["absent"]))


def summarize(step_index: int, scores: list[RewardScore]) -> StepSummary:
    """Mean reward with formal failures and absent grades counted as zero."""
    n = len(scores)
    passed = sum(s.formal_pass for s in scores)
    judged = sum(s.grade is not None for s in scores)
    return StepSummary(step_index, sum(s.reward for s in scores) / n if n else 0.0,
                       passed / n if n else 0.0, judged, passed - judged)


def _score_one(raw: str, truth: Draft, catalog: PropertyCatalog, judge: Judge, template,
               grade_range: tuple[int, int]) -> RewardScore:
    try:
        draft = parse_draft(raw)
    except MalformedDraftError as exc:
        return RewardScore(False, None, (f"malformed draft: {exc}",))
    formal = formal_reward(draft, catalog)
    if not formal.formal_pass:
        return formal
    return soft_reward(draft, truth, judge, catalog, template, formal=formal, grade_range=grade_range)


def score_step(
    batch: StepBatch,
    catalog: PropertyCatalog,
    ground_truths: Mapping[str, Draft],
    judge: Judge,
    workers: int = 1,
    template=None,
    problems: int = PROBLEMS_PER_STEP,
    drafts: int = DRAFTS_PER_PROBLEM,
    grade_range: tuple[int, int] = (0, GRADE_MAX),
) -> tuple[StepBatch, StepSummary]:
    """Gate every draft, send only passers to the judge, and summarize."""
    batch.check_complete(problems, drafts)
    missing = [p for p in batch.problems if p not in ground_truths]
    if missing:
        raise InvalidInputError(f"no ground truth for problem(s): {', '.join(missing)}")
    jobs = [(raw, ground_truths[pid]) for pid, row in zip(batch.problems, batch.drafts) for raw in row]
    run = lambda job: _score_one(job[0], job[1], catalog, judge, template, grade_range)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            flat = list(pool.map(run, jobs))
    else:
        flat = [run(job) for job in jobs]
    rows = tuple(tuple(flat[i * drafts:(i + 1) * drafts]) for i in range(problems))
    scored = StepBatch(batch.step_index, batch.problems, batch.drafts, rows)
    return scored, summarize(batch.step_index, flat)


# -- journal ------------------------------------------------------------------


def dumps_record(record: Mapping) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False, separators=(",", ":")) + "\n"


@dataclass
class StepLog:
    """Append-only, single-writer JSONL journal of step summaries."""

    path: Path
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        self.path = Path(self.path)

    def append(self, summary: StepSummary) -> None:
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(dumps_record(summary.to_record()))

    def read(self) -> list[StepSummary]:
        return read_step_log(self.path)


def read_step_log(path: Path) -> list[StepSummary]:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append(StepSummary.from_record(json.loads(line)))
        except (ValueError, KeyError) as exc:
            raise ParseError(f"{path}:{lineno}: bad step record ({exc})") from None
    return out


# -- traces -------------------------------------------------------------------


def write_trace(batches: Iterable[StepBatch], path: Path) -> None:
    """One JSON line per step holding the raw drafts; scores are not stored."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for b in batches:
            fh.write(dumps_record({"step": b.step_index, "problems": list(b.problems),
                                   "drafts": [list(row) for row in b.drafts]}))


def read_trace(path: Path) -> Iterator[StepBatch]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                yield StepBatch(int(rec["step"]), tuple(rec["problems"]),
                                tuple(tuple(row) for row in rec["drafts"]))
            except (ValueError, KeyError, TypeError) as exc:
                raise ParseError(f"{path}:{lineno}: bad trace record ({exc})") from None


def replay(
    trace: Iterable[StepBatch],
    catalog: PropertyCatalog,
    ground_truths: Mapping[str, Draft],
    judge: Judge,
    log: StepLog | None = None,
    workers: int = 1,
    template=None,
    **step_options,
) -> list[StepSummary]:
    out = []
    for batch in trace:
        _, summary = score_step(batch, catalog, ground_truths, judge, workers, template, **step_options)
        if log is not None:
            log.append(summary)
        out.append(summary)
    return out


# -- synthetic problems and drafts --------------------------------------------

_TITLES = ["Coquin de Coq", "Le Roi Lear", "La Mouette", "Les Bonnes", "Fin de partie", "Le Cid",
           "Britannicus", "La Cerisaie", "Les Paravents", "Ubu roi", "Lorenzaccio", "Phèdre"]
_PEOPLE = ["Guy Rétoré", "Jean Vilar", "Ariane Mnouchkine", "Antoine Vitez", "Patrice Chéreau",
           "Roger Planchon", "Georges Wilson", "Maria Casarès", "Sean O'Casey", "Jean Genet",
           "Anton Tchekhov", "Alfred Jarry"]
_COMPANIES = ["Le Théâtre de l'Est Parisien", "Théâtre National Populaire", "Théâtre du Soleil",
              "Comédie-Française", "Théâtre de la Cité"]
_MONTHS = ["juin", "juillet", "août"]


def synthetic_problems(n: int, seed: int = 0) -> dict[str, Draft]:
    """``n`` ground-truth drafts drawn from small French programme vocabularies."""
    rng = random.Random(seed)
    out = {}
    for i in range(n):
        title = rng.choice(_TITLES)
        director, author = rng.sample(_PEOPLE, 2)
        triples = (
            Triple("title", LangLiteral(title, "fr")),
            Triple("instance of", "Works"),
            Triple("director", director),
            Triple("author", author),
            Triple("production company", rng.choice(_COMPANIES)),
            Triple("date of first performance", f"{rng.randint(1, 28)} {rng.choice(_MONTHS)} {rng.randint(1947, 2024)}"),
            Triple("stated in", f"{title} show programme"),
        )
        out[f"p{i:03d}"] = Draft("", "", title, triples)
    return out


def _mangle(value: str, rng: random.Random) -> str:
    words = value.split()
    if len(words) > 1 and rng.random() < 0.5:
        return " ".join(words[: max(1, len(words) // 2)])  # truncated, partial credit
    return rng.choice(_PEOPLE + _TITLES)  # plainly wrong


def synthetic_draft(truth: Draft, formal_ok: bool, quality: float, rng: random.Random) -> str:
    """A raw draft that passes or fails the formal gate, degraded by ``1 - quality``."""
    triples = []
    for t in truth.triples:
        r = rng.random()
        if r < (1 - quality) * 0.35:
            continue  # dropped
        if r < (1 - quality) * 0.9:
            text = _mangle(t.text, rng)
            obj = LangLiteral(text, t.object.language) if isinstance(t.object, LangLiteral) else text
            triples.append(Triple(t.property, obj))
        else:
            triples.append(t)
    if not triples:
        triples.append(truth.triples[0])
    if not formal_ok:
        if rng.random() < 0.5:
            triples.insert(rng.randrange(len(triples) + 1), Triple(rng.choice(["publisher", "genre", "cast"]), "?"))
        else:
            triples.append(triples[rng.randrange(len(triples))])
    return render_draft(Draft("", "", truth.subject, tuple(triples)))


def _ramp(x: float, start: float, end: float) -> float:
    return min(1.0, max(0.0, (x - start) / (end - start)))


def synthetic_trace(
    steps: int = 600,
    seed: int = 0,
    n_problems: int = 24,
) -> tuple[dict[str, Draft], list[StepBatch]]:
    """Problems plus a trace whose formal pass rate climbs from 0 towards 1.

    Format is learnt first (pass rate ramps over the first half) and the
    content of passing drafts improves afterwards, which gives a flat then
    rising mean-grade curve.
    """
    rng = random.Random(seed)
    problems = synthetic_problems(n_problems, seed)
    ids = sorted(problems)
    batches = []
    for step in range(steps):
        x = step / max(1, steps - 1)
        pass_p = 0.97 * _ramp(x, 0.05, 0.5)
        quality = 0.25 + 0.7 * _ramp(x, 0.35, 0.95)
        chosen = tuple(rng.sample(ids, PROBLEMS_PER_STEP))
        rows = tuple(
            tuple(synthetic_draft(problems[pid], rng.random() < pass_p, quality, rng)
                  for _ in range(DRAFTS_PER_PROBLEM))
            for pid in chosen
        )
        batches.append(StepBatch(step, chosen, rows))
    return problems, batches


def curve_phases(summaries: list[StepSummary], window: int = 50) -> list[float]:
    """Mean grade over consecutive windows, for a coarse view of the curve."""
    return [sum(s.mean_grade for s in summaries[i:i + window]) / len(summaries[i:i + window])
            for i in range(0, len(summaries), window)]


__all__ = [
    "DRAFTS_PER_PROBLEM", "GRADE_MAX", "PROBLEMS_PER_STEP", "StepBatch", "StepLog", "StepSummary",
    "curve_phases", "dumps_record", "read_step_log", "read_trace", "replay", "score_step",
    "summarize", "synthetic_draft", "synthetic_problems", "synthetic_trace", "write_trace",
]
