"""Acceptance suite: one PASS/FAIL line per criterion, repeated in the terminal summary."""

import random
import shutil
import statistics
import time
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path

import test_cli as cli_suite
from synth import spread
from test_evaluation import oracle_jaccard, oracle_rate, oracle_ratio, rand_text

from showprog.evaluation import cer, evaluate_dirs, jaccard, levenshtein_ratio, wer
from showprog.imaging import binarize_text_mask
from showprog.ontology import (
    Production,
    absalom_graph,
    from_jsonld,
    from_ntriples,
    to_jsonld,
    to_ntriples,
    validate_graph,
)
from showprog.segmentation import (
    PeakParams,
    ReferenceWidthTable,
    detect_separators,
    segment_document,
    select_candidates,
    split_page,
    vertical_projection,
)
from showprog.triples import (
    PropertyCatalog,
    RubricJudge,
    StepBatch,
    StepLog,
    Triple,
    formal_reward,
    parse_draft,
    read_trace,
    render_draft,
    replay,
    score_step,
    synthetic_trace,
    write_trace,
)
from showprog.triples.step import curve_phases, synthetic_draft, synthetic_problems

FIXTURES = Path(__file__).parent / "fixtures"
CATALOG = PropertyCatalog.default()
SAMPLE = (FIXTURES / "drafts" / "coquin-de-coq.txt").read_text(encoding="utf-8")

RESULTS = {}


@contextmanager
def criterion(number, label):
    detail = []
    try:
        yield detail
    except BaseException:
        RESULTS[number] = f"criterion {number} FAIL  {label}  {'; '.join(detail)}".rstrip()
        raise
    else:
        RESULTS[number] = f"criterion {number} PASS  {label}  {'; '.join(detail)}".rstrip()
    finally:
        print("\n" + RESULTS[number])


# -- 1 ------------------------------------------------------------------------


def test_criterion_1_segmentation_fixtures():
    with criterion(1, "segmentation fixture suite") as detail:
        start = time.monotonic()
        rng = random.Random(1)
        detected = 0
        for seed in range(24):
            width = rng.choice([260, 300, 340, 380, 420])
            page, gaps = spread(rng.choice(["tt", "ttt", "tttt"]), width, 420, seed=seed)
            profile = vertical_projection(binarize_text_mask(page), PeakParams().sigma_for(page.width_px))
            seps = detect_separators(profile, PeakParams(), width)
            assert len(seps.xs) == len(gaps), (seed, seps.xs, gaps)
            assert all(a <= x <= b for x, (a, b) in zip(seps.xs, gaps)), (seed, seps.xs, gaps)
            assert sum(p.width_px for p in split_page(page, seps)) == page.width_px
            detected += 1

        layouts = ["22", "2t", "t2", "2", "tb", "bt", "2b", "b2", "t2t", "22t"]
        recovered = total = 0
        for seed in range(40):
            width, height = rng.choice([260, 300, 340, 380]), rng.choice([360, 420])
            pages, truth = [], 0
            for i in range(rng.randint(1, 3)):
                layout = rng.choice(layouts if i == 0 else layouts + ["tt", "ttt"])
                pages.append(spread(layout, width, height, seed=seed * 10 + i, page_index=i)[0])
                truth += len(layout)
            refs = ReferenceWidthTable({("synthetic", 2000): width}, 0.93)
            subpages, _ = segment_document(pages, refs, 2000)
            total += 1
            recovered += len(subpages) == truth
        elapsed = time.monotonic() - start
        detail += [f"{detected}/24 spreads separated in band", f"recovered {recovered}/{total}",
                   f"{elapsed:.1f}s"]
        assert recovered / total >= 0.95
        assert elapsed < 30


# -- 2 ------------------------------------------------------------------------


def test_criterion_2_candidate_rule_exhaustive():
    with criterion(2, "candidate selection over widths 1..3000") as detail:
        refs = ReferenceWidthTable({("any", 2007): 877}, 0.93)
        disagreements = [w for w in range(1, 3001)
                         if select_candidates([w], refs, 2007) != (w < 815.61 or w > 1631.22)]
        detail.append(f"{len(disagreements)} disagreements")
        assert disagreements == []


# -- 3 ------------------------------------------------------------------------


def test_criterion_3_metric_oracles():
    with criterion(3, "metric oracle equivalence on 1000 pairs") as detail:
        start = time.monotonic()
        rng = random.Random(2024)
        mismatches = 0
        for _ in range(1000):
            a, b = rand_text(rng), rand_text(rng)
            mismatches += levenshtein_ratio(a, b) != oracle_ratio(a, b)
            mismatches += cer(a, b) != oracle_rate(a, b)
            mismatches += wer(a, b) != oracle_rate(a.split(), b.split())
            mismatches += sum(jaccard(a, b, n) != oracle_jaccard(a, b, n) for n in (1, 2))
        elapsed = time.monotonic() - start
        detail += [f"{mismatches} mismatches", f"{elapsed:.1f}s"]
        assert mismatches == 0
        assert elapsed < 10


# -- 4 ------------------------------------------------------------------------


def test_criterion_4_degradation_fixture():
    with criterion(4, "degradation fixture medians") as detail:
        root = FIXTURES / "degradation"
        rows = {name: median for name, median, _ in evaluate_dirs(root / "ref", root / "hyp").easyocr_summary()}
        detail.append(", ".join(f"{k} {v:.3f}" for k, v in rows.items()))
        assert abs(rows["CER"] - 0.10) <= 0.02
        assert 0.15 <= rows["WER"] <= 0.25
        assert rows["Jaccard (words)"] < rows["Jaccard (2-grams)"]


# -- 5 ------------------------------------------------------------------------


def test_criterion_5_sample_draft():
    with criterion(5, "sample draft parse and render fixpoint") as detail:
        draft = parse_draft(SAMPLE)
        detail.append(f"subject {draft.subject!r}, {len(draft.triples)} triples")
        assert draft.subject == "Coquin de Coq"
        assert len(draft.triples) == 9
        rendered = render_draft(draft)
        assert parse_draft(rendered) == draft
        assert render_draft(parse_draft(rendered)) == rendered


# -- 6 ------------------------------------------------------------------------


def mutants(draft, count, rng):
    unknown = ["publisher", "genre", "cast", "Title", "Director", "colour", "running time"]
    out = []
    for i in range(count):
        triples = list(draft.triples)
        if i % 2:
            triples.insert(rng.randrange(len(triples) + 1), Triple(rng.choice(unknown), "?"))
        else:
            victim = rng.choice(triples)
            triples.insert(rng.randrange(len(triples) + 1), Triple(victim.property, f"other {i}"))
        out.append(replace(draft, triples=tuple(triples)))
    return out


def test_criterion_6_reward_policy():
    with criterion(6, "formal gate on mutants and zero-reward dominance") as detail:
        rng = random.Random(6)
        base = parse_draft(SAMPLE)
        assert formal_reward(base, CATALOG).formal_pass
        muts = mutants(base, 240, rng)
        rejected = sum(not formal_reward(m, CATALOG).formal_pass for m in muts)
        # the rendered form goes through the same gate
        rejected_raw = sum(not formal_reward(parse_draft(render_draft(m)), CATALOG).formal_pass for m in muts)

        truths = synthetic_problems(8, seed=6)
        ids = sorted(truths)
        judge = RubricJudge()
        violations = 0
        for step in range(60):
            chosen = tuple(rng.sample(ids, 4))
            pass_p, quality = rng.random(), rng.random()
            rows = tuple(tuple(synthetic_draft(truths[p], rng.random() < pass_p, quality, rng) for _ in range(8))
                         for p in chosen)
            _, summary = score_step(StepBatch(step, chosen, rows), CATALOG, truths, judge)
            violations += summary.mean_grade > 10 * summary.pass_rate + 1e-12
        detail += [f"rejected {rejected}/{len(muts)} mutants ({rejected_raw} after render)",
                   f"{violations} dominance violations over 60 batches"]
        assert rejected == rejected_raw == len(muts) >= 200
        assert violations == 0


# -- 7 ------------------------------------------------------------------------


def test_criterion_7_step_trace_replay(tmp_path):
    with criterion(7, "600-step trace replay") as detail:
        truths, batches = synthetic_trace(600, seed=0)
        trace = tmp_path / "trace.jsonl"
        write_trace(batches, trace)
        logs = []
        for k in range(2):
            log = StepLog(tmp_path / f"steps{k}.jsonl")
            summaries = replay(read_trace(trace), CATALOG, truths, RubricJudge(), log=log)
            logs.append(log.path.read_bytes())
        pass_rates = [statistics.mean(s.pass_rate for s in summaries[i:i + 100]) for i in range(0, 600, 100)]
        opening = statistics.mean(s.pass_rate for s in summaries[:25])
        grades = curve_phases(summaries, window=100)
        detail += [f"pass {opening:.2f} over the first 25 steps", "pass " + " ".join(f"{p:.2f}" for p in pass_rates),
                   "grade " + " ".join(f"{g:.2f}" for g in grades)]
        assert len(summaries) == 600
        assert opening < 0.02 and pass_rates[-1] > 0.9
        assert grades[0] < 1.5 and grades[-1] > 7
        assert all(b >= a - 0.25 for a, b in zip(grades, grades[1:]))
        assert logs[0] == logs[1]


# -- 8 ------------------------------------------------------------------------


def test_criterion_8_absalom_round_trip():
    with criterion(8, "Absalom graph validation and serialization round trip") as detail:
        g = absalom_graph()
        problems = validate_graph(g)
        prod = next(iter(g.of_type(Production)))
        venue = g.get(prod.venue).name
        detail += [f"{len(problems)} violations", f"venue {venue}",
                   f"{prod.timespan.begin}..{prod.timespan.end}"]
        assert problems == []
        assert venue == "La Fabrica"
        assert (str(prod.timespan.begin), str(prod.timespan.end)) == ("2024-06-26", "2024-07-07")
        docs = to_jsonld(g)
        again = to_jsonld(from_jsonld(docs))
        assert from_jsonld(docs) == g and again == docs == to_jsonld(absalom_graph())
        nt = to_ntriples(g)
        assert to_ntriples(from_ntriples(nt)) == nt == to_ntriples(absalom_graph())


# -- 9 ------------------------------------------------------------------------


def _corpus(tmp_path, name):
    root = tmp_path / name
    shutil.copytree(cli_suite.CORPUS, root, ignore=shutil.ignore_patterns("out"))
    return root


def test_criterion_9_end_to_end(tmp_path):
    with criterion(9, "stub pipeline end to end, kill and resume") as detail:
        cli_suite.test_pipeline_matches_goldens_and_reruns_are_no_ops(_corpus(tmp_path, "run"))
        detail.append("goldens matched, rerun wrote nothing")
        cli_suite.test_kill_and_resume_without_duplicate_submission(_corpus(tmp_path, "resume"))
        detail.append("resume submitted once")
