"""Command line entry point: ``showprog <stage> [options]``.

Stages read and write plain directories laid out by the config file, so
each one can be re-run on its own. Re-running a stage on unchanged inputs
writes nothing.
"""

from __future__ import annotations

import argparse
import fnmatch
import hashlib
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from . import __version__
from .config import PipelineConfig, load_config
from .errors import (
    ConfigurationError,
    ConflictError,
    GraphError,
    InvalidInputError,
    MalformedDraftError,
    MissingDataError,
    ParseError,
    ShowprogError,
    TransportError,
    UnsupportedPatternError,
)
from .evaluation import BaselineExtractor, EvalConfig, build_report, load_gazetteer, match_files
from .imaging import encode_png, iter_page_files, load_mask, load_page_image
from .io import write_if_changed
from .ontology import ProductionGraph, load_vocabularies, to_ntriples, validate_graph, write_jsonld
from .segmentation import PeakParams, ReferenceWidthTable, SegmentationParams, SegmentationReport, segment_document
from .segmentation.report import DocumentRecord
from .transcription import (
    BatchSettings,
    CostLedger,
    HttpTranscriptionService,
    JobJournal,
    StubService,
    directory_responder,
    transcribe_corpus,
)
from .triples import (
    HttpJudge,
    PropertyCatalog,
    RubricJudge,
    formal_reward,
    load_judge_template,
    merge_graphs,
    parse_draft,
    read_trace,
    replay,
    synthetic_trace,
    triples_to_entities,
)
from .triples.step import curve_phases, dumps_record

EXIT_OK, EXIT_WARNING, EXIT_CONFIG, EXIT_INPUT, EXIT_ENDPOINT = 0, 1, 2, 3, 4

log = logging.getLogger("showprog")


@dataclass
class Runtime:
    """Injection points for tests: clocks, sleeps and endpoint factories."""

    sleep: Callable[[float], None] = time.sleep
    clock: Callable[[], float] = time.monotonic
    transcriber: object | None = None
    judge: object | None = None
    out: Callable[[str], None] = field(default=lambda s: print(s))


def _selected(name: str, pattern: str) -> bool:
    return fnmatch.fnmatchcase(name, pattern)


def _digest(*parts: bytes | str) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(p.encode() if isinstance(p, str) else p)
        h.update(b"\0")
    return h.hexdigest()


# -- segment ------------------------------------------------------------------


def _reference_table(cfg: PipelineConfig) -> ReferenceWidthTable:
    seg = cfg.segmentation
    if seg.reference_widths:
        return ReferenceWidthTable.load(seg.reference_widths, seg.tolerance)
    return ReferenceWidthTable(ReferenceWidthTable.avignon().entries, seg.tolerance)


def _segmentation_params(cfg: PipelineConfig) -> SegmentationParams:
    seg = cfg.segmentation
    return SegmentationParams(
        peaks=PeakParams(distance_fraction=seg.distance_fraction, prominence_fraction=seg.prominence_fraction,
                         sigma_fraction=seg.sigma_fraction),
        mask_radius=seg.mask_radius,
        band_fraction=seg.band_fraction,
        band_density=seg.band_density,
        reorder_born_digital=seg.reorder_born_digital,
    )


def cmd_segment(cfg: PipelineConfig, args, rt: Runtime) -> int:
    images = cfg.paths.images
    if not images.is_dir():
        raise InvalidInputError(f"image directory {images} does not exist")
    docs: dict[str, list[tuple[int, Path]]] = {}
    for doc_id, index, path in iter_page_files(images):
        if _selected(doc_id, args.select):
            docs.setdefault(doc_id, []).append((index, path))
    if not docs:
        raise InvalidInputError(f"no page images under {images} match {args.select!r}")

    refs = _reference_table(cfg)
    params = _segmentation_params(cfg)
    manifest_path = cfg.paths.state / "segment.json"
    manifest = json.loads(manifest_path.read_text(encoding="utf-8")) if manifest_path.exists() else {}

    def fingerprint(doc_id, pages):
        meta = cfg.document(doc_id)
        parts = [repr(params), repr(sorted(refs.entries.items())), str(refs.tolerance), repr(meta)]
        for index, path in pages:
            parts += [str(index), path.read_bytes()]
            if cfg.paths.masks:
                mask = cfg.paths.masks / doc_id / path.name
                parts.append(mask.read_bytes() if mask.exists() else b"")
        return _digest(*parts)

    def outputs_present(doc_id, record):
        return all((cfg.paths.subpages / doc_id / f"{i}.png").exists() for i in range(record["subpages_out"]))

    def run(doc_id):
        pages = docs[doc_id]
        key = fingerprint(doc_id, pages)
        known = manifest.get(doc_id)
        if known and known["digest"] == key and outputs_present(doc_id, known["record"]):
            log.info("stage=segment doc=%s status=up-to-date", doc_id)
            return doc_id, known, False
        if args.dry_run:
            log.info("stage=segment doc=%s status=would-segment pages=%d", doc_id, len(pages))
            return doc_id, None, False
        meta = cfg.document(doc_id)
        imgs = [load_page_image(path, doc_id, index) for index, path in pages]
        masks = None
        if cfg.paths.masks:
            masks = [load_mask(cfg.paths.masks / doc_id / path.name) for _, path in pages]
        subpages, record = segment_document(imgs, refs, meta.year, params, masks, meta.born_digital)
        out_dir = cfg.paths.subpages / doc_id
        for sub in subpages:
            write_if_changed(out_dir / f"{sub.page_index}.png", encode_png(sub))
        for stale in out_dir.glob("*.png"):
            if stale.stem.isdigit() and int(stale.stem) >= len(subpages):
                stale.unlink()
        entry = {"digest": key, "record": json.loads(record.to_json())}
        log.info("stage=segment doc=%s status=segmented pages=%d subpages=%d phase=%s",
                 doc_id, record.pages_in, record.subpages_out, record.phase)
        return doc_id, entry, True

    order = sorted(docs)
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(run, order))
    else:
        results = [run(d) for d in order]
    if args.dry_run:
        return EXIT_OK
    for doc_id, entry, _ in results:
        manifest[doc_id] = entry
    manifest = dict(sorted(manifest.items()))
    write_if_changed(manifest_path, json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    report = SegmentationReport([DocumentRecord(**e["record"]) for e in manifest.values()])
    write_if_changed(cfg.paths.reports / "segmentation.jsonl", report.to_jsonl())
    write_if_changed(cfg.paths.reports / "segmentation.md", report.summary_markdown())
    changed = sum(c for _, _, c in results)
    rt.out(f"segment: {len(results)} document(s), {changed} re-segmented, {report.flagged} post-processed")
    return EXIT_OK


# -- transcribe ---------------------------------------------------------------


def _transcriber(cfg: PipelineConfig, rt: Runtime):
    if rt.transcriber is not None:
        return rt.transcriber
    ep = cfg.transcription.endpoint
    if ep.kind == "http":
        return HttpTranscriptionService.from_env(ep.url, ep.token_env, timeout=ep.timeout)
    respond = directory_responder(ep.responses) if ep.responses else None
    return StubService(respond=respond, polls_to_complete=ep.polls_to_complete,
                       never_complete=ep.never_complete, state_dir=cfg.paths.state / "stub-service")


def cmd_transcribe(cfg: PipelineConfig, args, rt: Runtime) -> int:
    root = cfg.paths.subpages
    if not root.is_dir():
        raise InvalidInputError(f"subpage directory {root} does not exist; run segment first")
    found = [(d, i, p) for d, i, p in iter_page_files(root) if _selected(d, args.select)]
    if not found:
        raise InvalidInputError(f"no subpages under {root} match {args.select!r}")
    out = cfg.paths.transcriptions
    if args.dry_run:
        todo = [f"{d}/{i}" for d, i, _ in found if not (out / d / f"{i}.md").exists()]
        rt.out(f"transcribe: {len(todo)} of {len(found)} page(s) would be sent")
        return EXIT_OK
    pages = [load_page_image(p, d, i) for d, i, p in found]
    tr = cfg.transcription
    settings = BatchSettings(batch_size=tr.batch_size, byte_limit=tr.byte_limit, poll_interval=tr.poll_interval,
                             poll_jitter=tr.poll_jitter, timeout=tr.timeout, max_retries=tr.max_retries,
                             backoff=tr.backoff, price_input_per_mtok=tr.price_input_per_mtok,
                             price_output_per_mtok=tr.price_output_per_mtok)
    ledger = CostLedger(tr.price_input_per_mtok, tr.price_output_per_mtok)
    journal = JobJournal(cfg.paths.state / "transcribe.journal.jsonl")
    summary = transcribe_corpus(pages, _transcriber(cfg, rt), out, journal, settings, tr.templates, ledger,
                                sleep=rt.sleep, clock=rt.clock)
    if summary.written:
        record = {"written": summary.written, "refusals": summary.refusals,
                  "policy_refused": summary.policy_refused, **ledger.as_dict()}
        with open(cfg.paths.state / "costs.jsonl", "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    log.info("stage=transcribe written=%d skipped=%d refusals=%d errors=%d submitted=%d resumed=%d failed=%d",
             summary.written, summary.skipped, summary.refusals, summary.errors, summary.submitted_jobs,
             summary.resumed_jobs, summary.failed_jobs)
    rt.out(f"transcribe: {summary.written} written, {summary.skipped} already present, "
           f"{summary.refusals} refusal(s), {summary.errors} error(s)")
    if summary.failed_jobs:
        return EXIT_ENDPOINT
    return EXIT_WARNING if summary.errors else EXIT_OK


# -- evaluate -----------------------------------------------------------------


def cmd_evaluate(cfg: PipelineConfig, args, rt: Runtime) -> int:
    ref = Path(args.reference) if args.reference else cfg.paths.reference
    hyp = Path(args.hypothesis) if args.hypothesis else cfg.paths.transcriptions
    if ref is None:
        raise ConfigurationError("no reference directory: pass one or set paths.reference")
    for d in (ref, hyp):
        if not d.is_dir():
            raise InvalidInputError(f"{d} is not a directory")
    ev = cfg.evaluation
    extractor = BaselineExtractor(load_gazetteer(ev.gazetteer)) if ev.gazetteer else BaselineExtractor()
    config = EvalConfig(ev.line_threshold, ev.ner_threshold, ev.optimal_lines, ev.metrics, ev.aggregation,
                        cfg.workers, extractor)
    found = match_files(ref, hyp)
    keep = lambda key: _selected(key[0], args.select)  # noqa: E731
    pairs = [p for p in found.pairs if keep(p.key)]
    if not pairs:
        raise InvalidInputError(f"no matching transcription pairs between {ref} and {hyp}")
    if args.dry_run:
        rt.out(f"evaluate: {len(pairs)} pair(s) would be scored")
        return EXIT_OK
    report = build_report(pairs, config, [k for k in found.unmatched_reference if keep(k)],
                          [k for k in found.unmatched_hypothesis if keep(k)])
    write_if_changed(cfg.paths.reports / "eval.jsonl", report.to_jsonl())
    write_if_changed(cfg.paths.reports / "eval.md", report.to_markdown())
    log.info("stage=evaluate pairs=%d unmatched_ref=%d unmatched_hyp=%d", len(pairs),
             len(report.unmatched_reference), len(report.unmatched_hypothesis))
    rt.out(f"evaluate: {len(pairs)} pair(s) scored")
    return EXIT_OK


# -- structure ----------------------------------------------------------------


def _catalog(cfg: PipelineConfig) -> PropertyCatalog:
    return PropertyCatalog.load(cfg.triples.catalog) if cfg.triples.catalog else PropertyCatalog.default()


def cmd_structure(cfg: PipelineConfig, args, rt: Runtime) -> int:
    drafts_dir = Path(args.drafts) if args.drafts else cfg.paths.drafts
    if not drafts_dir.is_dir():
        raise InvalidInputError(f"draft directory {drafts_dir} does not exist")
    files = sorted(p for p in drafts_dir.glob("*.txt") if _selected(p.stem, args.select))
    catalog = _catalog(cfg)
    vocab = load_vocabularies(cfg.vocabularies.aat, cfg.vocabularies.roles, cfg.vocabularies.ext)
    graph = ProductionGraph()
    records = []
    for path in files:
        rec = {"draft": path.name, "status": "accepted", "violations": [], "warnings": []}
        try:
            draft = parse_draft(path.read_text(encoding="utf-8"))
            score = formal_reward(draft, catalog)
            if not score.formal_pass:
                rec.update(status="rejected", violations=list(score.violations))
            else:
                frag = triples_to_entities(draft, catalog, cfg.triples.base_iri)
                # merge into a copy so a conflicting draft leaves the graph untouched
                graph = merge_graphs(merge_graphs(ProductionGraph(), graph), frag.graph)
                rec.update(work=frag.work, production=frag.production, show=frag.show,
                           warnings=list(frag.warnings), side=[list(s) for s in frag.side],
                           provenance=list(frag.provenance))
        except MalformedDraftError as exc:
            rec.update(status="malformed", violations=[str(exc)])
        except ConflictError as exc:
            rec.update(status="conflict", violations=[str(exc)])
        records.append(rec)
        log.info("stage=structure draft=%s status=%s", path.name, rec["status"])

    accepted = [r for r in records if r["status"] == "accepted"]
    violations = validate_graph(graph, vocab) if accepted else []
    summary = {"drafts": len(records), "accepted": len(accepted),
               "graph_violations": [f"{v.entity_id}: {v.rule}: {v.message}" for v in violations]}
    if args.dry_run:
        rt.out(f"structure: {len(accepted)} of {len(records)} draft(s) would be accepted")
        return EXIT_OK
    report = "".join(dumps_record(r) for r in records) + dumps_record({"summary": summary})
    write_if_changed(cfg.paths.reports / "structure.jsonl", report)
    if accepted and not violations:
        write_jsonld(graph, cfg.paths.graphs / "jsonld", vocab)
        write_if_changed(cfg.paths.graphs / "graph.nt", to_ntriples(graph, vocab))
    rt.out(f"structure: {len(accepted)} of {len(records)} draft(s) accepted, "
           f"{len(violations)} graph violation(s)")
    if not accepted or violations:
        return EXIT_WARNING
    return EXIT_OK


# -- score-steps --------------------------------------------------------------


def _judge(cfg: PipelineConfig, rt: Runtime):
    if rt.judge is not None:
        return rt.judge
    ep = cfg.triples.judge
    if ep.kind == "http":
        token = os.environ.get(ep.token_env) if ep.token_env else None
        if ep.token_env and token is None:
            raise ConfigurationError(f"environment variable {ep.token_env} is not set")
        return HttpJudge(ep.url, token, timeout=ep.timeout)
    return RubricJudge()


def cmd_score_steps(cfg: PipelineConfig, args, rt: Runtime) -> int:
    catalog = _catalog(cfg)
    tri = cfg.triples
    if args.synthetic:
        truths, batches = synthetic_trace(args.synthetic, args.seed)
        source = f"synthetic trace of {args.synthetic} steps (seed {args.seed})"
    else:
        if not args.trace or not args.truths:
            raise InvalidInputError("score-steps needs a trace file and --truths, or --synthetic N")
        truth_dir = Path(args.truths)
        if not truth_dir.is_dir() or not Path(args.trace).is_file():
            raise InvalidInputError("trace file or truths directory missing")
        truths = {p.stem: parse_draft(p.read_text(encoding="utf-8")) for p in sorted(truth_dir.glob("*.txt"))}
        batches = read_trace(Path(args.trace))
        source = str(args.trace)
    if args.dry_run:
        rt.out(f"score-steps: would replay {source}")
        return EXIT_OK
    template = load_judge_template(tri.judge_template)
    summaries = replay(batches, catalog, truths, _judge(cfg, rt), workers=cfg.workers, template=template,
                       problems=tri.problems_per_step, drafts=tri.drafts_per_problem,
                       grade_range=(tri.grade_min, tri.grade_max))
    out = Path(args.output) if args.output else cfg.paths.reports / "steps.jsonl"
    write_if_changed(out, "".join(dumps_record(s.to_record()) for s in summaries))
    windows = curve_phases(summaries, max(1, len(summaries) // 12))
    log.info("stage=score-steps steps=%d curve=%s", len(summaries), ",".join(f"{w:.2f}" for w in windows))
    rt.out(f"score-steps: {len(summaries)} step(s) scored from {source}")
    return EXIT_OK


def cmd_config(cfg: PipelineConfig, args, rt: Runtime) -> int:
    rt.out(cfg.dumps().rstrip("\n"))
    return EXIT_OK


# -- plumbing -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="YAML pipeline configuration")
    common.add_argument("--select", default=argparse.SUPPRESS, metavar="GLOB",
                        help="only documents (or draft names) matching this glob")
    common.add_argument("--workers", type=int, default=argparse.SUPPRESS, help="parallel workers")
    common.add_argument("--dry-run", action="store_true", default=argparse.SUPPRESS,
                        help="report what would happen without writing anything")
    common.add_argument("--log-level", default=argparse.SUPPRESS,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = argparse.ArgumentParser(prog="showprog", parents=[common],
                                     description="Segment, transcribe, evaluate and structure show programmes.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("segment", parents=[common], help="split page images into subpages")
    sub.add_parser("transcribe", parents=[common], help="transcribe subpages through the configured service")
    p = sub.add_parser("evaluate", parents=[common], help="score transcriptions against references")
    p.add_argument("reference", nargs="?", help="reference directory (default: paths.reference)")
    p.add_argument("hypothesis", nargs="?", help="hypothesis directory (default: paths.transcriptions)")
    p = sub.add_parser("structure", parents=[common], help="turn drafts into a validated graph")
    p.add_argument("drafts", nargs="?", help="draft directory (default: paths.drafts)")
    p = sub.add_parser("score-steps", parents=[common], help="score training-step batches into a step log")
    p.add_argument("trace", nargs="?", help="JSONL trace of step batches")
    p.add_argument("--truths", help="directory of <problem id>.txt ground-truth drafts")
    p.add_argument("--synthetic", type=int, metavar="STEPS", help="score a generated trace instead")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="step log path (default: <reports>/steps.jsonl)")
    sub.add_parser("config", parents=[common], help="print the effective configuration")
    return parser


COMMANDS = {
    "segment": cmd_segment,
    "transcribe": cmd_transcribe,
    "evaluate": cmd_evaluate,
    "structure": cmd_structure,
    "score-steps": cmd_score_steps,
    "config": cmd_config,
}


def main(argv: list[str] | None = None, runtime: Runtime | None = None) -> int:
    rt = runtime or Runtime()
    args = build_parser().parse_args(argv)
    for name, default in (("config", None), ("select", "*"), ("workers", None), ("dry_run", False),
                          ("log_level", "WARNING")):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=args.log_level, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigurationError("--workers must be positive")
            cfg.workers = args.workers
        return COMMANDS[args.command](cfg, args, rt)
    except ConfigurationError as exc:
        print(f"showprog: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TransportError as exc:
        print(f"showprog: endpoint failure: {exc}", file=sys.stderr)
        return EXIT_ENDPOINT
    except (InvalidInputError, MissingDataError, ParseError, MalformedDraftError, UnsupportedPatternError,
            GraphError, OSError) as exc:
        print(f"showprog: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ShowprogError as exc:
        print(f"showprog: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
