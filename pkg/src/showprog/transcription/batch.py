"""Batch submission, polling, refusal fallback and resumable corpus runs."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from ..errors import InvalidInputError, TransportError
from ..imaging import PageImage, encode_png
from .markdown import TranscriptionDoc, parse_markdown, transcription_path, write_transcription
from .prompts import FALLBACK, STANDARD, load_templates
from .service import DONE, RefusalPolicy, ServiceItem, ServiceResponse, TranscriptionService

log = logging.getLogger(__name__)

QUEUED, RUNNING, FAILED = "queued", "running", "failed"
ITEM_DONE, ITEM_REFUSAL, ITEM_ERROR, ITEM_PENDING = "done", "refusal", "error", "pending"


@dataclass
class BatchSettings:
    batch_size: int = 50
    byte_limit: int = 5_000_000
    poll_interval: float = 10.0
    poll_jitter: float = 0.1
    timeout: float = 7200.0
    max_retries: int = 3
    backoff: float = 2.0
    price_input_per_mtok: float = 0.0
    price_output_per_mtok: float = 0.0
    refusal: RefusalPolicy = field(default_factory=RefusalPolicy)


@dataclass
class ItemResult:
    state: str
    text: str = ""


@dataclass
class BatchJob:
    job_id: str
    items: list[tuple[str, int]]
    state: str = QUEUED
    results: dict[str, ItemResult] = field(default_factory=dict)
    batch_key: str = ""

    @property
    def custom_ids(self) -> list[str]:
        return [custom_id(d, p) for d, p in self.items]

    def refusals(self) -> list[str]:
        return [k for k, r in self.results.items() if r.state == ITEM_REFUSAL]


def custom_id(doc_id: str, page_index: int) -> str:
    return f"{doc_id}/{page_index}"


def batch_key(ids: Iterable[str]) -> str:
    return hashlib.sha256("\n".join(sorted(ids)).encode()).hexdigest()[:16]


class CostLedger:
    """Token counters per request; prices come from configuration."""

    def __init__(self, input_per_mtok: float = 0.0, output_per_mtok: float = 0.0):
        self.input_per_mtok = input_per_mtok
        self.output_per_mtok = output_per_mtok
        self.requests = 0
        self.input_tokens = 0
        self.output_tokens = 0

    def record(self, response: ServiceResponse) -> None:
        self.requests += 1
        self.input_tokens += response.input_tokens
        self.output_tokens += response.output_tokens

    @property
    def cost(self) -> float:
        return (self.input_tokens * self.input_per_mtok + self.output_tokens * self.output_per_mtok) / 1e6

    def as_dict(self) -> dict:
        return {"requests": self.requests, "input_tokens": self.input_tokens,
                "output_tokens": self.output_tokens, "cost": round(self.cost, 6)}


class JobJournal:
    """Append-only JSON-lines log of batch submissions and completions."""

    def __init__(self, path: Path):
        self.path = Path(path)

    def append(self, event: dict) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def events(self) -> list[dict]:
        if not self.path.exists():
            return []
        out = []
        for line in self.path.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line:
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError:
                log.warning("skipping torn journal line in %s", self.path)
        return out

    def state(self) -> dict[str, dict]:
        """Latest known record per batch key: ``{"job_id", "items", "finished"}``."""
        jobs: dict[str, dict] = {}
        for ev in self.events():
            key = ev.get("batch_key")
            if ev.get("event") == "submitted":
                jobs[key] = {"job_id": ev["job_id"], "items": ev["items"], "finished": None}
            elif ev.get("event") == "finished" and key in jobs:
                jobs[key]["finished"] = ev["state"]
        return jobs


def _with_retries(call: Callable, settings: BatchSettings, sleep: Callable[[float], None]):
    delay = 1.0
    for attempt in range(settings.max_retries + 1):
        try:
            return call()
        except TransportError:
            if attempt == settings.max_retries:
                raise
            log.warning("transport error, retry %d/%d in %.1fs", attempt + 1, settings.max_retries, delay)
            sleep(delay)
            delay *= settings.backoff


def submit_batch(
    pages: Sequence[PageImage],
    prompt: str,
    service: TranscriptionService,
    settings: BatchSettings = BatchSettings(),
    journal: JobJournal | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> BatchJob:
    """Send up to ``batch_size`` pages as one job and journal the handle."""
    if not pages:
        raise InvalidInputError("cannot submit an empty batch")
    if len(pages) > settings.batch_size:
        raise InvalidInputError(
            f"{len(pages)} pages exceed the batch size of {settings.batch_size}; split the batch"
        )
    items = []
    for page in pages:
        payload = encode_png(page)
        if len(payload) > settings.byte_limit:
            raise InvalidInputError(
                f"page {page.doc_id}/{page.page_index} encodes to {len(payload)} bytes "
                f"(limit {settings.byte_limit})"
            )
        items.append(ServiceItem(custom_id(page.doc_id, page.page_index), prompt, payload))
    job_id = _with_retries(lambda: service.submit(items), settings, sleep)
    keys = [(p.doc_id, p.page_index) for p in pages]
    job = BatchJob(job_id, keys, RUNNING, batch_key=batch_key(i.custom_id for i in items))
    if journal is not None:
        journal.append({"event": "submitted", "batch_key": job.batch_key, "job_id": job_id,
                        "items": [list(k) for k in keys]})
    log.info("submitted job=%s items=%d", job_id, len(items))
    return job


def poll_until_done(
    job: BatchJob,
    service: TranscriptionService,
    settings: BatchSettings = BatchSettings(),
    journal: JobJournal | None = None,
    ledger: CostLedger | None = None,
    sleep: Callable[[float], None] = time.sleep,
    clock: Callable[[], float] = time.monotonic,
    rng: random.Random | None = None,
) -> BatchJob:
    """Poll until the job finishes or ``settings.timeout`` elapses.

    Refusals are recorded per item, distinct from errors. On timeout the job
    is marked failed and whatever results arrived are kept.
    """
    rng = rng or random.Random(0)
    start = clock()
    ids = job.custom_ids
    for cid in ids:
        job.results.setdefault(cid, ItemResult(ITEM_PENDING))
    while True:
        try:
            status = service.status(job.job_id)
        except TransportError as exc:
            log.warning("poll of %s failed: %s", job.job_id, exc)
            status = None
        if status is not None:
            for cid, resp in status.results.items():
                if cid not in job.results or job.results[cid].state != ITEM_PENDING:
                    continue
                if ledger is not None:
                    ledger.record(resp)
                if settings.refusal.is_refusal(resp):
                    job.results[cid] = ItemResult(ITEM_REFUSAL, resp.text)
                elif resp.status_code >= 400:
                    job.results[cid] = ItemResult(ITEM_ERROR, resp.text)
                else:
                    job.results[cid] = ItemResult(ITEM_DONE, resp.text)
            if status.state == DONE:
                for cid in ids:
                    if job.results[cid].state == ITEM_PENDING:
                        job.results[cid] = ItemResult(ITEM_ERROR, "missing from results")
                job.state = DONE
                break
        if clock() - start >= settings.timeout:
            job.state = FAILED
            log.error("job %s timed out after %.0fs", job.job_id, settings.timeout)
            break
        jitter = settings.poll_interval * settings.poll_jitter * rng.uniform(-1.0, 1.0)
        sleep(max(0.0, settings.poll_interval + jitter))
    if journal is not None:
        journal.append({"event": "finished", "batch_key": job.batch_key, "job_id": job.job_id,
                        "state": job.state})
    return job


def _single(service, item, settings, sleep, ledger):
    resp = _with_retries(lambda: service.complete(item), settings, sleep)
    if ledger is not None:
        ledger.record(resp)
    return resp


def transcribe_page_with_fallback(
    page: PageImage,
    service: TranscriptionService,
    settings: BatchSettings = BatchSettings(),
    template_dir: Path | None = None,
    ledger: CostLedger | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> TranscriptionDoc:
    """Standard prompt first; on refusal, one retry with the fallback prompt."""
    templates = load_templates(template_dir)
    payload = encode_png(page)
    cid = custom_id(page.doc_id, page.page_index)
    resp = _single(service, ServiceItem(cid, templates[STANDARD].render(), payload), settings, sleep, ledger)
    if settings.refusal.is_refusal(resp):
        log.info("refusal on %s, retrying with fallback prompt", cid)
        return retry_with_fallback(page, service, settings, template_dir, ledger, sleep, payload)
    return parse_markdown(resp.text, page.doc_id, page.page_index)


def retry_with_fallback(page, service, settings=BatchSettings(), template_dir=None, ledger=None,
                        sleep=time.sleep, payload: bytes | None = None) -> TranscriptionDoc:
    templates = load_templates(template_dir)
    payload = encode_png(page) if payload is None else payload
    cid = custom_id(page.doc_id, page.page_index)
    resp = _single(service, ServiceItem(cid, templates[FALLBACK].render(), payload), settings, sleep, ledger)
    if settings.refusal.is_refusal(resp):
        log.warning("refused twice, marking %s untranscribable by policy", cid)
        return TranscriptionDoc.untranscribable(page.doc_id, page.page_index, policy_refused=True)
    return parse_markdown(resp.text, page.doc_id, page.page_index)


@dataclass
class RunSummary:
    written: int = 0
    skipped: int = 0
    refusals: int = 0
    policy_refused: int = 0
    errors: int = 0
    submitted_jobs: int = 0
    resumed_jobs: int = 0
    failed_jobs: int = 0


def transcribe_corpus(
    pages: Sequence[PageImage],
    service: TranscriptionService,
    out_dir: Path,
    journal: JobJournal,
    settings: BatchSettings = BatchSettings(),
    template_dir: Path | None = None,
    ledger: CostLedger | None = None,
    sleep: Callable[[float], None] = time.sleep,
    clock: Callable[[], float] = time.monotonic,
) -> RunSummary:
    """Transcribe every page lacking an output file, resuming journaled jobs.

    A batch whose submission is journaled but unfinished is polled again by its
    stored job id instead of being resubmitted.
    """
    summary = RunSummary()
    todo = [p for p in pages if not transcription_path(out_dir, p.doc_id, p.page_index).exists()]
    summary.skipped = len(pages) - len(todo)
    if not todo:
        return summary
    by_id = {custom_id(p.doc_id, p.page_index): p for p in todo}
    prompt = load_templates(template_dir)[STANDARD].render()
    known = journal.state()

    jobs: list[BatchJob] = []
    # Resume unfinished journaled jobs first, then submit what is left.
    for key, rec in known.items():
        ids = [custom_id(d, p) for d, p in rec["items"]]
        if rec["finished"] is None and all(i in by_id for i in ids):
            jobs.append(BatchJob(rec["job_id"], [tuple(x) for x in rec["items"]], RUNNING, batch_key=key))
            summary.resumed_jobs += 1
            for i in ids:
                by_id.pop(i)
    remaining = list(by_id.values())
    for start in range(0, len(remaining), settings.batch_size):
        chunk = remaining[start : start + settings.batch_size]
        jobs.append(submit_batch(chunk, prompt, service, settings, journal, sleep))
        summary.submitted_jobs += 1

    lookup = {custom_id(p.doc_id, p.page_index): p for p in todo}
    for job in jobs:
        poll_until_done(job, service, settings, journal, ledger, sleep, clock)
        if job.state == FAILED:
            summary.failed_jobs += 1
        for cid, result in job.results.items():
            page = lookup[cid]
            if result.state == ITEM_DONE:
                write_transcription(out_dir, parse_markdown(result.text, page.doc_id, page.page_index))
                summary.written += 1
            elif result.state == ITEM_REFUSAL:
                summary.refusals += 1
                doc = retry_with_fallback(page, service, settings, template_dir, ledger, sleep)
                summary.policy_refused += doc.policy_refused
                write_transcription(out_dir, doc)
                summary.written += 1
            else:
                summary.errors += 1
                log.error("no transcription for %s: %s", cid, result.text or result.state)
    return summary
