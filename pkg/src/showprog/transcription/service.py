"""Wire contract for vision-language transcription services.

A service accepts ``(prompt, image bytes)`` items. It exposes a batch API
(``submit`` returns a job handle, ``status`` returns per-item terminal
results once the job is done) and a synchronous ``complete`` call used for
single retries. :class:`StubService` implements the contract in process;
:class:`HttpTranscriptionService` speaks it over JSON/HTTP.
"""

from __future__ import annotations

import base64
import json
import os
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

import httpx

from ..errors import ConfigurationError, TransportError

RUNNING = "running"
DONE = "done"


@dataclass(frozen=True)
class ServiceItem:
    custom_id: str
    prompt: str
    image: bytes = b""


@dataclass(frozen=True)
class ServiceResponse:
    status_code: int
    text: str
    input_tokens: int = 0
    output_tokens: int = 0

    def to_wire(self) -> dict:
        return {
            "status_code": self.status_code,
            "text": self.text,
            "usage": {"input_tokens": self.input_tokens, "output_tokens": self.output_tokens},
        }

    @classmethod
    def from_wire(cls, data: Mapping) -> "ServiceResponse":
        usage = data.get("usage") or {}
        return cls(
            int(data["status_code"]),
            str(data.get("text", "")),
            int(usage.get("input_tokens", 0)),
            int(usage.get("output_tokens", 0)),
        )


@dataclass
class JobStatus:
    state: str
    results: dict[str, ServiceResponse] = field(default_factory=dict)


class TranscriptionService(Protocol):
    def submit(self, items: Sequence[ServiceItem]) -> str: ...

    def status(self, job_id: str) -> JobStatus: ...

    def complete(self, item: ServiceItem) -> ServiceResponse: ...


DEFAULT_REFUSAL_PATTERNS = (
    r"(?i)\bcontent policy\b",
    r"(?i)\bI(?:'m| am)? (?:sorry, but I )?(?:can(?:'|no)t|cannot|unable to) (?:help|assist|transcribe|comply)",
)


@dataclass(frozen=True)
class RefusalPolicy:
    """Decides whether a response is a content refusal rather than a transcription."""

    status_codes: tuple[int, ...] = (403,)
    patterns: tuple[str, ...] = DEFAULT_REFUSAL_PATTERNS

    def __post_init__(self):
        object.__setattr__(self, "_compiled", tuple(re.compile(p) for p in self.patterns))

    def is_refusal(self, response: ServiceResponse) -> bool:
        if response.status_code in self.status_codes:
            return True
        return any(p.search(response.text) for p in self._compiled)


def is_transport_failure(response: ServiceResponse) -> bool:
    return response.status_code >= 500


# -- in-process stub ----------------------------------------------------------

STUB_REFUSAL_TEXT = "I'm sorry, but I can't help with transcribing this image (content policy)."


class StubService:
    """Deterministic stand-in for a batch transcription API.

    ``respond(item)`` produces the transcription text; ``refuses(item)`` marks
    refusals. Jobs finish after ``polls_to_complete`` status calls, or never.
    With ``state_dir`` set, jobs survive across instances (and processes), which
    is what resumption tests need.
    """

    def __init__(
        self,
        respond: Callable[[ServiceItem], str] | None = None,
        refuses: Callable[[ServiceItem], bool] | None = None,
        polls_to_complete: int = 1,
        never_complete: bool = False,
        state_dir: Path | None = None,
        transport_failures: int = 0,
    ):
        self.respond = respond or (lambda item: f"# {item.custom_id}")
        self.refuses = refuses or (lambda item: False)
        self.polls_to_complete = polls_to_complete
        self.never_complete = never_complete
        self.state_dir = Path(state_dir) if state_dir else None
        self.transport_failures = transport_failures
        self._lock = threading.Lock()
        self._jobs: dict[str, dict] = {}
        self.submissions: list[list[str]] = []
        self.requests = 0
        if self.state_dir:
            self.state_dir.mkdir(parents=True, exist_ok=True)

    # persistence helpers
    def _job_path(self, job_id: str) -> Path:
        return self.state_dir / f"{job_id}.json"

    def _load(self, job_id: str) -> dict:
        if job_id in self._jobs:
            return self._jobs[job_id]
        if self.state_dir and self._job_path(job_id).exists():
            job = json.loads(self._job_path(job_id).read_text())
            self._jobs[job_id] = job
            return job
        raise KeyError(job_id)

    def _save(self, job_id: str, job: dict) -> None:
        self._jobs[job_id] = job
        if self.state_dir:
            self._job_path(job_id).write_text(json.dumps(job, sort_keys=True))

    def _next_job_id(self) -> str:
        if self.state_dir:
            n = len(list(self.state_dir.glob("job-*.json")))
        else:
            n = len(self._jobs)
        return f"job-{n:04d}"

    def _maybe_fail(self):
        if self.transport_failures > 0:
            self.transport_failures -= 1
            raise TransportError("stub transport failure")

    def _answer(self, item: ServiceItem) -> ServiceResponse:
        tokens_in = len(item.prompt.split()) + len(item.image) // 750
        if self.refuses(item):
            return ServiceResponse(200, STUB_REFUSAL_TEXT, tokens_in, 16)
        text = self.respond(item)
        return ServiceResponse(200, text, tokens_in, len(text.split()))

    def submit(self, items: Sequence[ServiceItem]) -> str:
        with self._lock:
            self._maybe_fail()
            job_id = self._next_job_id()
            ids = [it.custom_id for it in items]
            self.submissions.append(ids)
            self.requests += len(items)
            job = {
                "items": [{"custom_id": it.custom_id, "prompt": it.prompt,
                           "image_len": len(it.image)} for it in items],
                "polls": 0,
            }
            self._save(job_id, job)
            return job_id

    def status(self, job_id: str) -> JobStatus:
        with self._lock:
            self._maybe_fail()
            job = self._load(job_id)
            job["polls"] += 1
            self._save(job_id, job)
            if self.never_complete or job["polls"] < self.polls_to_complete:
                return JobStatus(RUNNING)
            results = {}
            for entry in job["items"]:
                item = ServiceItem(entry["custom_id"], entry["prompt"], b"\0" * entry["image_len"])
                results[item.custom_id] = self._answer(item)
            return JobStatus(DONE, results)

    def complete(self, item: ServiceItem) -> ServiceResponse:
        with self._lock:
            self._maybe_fail()
            self.requests += 1
            return self._answer(item)

    def submitted_job_count(self) -> int:
        if self.state_dir:
            return len(list(self.state_dir.glob("job-*.json")))
        return len(self._jobs)


def directory_responder(root: Path) -> Callable[[ServiceItem], str]:
    """Answer ``<doc_id>/<page_index>`` items with ``<root>/<doc_id>/<page_index>.md``."""
    root = Path(root)

    def respond(item: ServiceItem) -> str:
        path = root / f"{item.custom_id}.md"
        if path.exists():
            return path.read_text(encoding="utf-8").rstrip("\n")
        return "[UNABLE TO TRANSCRIBE]"

    return respond


# -- HTTP adapter -------------------------------------------------------------


def _item_to_wire(item: ServiceItem) -> dict:
    return {
        "custom_id": item.custom_id,
        "prompt": item.prompt,
        "image_b64": base64.b64encode(item.image).decode("ascii"),
    }


def _item_from_wire(data: Mapping) -> ServiceItem:
    return ServiceItem(data["custom_id"], data["prompt"], base64.b64decode(data.get("image_b64", "")))


class HttpTranscriptionService:
    """JSON over HTTP: ``POST /batches``, ``GET /batches/{id}``, ``POST /complete``."""

    def __init__(self, base_url: str, token: str | None = None, client: httpx.Client | None = None,
                 timeout: float = 120.0):
        headers = {"Authorization": f"Bearer {token}"} if token else {}
        self.client = client or httpx.Client(timeout=timeout)
        self.base_url = base_url.rstrip("/")
        self.headers = headers

    @classmethod
    def from_env(cls, base_url: str, token_env: str | None, **kwargs) -> "HttpTranscriptionService":
        token = None
        if token_env:
            token = os.environ.get(token_env)
            if token is None:
                raise ConfigurationError(f"environment variable {token_env} is not set")
        return cls(base_url, token, **kwargs)

    def _request(self, method: str, path: str, **kwargs) -> dict:
        try:
            resp = self.client.request(method, self.base_url + path, headers=self.headers, **kwargs)
        except httpx.TransportError as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code >= 500 or resp.status_code == 429:
            raise TransportError(f"{method} {path}: HTTP {resp.status_code}")
        resp.raise_for_status()
        return resp.json()

    def submit(self, items: Sequence[ServiceItem]) -> str:
        data = self._request("POST", "/batches", json={"items": [_item_to_wire(i) for i in items]})
        return str(data["job_id"])

    def status(self, job_id: str) -> JobStatus:
        data = self._request("GET", f"/batches/{job_id}")
        results = {cid: ServiceResponse.from_wire(r) for cid, r in (data.get("results") or {}).items()}
        return JobStatus(data["state"], results)

    def complete(self, item: ServiceItem) -> ServiceResponse:
        return ServiceResponse.from_wire(self._request("POST", "/complete", json=_item_to_wire(item)))


def stub_transport(stub: StubService) -> httpx.MockTransport:
    """Serve ``stub`` through the HTTP wire format (for adapter tests)."""

    def handler(request: httpx.Request) -> httpx.Response:
        path = request.url.path
        try:
            if request.method == "POST" and path.endswith("/batches"):
                items = [_item_from_wire(d) for d in json.loads(request.content)["items"]]
                return httpx.Response(200, json={"job_id": stub.submit(items)})
            if request.method == "GET" and "/batches/" in path:
                status = stub.status(path.rsplit("/", 1)[1])
                body = {"state": status.state,
                        "results": {k: v.to_wire() for k, v in status.results.items()}}
                return httpx.Response(200, json=body)
            if request.method == "POST" and path.endswith("/complete"):
                item = _item_from_wire(json.loads(request.content))
                return httpx.Response(200, json=stub.complete(item).to_wire())
        except TransportError:
            return httpx.Response(503)
        except KeyError:
            return httpx.Response(404)
        return httpx.Response(404)

    return httpx.MockTransport(handler)
