import httpx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from showprog.errors import ConfigurationError, InvalidInputError, TransportError
from showprog.imaging import PageImage
from showprog.transcription import (
    FALLBACK,
    STANDARD,
    UNTRANSCRIBABLE,
    BatchSettings,
    Block,
    CostLedger,
    HttpTranscriptionService,
    ItemResult,
    JobJournal,
    RefusalPolicy,
    ServiceResponse,
    StubService,
    TranscriptionDoc,
    build_prompt,
    load_templates,
    parse_markdown,
    poll_until_done,
    stub_transport,
    submit_batch,
    transcribe_corpus,
    transcribe_page_with_fallback,
)
from showprog.transcription.markdown import BODY, PAGE_MARKER, TITLE, UNREADABLE

NO_SLEEP = lambda s: None  # noqa: E731


def pages(n, doc="prog"):
    return [PageImage(doc, i, np.full((8, 6), 255, dtype=np.uint8)) for i in range(n)]


def is_fallback(item):
    return item.prompt.startswith("Context for this request:")


# -- prompts ------------------------------------------------------------------


def test_standard_prompt_text():
    text = build_prompt(STANDARD)
    assert "DO NOT summarize, paraphrase, or infer missing text" in text
    assert text.startswith("This image corresponds to a page in a theater program.")
    assert "[UNABLE TO\n TRANSCRIBE]" in text
    assert "\\#" not in text and "# Title content" in text


def test_fallback_prompt_prefixes_standard():
    std, fb = build_prompt(STANDARD), build_prompt(FALLBACK)
    assert fb.startswith("Context for this request: the image is a scanned page")
    assert fb.endswith(std)
    assert len(fb) > len(std)
    assert load_templates()[FALLBACK].kind == "fallback-prefixed"


def test_missing_template_dir(tmp_path):
    with pytest.raises(ConfigurationError):
        build_prompt(STANDARD, template_dir=tmp_path)


# -- markdown -----------------------------------------------------------------


def test_parse_title_and_body():
    doc = parse_markdown("# Coquin de Coq\nde Sean O'Casey")
    assert doc.blocks == [Block(TITLE, "Coquin de Coq"), Block(BODY, "de Sean O'Casey")]


def test_parse_sentinel_and_empty():
    doc = parse_markdown("[UNABLE TO TRANSCRIBE]")
    assert doc.blocks == [Block(UNREADABLE, "")]
    assert doc.render() == UNTRANSCRIBABLE
    assert parse_markdown("").blocks == []


def test_parse_page_marker():
    doc = parse_markdown("PAGE 13\n# Distribution\nMise en scène : Guy Rétoré")
    assert doc.blocks[0] == Block(PAGE_MARKER, "13")
    assert doc.render().startswith("PAGE 13\n# Distribution")


def test_render_round_trip_modulo_trailing_whitespace():
    raw = "# Titre  \nligne une\n\nligne deux   \n\n\n"
    assert parse_markdown(raw).render() == "# Titre\nligne une\n\nligne deux"


_line = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Cc", "Zl", "Zp"), blacklist_characters="\n\r\x0b\x0c\x1c\x1d\x1e\x85"),
    min_size=1,
    max_size=20,
).map(str.strip).filter(lambda s: s and not s.startswith("#") and not s.startswith("PAGE") and s != UNTRANSCRIBABLE)


@st.composite
def well_formed_docs(draw):
    blocks = []
    prev_body = False
    for kind in draw(st.lists(st.sampled_from([TITLE, BODY, PAGE_MARKER]), max_size=6)):
        if kind == BODY:
            if prev_body:
                continue
            blocks.append(Block(BODY, "\n".join(draw(st.lists(_line, min_size=1, max_size=3)))))
        elif kind == TITLE:
            blocks.append(Block(TITLE, draw(_line)))
        else:
            blocks.append(Block(PAGE_MARKER, str(draw(st.integers(1, 99)))))
        prev_body = kind == BODY
    return TranscriptionDoc("d", 0, blocks)


@given(well_formed_docs())
def test_parse_render_identity(doc):
    assert parse_markdown(doc.render()).blocks == doc.blocks


# -- batch submission & polling ------------------------------------------------


def test_submit_fifty(tmp_path):
    stub = StubService()
    journal = JobJournal(tmp_path / "journal.jsonl")
    job = submit_batch(pages(50), "p", stub, journal=journal)
    assert len(job.items) == 50
    assert job.state == "running"
    assert journal.state()[job.batch_key]["job_id"] == job.job_id


def test_submit_limits():
    with pytest.raises(InvalidInputError):
        submit_batch([], "p", StubService())
    stub = StubService()
    with pytest.raises(InvalidInputError):
        submit_batch(pages(51), "p", stub)
    assert stub.submissions == []
    with pytest.raises(InvalidInputError):
        submit_batch(pages(1), "p", stub, BatchSettings(byte_limit=10))
    assert stub.submissions == []


def test_submit_retries_transport_errors():
    stub = StubService(transport_failures=2)
    delays = []
    job = submit_batch(pages(2), "p", stub, sleep=delays.append)
    assert job.job_id == "job-0000"
    assert delays == [1.0, 2.0]
    with pytest.raises(TransportError):
        submit_batch(pages(2), "p", StubService(transport_failures=9), sleep=NO_SLEEP)


def test_poll_happy_path():
    stub = StubService(polls_to_complete=3)
    job = submit_batch(pages(4), "p", stub)
    ledger = CostLedger(3.0, 15.0)
    poll_until_done(job, stub, ledger=ledger, sleep=NO_SLEEP)
    assert job.state == "done"
    assert job.refusals() == []
    assert all(r.state == "done" for r in job.results.values())
    assert ledger.requests == 4 and ledger.cost > 0


def test_poll_flags_refusal():
    stub = StubService(refuses=lambda item: item.custom_id == "prog/3")
    job = poll_until_done(submit_batch(pages(5), "p", stub), stub, sleep=NO_SLEEP)
    assert job.results["prog/3"].state == "refusal"
    assert [k for k, r in job.results.items() if r.state == "done"] == ["prog/0", "prog/1", "prog/2", "prog/4"]


def test_poll_timeout_keeps_partials():
    stub = StubService(never_complete=True)
    job = submit_batch(pages(2), "p", stub)
    job.results["prog/0"] = ItemResult("done", "kept")
    now = [0.0]

    def sleep(s):
        now[0] += s

    poll_until_done(job, stub, BatchSettings(poll_interval=10, timeout=60), sleep=sleep, clock=lambda: now[0])
    assert job.state == "failed"
    assert job.results["prog/0"].text == "kept"
    assert job.results["prog/1"].state == "pending"


def test_refusal_policy():
    policy = RefusalPolicy()
    assert policy.is_refusal(ServiceResponse(403, "nope"))
    assert policy.is_refusal(ServiceResponse(200, "I'm sorry, but I can't help with that."))
    assert not policy.is_refusal(ServiceResponse(200, UNTRANSCRIBABLE))
    assert not policy.is_refusal(ServiceResponse(200, "# Cannot Stop Dancing"))
    custom = RefusalPolicy(status_codes=(), patterns=(r"^REFUSED$",))
    assert custom.is_refusal(ServiceResponse(200, "REFUSED"))
    assert not custom.is_refusal(ServiceResponse(403, "fine"))


# -- fallback -----------------------------------------------------------------


def test_fallback_not_needed():
    stub = StubService(respond=lambda item: "# Titre")
    doc = transcribe_page_with_fallback(pages(1)[0], stub)
    assert stub.requests == 1
    assert doc.blocks == [Block(TITLE, "Titre")]


def test_fallback_used_after_refusal():
    stub = StubService(respond=lambda item: "# Titre\ncorps", refuses=lambda item: not is_fallback(item))
    doc = transcribe_page_with_fallback(pages(1)[0], stub)
    assert stub.requests == 2
    assert doc.blocks[0] == Block(TITLE, "Titre")


def test_fallback_refused_twice():
    stub = StubService(refuses=lambda item: True)
    doc = transcribe_page_with_fallback(pages(1)[0], stub)
    assert stub.requests == 2
    assert doc.is_untranscribable and doc.policy_refused


# -- corpus runs --------------------------------------------------------------


def test_corpus_run_resumes_without_resubmitting(tmp_path):
    state = tmp_path / "stub"
    journal = JobJournal(tmp_path / "journal.jsonl")
    out = tmp_path / "md"
    first = StubService(state_dir=state, never_complete=True)
    now = [0.0]

    class Killed(Exception):
        pass

    def die(_):
        raise Killed

    with pytest.raises(Killed):
        transcribe_corpus(pages(3), first, out, journal, sleep=die, clock=lambda: now[0])
    assert first.submitted_job_count() == 1

    second = StubService(state_dir=state, respond=lambda i: f"# page {i.custom_id}")
    summary = transcribe_corpus(pages(3), second, out, journal, sleep=NO_SLEEP)
    assert summary.resumed_jobs == 1 and summary.submitted_jobs == 0
    assert second.submitted_job_count() == 1
    assert (out / "prog" / "2.md").read_text() == "# page prog/2\n"

    third = StubService(state_dir=state)
    again = transcribe_corpus(pages(3), third, out, journal, sleep=NO_SLEEP)
    assert again.skipped == 3 and third.requests == 0


def test_corpus_run_splits_batches_and_falls_back(tmp_path):
    stub = StubService(
        respond=lambda i: "texte",
        refuses=lambda i: i.custom_id == "prog/4" and not is_fallback(i),
    )
    summary = transcribe_corpus(
        pages(7), stub, tmp_path / "md", JobJournal(tmp_path / "j.jsonl"),
        BatchSettings(batch_size=3), sleep=NO_SLEEP,
    )
    assert [len(s) for s in stub.submissions] == [3, 3, 1]
    assert summary.written == 7 and summary.refusals == 1 and summary.policy_refused == 0


# -- HTTP adapter -------------------------------------------------------------


def test_http_adapter_speaks_wire_contract():
    stub = StubService(respond=lambda i: "# via http", refuses=lambda i: i.custom_id == "prog/1")
    client = httpx.Client(transport=stub_transport(stub))
    svc = HttpTranscriptionService("http://stub.local/v1", token="t", client=client)
    job = poll_until_done(submit_batch(pages(2), "p", svc), svc, sleep=NO_SLEEP)
    assert job.results["prog/0"].text == "# via http"
    assert job.results["prog/1"].state == "refusal"
    doc = transcribe_page_with_fallback(pages(1)[0], svc)
    assert doc.render() == "# via http"


def test_http_adapter_maps_server_errors_to_transport():
    client = httpx.Client(transport=httpx.MockTransport(lambda r: httpx.Response(503)))
    svc = HttpTranscriptionService("http://x", client=client)
    with pytest.raises(TransportError):
        svc.submit([])


def test_http_token_env(monkeypatch):
    monkeypatch.delenv("SHOWPROG_TEST_TOKEN", raising=False)
    with pytest.raises(ConfigurationError):
        HttpTranscriptionService.from_env("http://x", "SHOWPROG_TEST_TOKEN")
    monkeypatch.setenv("SHOWPROG_TEST_TOKEN", "abc")
    svc = HttpTranscriptionService.from_env("http://x", "SHOWPROG_TEST_TOKEN")
    assert svc.headers["Authorization"] == "Bearer abc"
