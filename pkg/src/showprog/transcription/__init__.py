"""Drive an external vision-language model to transcribe page images."""

from .batch import (
    BatchJob,
    BatchSettings,
    CostLedger,
    ItemResult,
    JobJournal,
    RunSummary,
    custom_id,
    poll_until_done,
    retry_with_fallback,
    submit_batch,
    transcribe_corpus,
    transcribe_page_with_fallback,
)
from .markdown import (
    UNTRANSCRIBABLE,
    Block,
    TranscriptionDoc,
    iter_transcriptions,
    parse_markdown,
    read_transcription,
    write_transcription,
)
from .prompts import FALLBACK, STANDARD, PromptTemplate, build_prompt, load_templates
from .service import (
    HttpTranscriptionService,
    JobStatus,
    RefusalPolicy,
    ServiceItem,
    ServiceResponse,
    StubService,
    TranscriptionService,
    directory_responder,
    stub_transport,
)
