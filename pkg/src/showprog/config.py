"""Pipeline configuration: one YAML file, every tunable constant in the open."""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import ConfigurationError
from .evaluation.report import AGGREGATIONS, METRICS
from .segmentation.widths import DEFAULT_TOLERANCE


@dataclass
class Paths:
    images: Path = Path("images")
    masks: Path | None = None
    subpages: Path = Path("out/subpages")
    transcriptions: Path = Path("out/transcriptions")
    reference: Path | None = None
    reports: Path = Path("out/reports")
    graphs: Path = Path("out/graphs")
    drafts: Path = Path("drafts")
    state: Path = Path("out/state")


@dataclass
class SegmentationSection:
    tolerance: float = DEFAULT_TOLERANCE
    reference_widths: Path | None = None  # None: the bundled Avignon table
    band_fraction: float = 0.04
    band_density: float = 0.005
    mask_radius: int = 1
    distance_fraction: float = 0.2
    prominence_fraction: float = 0.10
    sigma_fraction: float = 1 / 200
    reorder_born_digital: bool = True
    year_pattern: str = r"(1[89]\d\d|20\d\d)"


@dataclass
class Endpoint:
    kind: str = "stub"  # stub | http
    url: str | None = None
    token_env: str | None = None
    timeout: float = 120.0
    # stub only
    responses: Path | None = None
    polls_to_complete: int = 1
    never_complete: bool = False


@dataclass
class TranscriptionSection:
    batch_size: int = 50
    byte_limit: int = 5_000_000
    poll_interval: float = 10.0
    poll_jitter: float = 0.1
    timeout: float = 7200.0
    max_retries: int = 3
    backoff: float = 2.0
    price_input_per_mtok: float = 0.0
    price_output_per_mtok: float = 0.0
    templates: Path | None = None
    endpoint: Endpoint = field(default_factory=Endpoint)


@dataclass
class EvaluationSection:
    line_threshold: float = 0.8
    ner_threshold: float = 0.85
    optimal_lines: bool = False
    metrics: tuple[str, ...] = METRICS
    aggregation: str = "both"
    gazetteer: Path | None = None


@dataclass
class TriplesSection:
    catalog: Path | None = None
    judge_template: Path | None = None
    judge: Endpoint = field(default_factory=lambda: Endpoint(kind="rubric", timeout=60.0))
    grade_min: int = 0
    grade_max: int = 10
    judge_retries: int = 1
    problems_per_step: int = 4
    drafts_per_problem: int = 8
    base_iri: str = "https://example.org/showprog/id"


@dataclass
class VocabularySection:
    aat: Path | None = None
    roles: Path | None = None
    ext: Path | None = None


@dataclass
class Document:
    year: int | None = None
    born_digital: bool = False


@dataclass
class PipelineConfig:
    paths: Paths = field(default_factory=Paths)
    segmentation: SegmentationSection = field(default_factory=SegmentationSection)
    transcription: TranscriptionSection = field(default_factory=TranscriptionSection)
    evaluation: EvaluationSection = field(default_factory=EvaluationSection)
    triples: TriplesSection = field(default_factory=TriplesSection)
    vocabularies: VocabularySection = field(default_factory=VocabularySection)
    documents: dict[str, Document] = field(default_factory=dict)
    workers: int = 1
    root: Path = Path(".")

    def document(self, doc_id: str) -> Document:
        """Metadata for ``doc_id``; the year falls back to the first year-like run in the id."""
        doc = self.documents.get(doc_id, Document())
        if doc.year is None:
            m = re.search(self.segmentation.year_pattern, doc_id)
            if not m:
                raise ConfigurationError(f"no year configured or recognisable for document {doc_id!r}")
            doc = dataclasses.replace(doc, year=int(m.group(1)))
        return doc

    def to_dict(self) -> dict:
        def plain(value):
            if dataclasses.is_dataclass(value):
                return {f.name: plain(getattr(value, f.name)) for f in fields(value) if f.name != "root"}
            if isinstance(value, Path):
                return str(value)
            if isinstance(value, (tuple, list)):
                return [plain(v) for v in value]
            if isinstance(value, dict):
                return {k: plain(v) for k, v in value.items()}
            return value

        return plain(self)

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, allow_unicode=True)


# -- loading ------------------------------------------------------------------


def _resolve(value: Path | None, root: Path) -> Path | None:
    if value is None:
        return None
    return value if value.is_absolute() else root / value


def _build(cls, data: Any, where: str, root: Path):
    if data is None:
        return cls()
    if not isinstance(data, Mapping):
        raise ConfigurationError(f"{where}: expected a mapping")
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigurationError(f"{where}: unknown key(s) {', '.join(sorted(map(str, unknown)))}")
    kwargs = {}
    for name, value in data.items():
        kwargs[name] = _coerce(known[name], value, f"{where}.{name}", root)
    return cls(**kwargs)


_SECTIONS = {
    "Paths": Paths, "SegmentationSection": SegmentationSection, "Endpoint": Endpoint,
    "TranscriptionSection": TranscriptionSection, "EvaluationSection": EvaluationSection,
    "TriplesSection": TriplesSection, "VocabularySection": VocabularySection,
}


def _coerce(f: dataclasses.Field, value: Any, where: str, root: Path):
    t = str(f.type)
    if t in _SECTIONS:
        return _build(_SECTIONS[t], value, where, root)
    if value is None:
        if "None" in t:
            return None
        raise ConfigurationError(f"{where}: may not be null")
    if t.startswith("Path"):
        if not isinstance(value, str):
            raise ConfigurationError(f"{where}: expected a path")
        return _resolve(Path(value), root)
    if t.startswith("tuple"):
        if not isinstance(value, list):
            raise ConfigurationError(f"{where}: expected a list")
        return tuple(value)
    want = {"int": int, "float": (int, float), "bool": bool, "str": str}.get(t.split(" ")[0])
    if want is not None:
        if isinstance(value, bool) and want is not bool:
            raise ConfigurationError(f"{where}: expected {t}, got a boolean")
        if not isinstance(value, want):
            raise ConfigurationError(f"{where}: expected {t}, got {type(value).__name__}")
        return float(value) if t.startswith("float") else value
    return value


def _check(cfg: PipelineConfig) -> None:
    seg, tr, ev, tri = cfg.segmentation, cfg.transcription, cfg.evaluation, cfg.triples
    problems = []
    if not 0 < seg.tolerance <= 1:
        problems.append("segmentation.tolerance must lie in (0, 1]")
    if not 0 < seg.band_fraction < 0.5:
        problems.append("segmentation.band_fraction must lie in (0, 0.5)")
    if tr.batch_size < 1:
        problems.append("transcription.batch_size must be positive")
    for ep, name in ((tr.endpoint, "transcription.endpoint"), (tri.judge, "triples.judge")):
        allowed = ("stub", "http") if name.startswith("transcription") else ("rubric", "http")
        if ep.kind not in allowed:
            problems.append(f"{name}.kind must be one of {allowed}")
        if ep.kind == "http" and not ep.url:
            problems.append(f"{name}.url is required for an http endpoint")
    if not 0 < ev.line_threshold <= 1 or not 0 < ev.ner_threshold <= 1:
        problems.append("evaluation thresholds must lie in (0, 1]")
    if set(ev.metrics) - set(METRICS):
        problems.append(f"evaluation.metrics: unknown {sorted(set(ev.metrics) - set(METRICS))}")
    if ev.aggregation not in AGGREGATIONS:
        problems.append(f"evaluation.aggregation must be one of {AGGREGATIONS}")
    if not tri.grade_min < tri.grade_max:
        problems.append("triples.grade_min must be below grade_max")
    if tri.problems_per_step < 1 or tri.drafts_per_problem < 1:
        problems.append("triples step shape must be positive")
    if cfg.workers < 1:
        problems.append("workers must be positive")
    try:
        re.compile(seg.year_pattern)
    except re.error as exc:
        problems.append(f"segmentation.year_pattern: {exc}")
    for path in (seg.reference_widths, ev.gazetteer, tri.catalog, tri.judge_template,
                 cfg.vocabularies.aat, cfg.vocabularies.roles, cfg.vocabularies.ext, tr.templates):
        if path is not None and not path.exists():
            problems.append(f"{path} does not exist")
    if problems:
        raise ConfigurationError("; ".join(problems))


def config_from_mapping(data: Mapping | None, root: Path = Path(".")) -> PipelineConfig:
    data = dict(data or {})
    docs_raw = data.pop("documents", None) or {}
    if not isinstance(docs_raw, Mapping):
        raise ConfigurationError("documents: expected a mapping of document ids")
    workers = data.pop("workers", 1)
    sections = {}
    for f in fields(PipelineConfig):
        if f.name in data:
            sections[f.name] = _coerce(f, data.pop(f.name), f.name, root)
    if data:
        raise ConfigurationError(f"unknown top-level key(s): {', '.join(sorted(map(str, data)))}")
    docs = {str(k): _build(Document, v, f"documents.{k}", root) for k, v in docs_raw.items()}
    if not isinstance(workers, int) or isinstance(workers, bool):
        raise ConfigurationError("workers: expected an integer")
    cfg = PipelineConfig(**sections, documents=docs, workers=workers, root=root)
    # relative defaults hang off the config directory too
    for f in fields(Paths):
        value = getattr(cfg.paths, f.name)
        setattr(cfg.paths, f.name, _resolve(value, root))
    _check(cfg)
    return cfg


def load_config(path: Path | None) -> PipelineConfig:
    if path is None:
        return config_from_mapping({}, Path.cwd())
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: invalid YAML ({exc})") from exc
    if data is not None and not isinstance(data, Mapping):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    return config_from_mapping(data, path.parent.resolve())
