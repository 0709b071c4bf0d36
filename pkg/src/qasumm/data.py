"""Dataset records, metric reports and JSONL ingestion.

One record per line::

    {"id": "...", "article": "...", "reference": "...", "summary": "...",
     "readability": 7, "relevance": 6}

Only ``id`` and ``article`` are required.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .composite import HumanJudgment
from .errors import DatasetIntegrityError
from .text import truncate_text

logger = logging.getLogger(__name__)

ARTICLE_LIMIT = 400
SUMMARY_LIMIT = 100

OK, DEGENERATE, UNAVAILABLE = "ok", "degenerate", "unavailable"


@dataclass
class Sample:
    id: str
    article: str
    reference: Optional[str] = None
    summary: Optional[str] = None
    human: Optional[HumanJudgment] = None
    group: Optional[str] = None

    @property
    def has_reference(self) -> bool:
        return self.reference is not None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"id": self.id, "article": self.article}
        if self.has_reference:
            d["reference"] = self.reference
        if self.summary is not None:
            d["summary"] = self.summary
        if self.human is not None:
            d["readability"] = self.human.readability
            d["relevance"] = self.human.relevance
        if self.group is not None:
            d["group"] = self.group
        return d


@dataclass
class MetricReport:
    sample_id: str
    values: dict[str, float] = field(default_factory=dict)
    flags: dict[str, str] = field(default_factory=dict)
    backend_metadata: dict[str, str] = field(default_factory=dict)

    def set(self, metric: str, value: float, flag: str = OK) -> None:
        self.values[metric] = float(value)
        self.flags[metric] = flag

    def unavailable(self, metric: str) -> None:
        self.values.pop(metric, None)
        self.flags[metric] = UNAVAILABLE

    def to_dict(self, scale100: bool = False, seed: Optional[int] = None) -> dict[str, Any]:
        values = {m: scale_value(m, v, scale100) for m, v in self.values.items()}
        d: dict[str, Any] = {
            "id": self.sample_id,
            "values": values,
            "flags": dict(self.flags),
            "scale": "x100" if scale100 else "raw",
            "backends": dict(self.backend_metadata),
        }
        if seed is not None:
            d["seed"] = seed
        return d


def _percent_metric(metric: str) -> bool:
    return metric.startswith(("rouge", "qa_"))


def scale_value(metric: str, value: float, scale100: bool) -> float:
    """ROUGE and QA values go to the 0-100 scale when ``scale100`` is set."""
    return value * 100.0 if scale100 and _percent_metric(metric) else value


def unscale_value(metric: str, value: float, scale100: bool) -> float:
    return value / 100.0 if scale100 and _percent_metric(metric) else value


def report_from_dict(record: dict[str, Any]) -> MetricReport:
    x100 = record.get("scale") == "x100"
    values = {m: unscale_value(m, float(v), x100) for m, v in record["values"].items()}
    return MetricReport(str(record["id"]), values, dict(record.get("flags", {})), dict(record.get("backends", {})))


@dataclass(frozen=True)
class LineError:
    line: int
    message: str


@dataclass
class LoadResult:
    samples: list[Sample]
    errors: list[LineError]

    def __iter__(self):
        return iter(self.samples)

    def __len__(self) -> int:
        return len(self.samples)


def _optional_str(record: dict, key: str) -> Optional[str]:
    value = record.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise ValueError(f"field {key!r} must be a string")
    return value


def parse_record(record: Any, truncate: bool = True) -> Sample:
    if not isinstance(record, dict):
        raise ValueError("record is not a JSON object")
    sid = record.get("id")
    if sid is None or isinstance(sid, (dict, list)):
        raise ValueError("missing 'id'")
    article = record.get("article")
    if not isinstance(article, str):
        raise ValueError("missing 'article'")
    reference = _optional_str(record, "reference")
    summary = _optional_str(record, "summary")
    human = None
    if record.get("readability") is not None or record.get("relevance") is not None:
        try:
            human = HumanJudgment(float(record["readability"]), float(record["relevance"]))
        except (KeyError, TypeError) as exc:
            raise ValueError("human scores need both 'readability' and 'relevance'") from exc
    if truncate:
        article = truncate_text(article, ARTICLE_LIMIT)
        if reference is not None:
            reference = truncate_text(reference, SUMMARY_LIMIT)
        if summary is not None:
            summary = truncate_text(summary, SUMMARY_LIMIT)
    group = record.get("group")
    return Sample(str(sid), article, reference, summary, human, None if group is None else str(group))


def load_dataset(path: str | Path, truncate: bool = True) -> LoadResult:
    """Read a JSONL file into samples.

    Malformed lines are skipped and reported with their 1-based line
    number; duplicate ids abort the load.
    """
    samples: list[Sample] = []
    errors: list[LineError] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                sample = parse_record(json.loads(line), truncate)
            except ValueError as exc:
                logger.warning("%s:%d: %s", path, lineno, exc)
                errors.append(LineError(lineno, str(exc)))
                continue
            if sample.id in seen:
                raise DatasetIntegrityError(
                    f"duplicate id {sample.id!r} on lines {seen[sample.id]} and {lineno}"
                )
            seen[sample.id] = lineno
            samples.append(sample)
    return LoadResult(samples, errors)
