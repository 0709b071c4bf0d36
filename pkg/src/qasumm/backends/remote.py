"""HTTP clients for externally hosted NER, QA and LM services.

Wire format (JSON over POST):

* ``/answer``   ``{"context", "question", "gold"?}`` ->
  ``{"answer", "confidence", "gold_confidence"?}``
* ``/nll``      ``{"text"}`` -> ``{"per_token_nll": [...]}``
* ``/entities`` ``{"tokens", "sentences"}`` -> ``{"entities": [{"start", "end"}]}``
  (token indices, half-open)

All requests are idempotent, so failed calls are retried with exponential
backoff before a :class:`BackendUnavailable` is raised.
"""

from __future__ import annotations

import logging
import threading
import time
from typing import Any, Optional

import httpx

from ..errors import BackendUnavailable, ProtocolError
from ..text import TokenizedText
from .base import Entity, LMScore, QAResult, check_span_contract

logger = logging.getLogger(__name__)


class RemoteClient:
    def __init__(
        self,
        base_url: str,
        timeout: float = 30.0,
        retries: int = 3,
        backoff: float = 0.5,
        max_in_flight: int = 8,
        transport: Optional[httpx.BaseTransport] = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.retries = retries
        self.backoff = backoff
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._client = httpx.Client(
            base_url=self.base_url, timeout=timeout, transport=transport
        )

    @property
    def name(self) -> str:
        return f"{type(self).__name__}({self.base_url})"

    def close(self) -> None:
        self._client.close()

    def _post(self, path: str, payload: dict[str, Any]) -> dict[str, Any]:
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                with self._slots:
                    resp = self._client.post(path, json=payload)
            except httpx.TransportError as exc:
                last_error = exc
                logger.warning("%s%s failed (attempt %d): %s", self.base_url, path, attempt + 1, exc)
                continue
            if resp.status_code >= 500:
                last_error = RuntimeError(f"HTTP {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise ProtocolError(f"{path} rejected request: HTTP {resp.status_code} {resp.text}")
            try:
                body = resp.json()
            except ValueError as exc:
                raise ProtocolError(f"{path} returned non-JSON body") from exc
            if not isinstance(body, dict):
                raise ProtocolError(f"{path} returned {type(body).__name__}, expected object")
            return body
        raise BackendUnavailable(
            f"{self.base_url}{path} unreachable after {self.retries + 1} attempts: {last_error}",
            backend=self.name,
        )

    def healthy(self) -> bool:
        try:
            resp = self._client.get("/health")
        except httpx.TransportError:
            return False
        return resp.status_code < 500


def _number(body: dict, key: str, path: str) -> float:
    value = body.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProtocolError(f"{path} response lacks numeric {key!r}")
    return float(value)


class RemoteQAClient(RemoteClient):
    def answer(
        self, context: str, question: str, gold: Optional[str] = None
    ) -> QAResult:
        if not context.strip():
            return QAResult("", 0.0, 0.0 if gold is not None else None)
        payload = {"context": context, "question": question}
        if gold is not None:
            payload["gold"] = gold
        body = self._post("/answer", payload)
        answer = body.get("answer")
        if not isinstance(answer, str):
            raise ProtocolError("/answer response lacks string 'answer'")
        gold_conf = None
        if gold is not None:
            gold_conf = _number(body, "gold_confidence", "/answer")
        try:
            result = QAResult(answer, _number(body, "confidence", "/answer"), gold_conf)
        except ValueError as exc:
            raise ProtocolError(str(exc)) from exc
        return check_span_contract(context, result)


class RemoteLMClient(RemoteClient):
    def lm_score(self, text: TokenizedText) -> LMScore:
        if not text.tokens:
            raise ValueError("cannot score an empty text")
        body = self._post("/nll", {"text": text.raw})
        values = body.get("per_token_nll")
        if not isinstance(values, list) or not values:
            raise ProtocolError("/nll response lacks a non-empty 'per_token_nll' list")
        try:
            return LMScore(tuple(float(v) for v in values))
        except (TypeError, ValueError) as exc:
            raise ProtocolError(f"/nll returned invalid values: {exc}") from exc


class RemoteNERClient(RemoteClient):
    def extract_entities(self, text: TokenizedText) -> list[Entity]:
        if not text.tokens:
            return []
        body = self._post(
            "/entities",
            {"tokens": list(text.tokens), "sentences": [list(s) for s in text.sentences]},
        )
        spans = body.get("entities")
        if not isinstance(spans, list):
            raise ProtocolError("/entities response lacks an 'entities' list")
        out = []
        last_end = 0
        for item in sorted(spans, key=lambda d: d.get("start", -1)):
            start, end = item.get("start"), item.get("end")
            if not (isinstance(start, int) and isinstance(end, int)):
                raise ProtocolError("entity spans need integer 'start' and 'end'")
            if not (last_end <= start < end <= len(text.tokens)):
                raise ProtocolError(f"entity span ({start}, {end}) out of bounds or overlapping")
            s_idx = text.sentence_of(start)
            if end > text.sentences[s_idx][1]:
                raise ProtocolError(f"entity span ({start}, {end}) crosses a sentence boundary")
            out.append(Entity(" ".join(text.tokens[start:end]), (start, end), s_idx))
            last_end = end
        return out
