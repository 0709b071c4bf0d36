"""Cloze question generation and the QA-based summary metrics.

Questions come from masking each named entity of a source text, one
entity occurrence per question. With the reference summary as the source
this gives the supervised variant; with the article it gives the
unsupervised one, which never touches the reference.
"""

from __future__ import annotations

import random
import re
import string
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from .backends.base import EntityBackend, QABackend
from .errors import BackendUnavailable
from .text import TokenizedText, as_tokenized

DEFAULT_MASK = "MASKED"

_ARTICLES = re.compile(r"\b(a|an|the)\b")
_PUNCT = set(string.punctuation)


@dataclass(frozen=True)
class QATriplet:
    input: str
    question: str
    answer: str


@dataclass(frozen=True)
class QAMetricResult:
    fscore: float
    confidence: float
    n_questions: int

    @property
    def degenerate(self) -> bool:
        return self.n_questions == 0


def _contains(haystack: Sequence[str], needle: Sequence[str]) -> bool:
    n = len(needle)
    return any(tuple(haystack[i : i + n]) == tuple(needle) for i in range(len(haystack) - n + 1))


def generate_triplets(
    question_source,
    summary_to_assess: str,
    ner: EntityBackend,
    max_questions: Optional[int] = None,
    seed: int = 0,
    mask_token: str = DEFAULT_MASK,
) -> list[QATriplet]:
    """Build one (summary, cloze question, answer) triplet per entity occurrence.

    A question is the entity's sentence with the entity replaced by
    ``mask_token``. Occurrences whose sentence repeats the same entity are
    skipped, since the answer would be readable from the question. When more
    than ``max_questions`` remain, a seeded uniform subsample is kept in
    source order.
    """
    src = as_tokenized(question_source)
    triplets = []
    for ent in ner.extract_entities(src):
        s_start, s_end = src.sentences[ent.sentence_index]
        start, end = ent.token_span
        answer = src.tokens[start:end]
        question = src.tokens[s_start:start] + (mask_token,) + src.tokens[end:s_end]
        if _contains(question, answer):
            continue
        triplets.append(QATriplet(summary_to_assess, " ".join(question), " ".join(answer)))
    if max_questions is not None and len(triplets) > max_questions:
        keep = sorted(random.Random(seed).sample(range(len(triplets)), max_questions))
        triplets = [triplets[i] for i in keep]
    return triplets


def normalize_answer(s: str) -> str:
    """Lowercase, drop punctuation and articles, squeeze whitespace."""
    s = s.lower()
    s = "".join(ch for ch in s if ch not in _PUNCT)
    s = _ARTICLES.sub(" ", s)
    return " ".join(s.split())


def squad_f1(prediction: str, gold: str) -> float:
    pred_toks = normalize_answer(prediction).split()
    gold_toks = normalize_answer(gold).split()
    if not pred_toks or not gold_toks:
        return float(pred_toks == gold_toks)
    common = sum((Counter(pred_toks) & Counter(gold_toks)).values())
    if common == 0:
        return 0.0
    precision = common / len(pred_toks)
    recall = common / len(gold_toks)
    return 2 * precision * recall / (precision + recall)


def qa_eval(
    summary: str,
    triplets: Sequence[QATriplet],
    qa: QABackend,
    max_workers: Optional[int] = None,
) -> QAMetricResult:
    """Mean SQuAD F1 and mean gold-answer probability over ``triplets``.

    ``max_workers`` > 1 answers triplets concurrently; the result does not
    depend on completion order.
    """
    if not triplets:
        return QAMetricResult(0.0, 0.0, 0)
    for t in triplets:
        if t.input != summary:
            raise ValueError("triplet input does not match the summary being scored")

    def run(t: QATriplet) -> tuple[float, float]:
        res = qa.answer(summary, t.question, gold=t.answer)
        conf = res.gold_confidence if res.gold_confidence is not None else 0.0
        return squad_f1(res.answer_text, t.answer), conf

    results = []
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            futures = [pool.submit(run, t) for t in triplets]
            failure = None
            for fut in futures:
                try:
                    results.append(fut.result())
                except BackendUnavailable as exc:
                    failure = failure or exc
            if failure is not None:
                failure.completed = len(results)
                raise failure
    else:
        for t in triplets:
            try:
                results.append(run(t))
            except BackendUnavailable as exc:
                exc.completed = len(results)
                raise
    n = len(results)
    return QAMetricResult(
        sum(f for f, _ in results) / n,
        sum(c for _, c in results) / n,
        n,
    )


def qa_metrics(
    question_source,
    summary: str,
    ner: EntityBackend,
    qa: QABackend,
    max_questions: Optional[int] = None,
    seed: int = 0,
    mask_token: str = DEFAULT_MASK,
    max_workers: Optional[int] = None,
) -> QAMetricResult:
    triplets = generate_triplets(question_source, summary, ner, max_questions, seed, mask_token)
    return qa_eval(summary, triplets, qa, max_workers)
