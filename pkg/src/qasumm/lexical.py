"""ROUGE-N, ROUGE-L, n-gram novelty and Text-Rank sentence importance.

Matching is case-insensitive, with no stemming and no stopword removal.
Scores are on the 0-1 scale.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .text import TokenizedText, as_tokenized, content_tokens, ngrams


@dataclass(frozen=True)
class PRFScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "PRFScore":
        if precision + recall == 0:
            return cls(precision, recall, 0.0)
        return cls(precision, recall, 2 * precision * recall / (precision + recall))


ZERO = PRFScore(0.0, 0.0, 0.0)


def _lower(text: TokenizedText) -> list[str]:
    return [t.lower() for t in text.tokens]


def _references(references) -> list[TokenizedText]:
    if isinstance(references, (str, TokenizedText)):
        references = [references]
    refs = [as_tokenized(r) for r in references]
    if not refs:
        raise ValueError("at least one reference is required")
    for r in refs:
        if not r.tokens:
            raise ValueError("reference text is empty")
    return refs


def _best(scores: Iterable[PRFScore]) -> PRFScore:
    return max(scores, key=lambda s: s.f1)


def rouge_n(candidate, references, n: int = 1) -> PRFScore:
    """Clipped n-gram overlap; the best F1 over references is returned."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    refs = _references(references)
    cand = ngrams(_lower(as_tokenized(candidate)), n)
    if cand.total == 0:
        return ZERO

    def one(ref: TokenizedText) -> PRFScore:
        ref_ngrams = ngrams(_lower(ref), n)
        if ref_ngrams.total == 0:
            return ZERO
        overlap = sum((cand.counts & ref_ngrams.counts).values())
        return PRFScore.from_pr(overlap / cand.total, overlap / ref_ngrams.total)

    return _best(one(r) for r in refs)


def lcs_length(a: Sequence, b: Sequence) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(candidate, references) -> PRFScore:
    refs = _references(references)
    cand = _lower(as_tokenized(candidate))
    if not cand:
        return ZERO

    def one(ref: TokenizedText) -> PRFScore:
        toks = _lower(ref)
        lcs = lcs_length(cand, toks)
        return PRFScore.from_pr(lcs / len(cand), lcs / len(toks))

    return _best(one(r) for r in refs)


def novelty(candidate, reference, ns: Iterable[int] = (1, 2, 3)) -> float:
    """Share of unique candidate n-grams absent from the reference, scaled by length ratio.

    The per-n values are averaged over ``ns``.
    """
    ref = as_tokenized(reference)
    if not ref.tokens:
        raise ValueError("reference text is empty")
    cand = _lower(as_tokenized(candidate))
    if not cand:
        return 0.0
    ref_toks = _lower(ref)
    ratio = len(cand) / len(ref_toks)
    values = []
    for n in sorted(set(ns)):
        uniq = set(ngrams(cand, n).counts)
        if not uniq:
            values.append(0.0)
            continue
        seen = set(ngrams(ref_toks, n).counts)
        values.append(len(uniq - seen) / len(uniq) * ratio)
    if not values:
        raise ValueError("ns must name at least one n-gram order")
    return sum(values) / len(values)


@dataclass(frozen=True)
class TextRankScores:
    importance: tuple[float, ...]
    iterations: int = 0

    def __len__(self) -> int:
        return len(self.importance)


def similarity_matrix(document: TokenizedText) -> np.ndarray:
    """Pairwise sentence similarity: shared content words over the summed log lengths.

    Pairs in which a sentence has at most one content word are left at 0.
    """
    words = [content_tokens(document.sentence_tokens(i)) for i in range(len(document.sentences))]
    sets = [set(w) for w in words]
    k = len(words)
    W = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            if len(words[i]) <= 1 or len(words[j]) <= 1:
                continue
            shared = len(sets[i] & sets[j])
            if shared:
                W[i, j] = W[j, i] = shared / (math.log(len(words[i])) + math.log(len(words[j])))
    return W


def pagerank(W: np.ndarray, damping: float = 0.85, eps: float = 1e-6, max_iter: int = 100):
    """Weighted PageRank by power iteration. Returns ``(scores, iterations)``.

    Rows without outgoing weight spread their mass uniformly.
    """
    k = W.shape[0]
    out = W.sum(axis=1)
    dangling = out == 0
    P = np.divide(W, out[:, None], out=np.zeros_like(W), where=~dangling[:, None])
    P[dangling] = 1.0 / k
    x = np.full(k, 1.0 / k)
    it = 0
    for it in range(1, max_iter + 1):
        nxt = (1 - damping) / k + damping * (P.T @ x)
        delta = np.abs(nxt - x).sum()
        x = nxt
        if delta < eps:
            break
    return x / x.sum(), it


def textrank(
    document, damping: float = 0.85, eps: float = 1e-6, max_iter: int = 100
) -> TextRankScores:
    doc = as_tokenized(document)
    if not doc.sentences:
        raise ValueError("document has no sentences")
    scores, it = pagerank(similarity_matrix(doc), damping, eps, max_iter)
    return TextRankScores(tuple(float(v) for v in scores), it)


def _unigram_f1(a: Sequence[str], b: Sequence[str]) -> float:
    if not a or not b:
        return 0.0
    overlap = sum((Counter(a) & Counter(b)).values())
    return PRFScore.from_pr(overlap / len(a), overlap / len(b)).f1


def textrank_summary_score(document, summary, **textrank_kwargs) -> float:
    """Mean over summary sentences of (best-match F1 x importance of that document sentence).

    Each summary sentence is matched to the document sentence with the
    highest unigram F1 (earliest on ties).
    """
    doc = as_tokenized(document)
    summ = as_tokenized(summary)
    if not doc.sentences:
        raise ValueError("document has no sentences")
    if not summ.tokens:
        return 0.0
    importance = textrank(doc, **textrank_kwargs).importance
    doc_sents = [[t.lower() for t in doc.sentence_tokens(i)] for i in range(len(doc.sentences))]
    total = 0.0
    for i in range(len(summ.sentences)):
        sent = [t.lower() for t in summ.sentence_tokens(i)]
        f1s = [_unigram_f1(sent, d) for d in doc_sents]
        best = int(np.argmax(f1s))
        total += f1s[best] * importance[best]
    return total / len(summ.sentences)
