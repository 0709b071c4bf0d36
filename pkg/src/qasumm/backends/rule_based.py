"""Deterministic stand-ins for the neural NER, QA and LM models.

They are used offline and in tests. The QA oracle mimics the one property
the QA metrics rely on: the more of a question's sentence survives in the
context near an entity, the more confident the answer.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Iterable, Optional, Sequence

from ..text import STOPWORDS, TokenizedText, as_tokenized, content_tokens
from .base import Entity, LMScore, QAResult

BOS = "<s>"
UNK = "<unk>"


def _capitalized_word(token: str) -> bool:
    return token[:1].isupper() and token[:1].isalpha()


class RuleBasedNER:
    """Entities are maximal runs of capitalized words inside one sentence.

    Stopwords never start an entity, so a sentence-initial "The" or "He"
    is dropped while "John Smith" at the start of a sentence is kept.
    """

    name = "rule-based-ner"

    def __init__(self, stopwords: Iterable[str] = STOPWORDS):
        self.stopwords = frozenset(w.lower() for w in stopwords)

    def extract_entities(self, text: TokenizedText) -> list[Entity]:
        entities = []
        for s_idx, (start, end) in enumerate(text.sentences):
            i = start
            while i < end:
                if not _capitalized_word(text.tokens[i]):
                    i += 1
                    continue
                j = i
                while j < end and _capitalized_word(text.tokens[j]):
                    j += 1
                k = i
                while k < j and text.tokens[k].lower() in self.stopwords:
                    k += 1
                if k < j:
                    surface = " ".join(text.tokens[k:j])
                    entities.append(Entity(surface, (k, j), s_idx))
                i = j
        return entities


class LexicalQAOracle:
    """Answers cloze questions by lexical overlap around candidate entities.

    Every entity found in the context is a candidate. Its score is the share
    of the question's distinct content words that occur within ``window``
    tokens on either side of it, inside its own sentence. The best-scoring
    candidate wins, earliest first on ties, and the score doubles as the
    confidence.
    """

    name = "lexical-qa-oracle"

    def __init__(
        self,
        ner: Optional[RuleBasedNER] = None,
        window: int = 10,
        mask_token: str = "MASKED",
    ):
        self.ner = ner or RuleBasedNER()
        self.window = window
        self.mask_token = mask_token

    def _question_words(self, question: TokenizedText) -> set[str]:
        toks = [t for t in question.tokens if t != self.mask_token]
        return set(content_tokens(toks))

    def _span_score(
        self, context: TokenizedText, span: tuple[int, int], words: set[str]
    ) -> float:
        if not words:
            return 0.0
        start, end = span
        s_lo, s_hi = context.sentences[context.sentence_of(start)]
        lo = max(s_lo, start - self.window)
        hi = min(s_hi, end + self.window)
        around = context.tokens[lo:start] + context.tokens[end:hi]
        return len(words.intersection(content_tokens(around))) / len(words)

    def _candidates(self, context: TokenizedText, question: TokenizedText):
        # an entity already spelled out in the question is not its answer
        q_lower = {t.lower() for t in question.tokens}
        for ent in self.ner.extract_entities(context):
            toks = context.tokens[ent.token_span[0] : ent.token_span[1]]
            if all(t.lower() in q_lower for t in toks):
                continue
            yield ent

    def answer(
        self, context: str, question: str, gold: Optional[str] = None
    ) -> QAResult:
        ctx = as_tokenized(context)
        q = as_tokenized(question)
        words = self._question_words(q)

        best_span, best = None, 0.0
        for ent in self._candidates(ctx, q):
            score = self._span_score(ctx, ent.token_span, words)
            if score > best:
                best_span, best = ent.token_span, score
        answer = ctx.span_text(*best_span) if best_span else ""

        gold_conf = None
        if gold is not None:
            gold_conf = self.gold_confidence(ctx, words, gold, answer, best)
        return QAResult(answer, best, gold_conf)

    def gold_confidence(
        self,
        ctx: TokenizedText,
        words: set[str],
        gold: str,
        answer: str,
        answer_conf: float,
    ) -> float:
        from ..qa import normalize_answer

        norm_gold = normalize_answer(gold)
        if answer and normalize_answer(answer) == norm_gold:
            return answer_conf
        gold_toks = [t.lower() for t in as_tokenized(gold).tokens]
        if not gold_toks:
            return 0.0
        lowered = [t.lower() for t in ctx.tokens]
        n = len(gold_toks)
        best = 0.0
        for i in range(len(lowered) - n + 1):
            if lowered[i : i + n] == gold_toks:
                best = max(best, self._span_score(ctx, (i, i + n), words))
        return best


class BigramLM:
    """Add-one smoothed bigram (or unigram) model over a training corpus.

    Unknown words map to a single ``<unk>`` type that is part of the
    vocabulary. Each text starts from a ``<s>`` context.
    """

    name = "add-one-bigram-lm"

    def __init__(self, corpus: Iterable[str | TokenizedText], order: int = 2):
        if order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        self.order = order
        self.unigrams: Counter = Counter()
        self.contexts: Counter = Counter()
        self.bigrams: Counter = Counter()
        for doc in corpus:
            toks = list(as_tokenized(doc).tokens)
            if not toks:
                continue
            self.unigrams.update(toks)
            prev = [BOS] + toks[:-1]
            self.contexts.update(prev)
            self.bigrams.update(zip(prev, toks))
        self.vocab = set(self.unigrams) | {UNK}
        self.n_tokens = sum(self.unigrams.values())

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def prob(self, token: str, prev: str = BOS) -> float:
        token = token if token in self.vocab else UNK
        V = self.vocab_size
        if self.order == 1:
            return (self.unigrams[token] + 1) / (self.n_tokens + V)
        prev = prev if prev == BOS or prev in self.vocab else UNK
        return (self.bigrams[(prev, token)] + 1) / (self.contexts[prev] + V)

    def lm_score(self, text: TokenizedText) -> LMScore:
        toks: Sequence[str] = text.tokens
        if not toks:
            raise ValueError("cannot score an empty text")
        nll = []
        prev = BOS
        for tok in toks:
            nll.append(-math.log(self.prob(tok, prev)))
            prev = tok
        return LMScore(tuple(nll))
