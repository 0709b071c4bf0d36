"""Tokenization, sentence segmentation, n-grams and truncation.

Everything here is a pure function over immutable values. Casing is kept
as-is; metrics lowercase on their own when they need to.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

TOKEN_RE = re.compile(r"\w+(?:['’\-]\w+)*|[^\w\s]", re.UNICODE)

SENTENCE_END = frozenset({".", "!", "?"})

# Lowercased, without the trailing period.
ABBREVIATIONS = frozenset(
    {
        "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "gen",
        "gov", "sen", "rep", "col", "lt", "sgt", "capt", "rev", "inc",
        "ltd", "co", "corp", "vs", "etc", "no", "jan", "feb", "mar", "apr",
        "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
    }
)


@dataclass(frozen=True)
class TokenizedText:
    """Raw text with its tokens, character offsets and sentence ranges.

    ``sentences`` holds half-open ``(start, end)`` token index ranges that
    are disjoint, contiguous and cover every token.
    """

    raw: str
    tokens: tuple[str, ...]
    offsets: tuple[tuple[int, int], ...]
    sentences: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.tokens)

    def sentence_tokens(self, i: int) -> tuple[str, ...]:
        start, end = self.sentences[i]
        return self.tokens[start:end]

    def sentence_of(self, token_index: int) -> int:
        for i, (start, end) in enumerate(self.sentences):
            if start <= token_index < end:
                return i
        raise IndexError(token_index)

    def span_text(self, start: int, end: int) -> str:
        """Raw substring covering tokens ``start:end``."""
        if start >= end:
            return ""
        return self.raw[self.offsets[start][0] : self.offsets[end - 1][1]]


@dataclass(frozen=True)
class NGramMultiset:
    n: int
    counts: Counter = field(default_factory=Counter)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def __len__(self) -> int:
        return self.total


def _is_capitalized(token: str) -> bool:
    return token[:1].isupper()


def _split_sentences(
    raw: str, tokens: Sequence[str], offsets: Sequence[tuple[int, int]]
) -> tuple[tuple[int, int], ...]:
    if not tokens:
        return ()
    ranges = []
    start = 0
    for i, tok in enumerate(tokens[:-1]):
        if tok not in SENTENCE_END:
            continue
        nxt = i + 1
        # terminal punctuation, then whitespace, then a capitalized token
        if offsets[nxt][0] == offsets[i][1] or not raw[offsets[i][1]].isspace():
            continue
        if not _is_capitalized(tokens[nxt]):
            continue
        if tok == "." and i > start:
            prev = tokens[i - 1]
            glued = offsets[i - 1][1] == offsets[i][0]
            if glued and (
                (len(prev) == 1 and prev.isalpha()) or prev.lower() in ABBREVIATIONS
            ):
                continue
        ranges.append((start, nxt))
        start = nxt
    ranges.append((start, len(tokens)))
    return tuple(ranges)


def tokenize(text: str) -> TokenizedText:
    """Split ``text`` into word and punctuation tokens, then into sentences.

    >>> tokenize("The cat sat.").tokens
    ('The', 'cat', 'sat', '.')
    """
    matches = list(TOKEN_RE.finditer(text))
    tokens = tuple(m.group() for m in matches)
    offsets = tuple(m.span() for m in matches)
    return TokenizedText(text, tokens, offsets, _split_sentences(text, tokens, offsets))


def as_tokenized(text: str | TokenizedText) -> TokenizedText:
    return text if isinstance(text, TokenizedText) else tokenize(text)


def ngrams(tokens: Sequence[str], n: int) -> NGramMultiset:
    if n <= 0:
        raise ValueError(f"n must be >= 1, got {n}")
    tokens = tuple(tokens)
    counts = Counter(tokens[i : i + n] for i in range(len(tokens) - n + 1))
    return NGramMultiset(n, counts)


def truncate(text: TokenizedText, limit: int) -> TokenizedText:
    """Keep the first ``limit`` tokens; texts already within the limit are returned as-is."""
    if limit < 0:
        raise ValueError(f"limit must be >= 0, got {limit}")
    if len(text.tokens) <= limit:
        return text
    if limit == 0:
        return TokenizedText("", (), (), ())
    sentences = tuple(
        (start, min(end, limit)) for start, end in text.sentences if start < limit
    )
    return TokenizedText(
        text.raw[: text.offsets[limit - 1][1]],
        text.tokens[:limit],
        text.offsets[:limit],
        sentences,
    )


def truncate_text(text: str, limit: int) -> str:
    return truncate(tokenize(text), limit).raw


STOPWORDS = frozenset(
    """
    a about above after again against all am an and any are as at be because
    been before being below between both but by can could did do does doing
    down during each few for from further had has have having he her here hers
    herself him himself his how i if in into is it its itself just me more most
    my myself no nor not now of off on once only or other our ours ourselves
    out over own same she should so some such than that the their theirs them
    themselves then there these they this those through to too under until up
    very was we were what when where which while who whom why will with would
    you your yours yourself yourselves also however meanwhile yesterday today
    tomorrow according after although many much one two three last next new
    says said say
    """.split()
)


def content_tokens(tokens: Sequence[str]) -> list[str]:
    """Lowercased alphanumeric tokens that are not stopwords."""
    out = []
    for tok in tokens:
        low = tok.lower()
        if low not in STOPWORDS and any(ch.isalnum() for ch in low):
            out.append(low)
    return out
