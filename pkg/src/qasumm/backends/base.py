"""Value types and call contracts shared by every model backend."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence, runtime_checkable

from ..text import TokenizedText


@dataclass(frozen=True)
class Entity:
    surface: str
    token_span: tuple[int, int]
    sentence_index: int


@dataclass(frozen=True)
class QAResult:
    """A span answer plus the model's probability for it.

    ``gold_confidence`` is filled only when the caller asked for the
    probability of a known gold answer.
    """

    answer_text: str
    confidence: float
    gold_confidence: Optional[float] = None

    def __post_init__(self):
        for value in (self.confidence, self.gold_confidence):
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f"confidence must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class LMScore:
    per_token_nll: tuple[float, ...]
    mean_nll: float = field(init=False)

    def __post_init__(self):
        if not self.per_token_nll:
            raise ValueError("LM score needs at least one token")
        if any(v < 0 for v in self.per_token_nll):
            raise ValueError("per-token NLL values must be non-negative")
        object.__setattr__(
            self, "mean_nll", math.fsum(self.per_token_nll) / len(self.per_token_nll)
        )

    @property
    def perplexity(self) -> float:
        return math.exp(self.mean_nll)

    @property
    def metric(self) -> float:
        """Negated mean NLL, so that higher means more fluent."""
        return -self.mean_nll


@runtime_checkable
class EntityBackend(Protocol):
    name: str

    def extract_entities(self, text: TokenizedText) -> list[Entity]: ...


@runtime_checkable
class QABackend(Protocol):
    name: str

    def answer(
        self, context: str, question: str, gold: Optional[str] = None
    ) -> QAResult: ...


@runtime_checkable
class LMBackend(Protocol):
    name: str

    def lm_score(self, text: TokenizedText) -> LMScore: ...


def check_span_contract(context: str, result: QAResult) -> QAResult:
    from ..errors import ProtocolError

    if result.answer_text not in context:
        raise ProtocolError(
            f"answer {result.answer_text!r} is not a substring of the context"
        )
    return result


def entity_tokens(text: TokenizedText, ent: Entity) -> Sequence[str]:
    return text.tokens[ent.token_span[0] : ent.token_span[1]]
