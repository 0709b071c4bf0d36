from .base import (
    Entity,
    EntityBackend,
    LMBackend,
    LMScore,
    QABackend,
    QAResult,
    check_span_contract,
)
from .remote import RemoteLMClient, RemoteNERClient, RemoteQAClient
from .rule_based import BigramLM, LexicalQAOracle, RuleBasedNER

__all__ = [
    "BigramLM",
    "Entity",
    "EntityBackend",
    "LMBackend",
    "LMScore",
    "LexicalQAOracle",
    "QABackend",
    "QAResult",
    "RemoteLMClient",
    "RemoteNERClient",
    "RemoteQAClient",
    "RuleBasedNER",
    "check_span_contract",
]
