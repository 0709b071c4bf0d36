"""Plain-text ``key = value`` configuration with environment overrides.

Example::

    qa_backend = builtin            # or http://host:port
    lm_backend = builtin
    timeout = 30
    mask_token = MASKED
    max_questions = 20
    gamma = 0.5
    weight.rouge_l = 0.8576
    weight.qa_conf = 2.274
    weight.qa_fscore = 0.6413
    unsup_proportion = 0.5
    seed = 0

``QASUMM_QA_URL``, ``QASUMM_LM_URL`` and ``QASUMM_NER_URL`` override the
backend entries.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigurationError

ENV_OVERRIDES = {
    "qa_backend": "QASUMM_QA_URL",
    "lm_backend": "QASUMM_LM_URL",
    "ner_backend": "QASUMM_NER_URL",
}


@dataclass
class Config:
    qa_backend: str = "builtin"
    lm_backend: str = "builtin"
    ner_backend: str = "builtin"
    timeout: float = 30.0
    retries: int = 3
    max_in_flight: int = 8
    mask_token: str = "MASKED"
    max_questions: int = 20
    qa_window: int = 10
    gamma: float = 0.5
    weights: dict[str, float] = field(
        default_factory=lambda: {"rouge_l": 0.8576, "qa_conf": 2.274, "qa_fscore": 0.6413}
    )
    unsup_proportion: float = 0.0
    rouge_double_on_supervised: bool = True
    seed: int = 0
    lm_corpus: Optional[str] = None

    @classmethod
    def load(cls, path: Optional[str | Path] = None, environ=None) -> "Config":
        environ = os.environ if environ is None else environ
        cfg = cls()
        if path is not None:
            parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
            parser.optionxform = str
            parser.read_string("[qasumm]\n" + Path(path).read_text(encoding="utf-8"))
            for key, value in parser["qasumm"].items():
                cfg._set(key, value)
        for key, env in ENV_OVERRIDES.items():
            if environ.get(env):
                setattr(cfg, key, environ[env])
        return cfg

    def _set(self, key: str, value: str) -> None:
        if key.startswith("weight."):
            name = key.split(".", 1)[1]
            if name not in ("rouge_l", "qa_conf", "qa_fscore"):
                raise ConfigurationError(f"unknown reward weight {name!r}")
            self.weights[name] = float(value)
            return
        if key not in self.__dataclass_fields__ or key == "weights":
            raise ConfigurationError(f"unknown configuration key {key!r}")
        current = getattr(self, key)
        try:
            if isinstance(current, bool):
                parsed = value.lower() in ("1", "true", "yes", "on")
            elif isinstance(current, int):
                parsed = int(value)
            elif isinstance(current, float):
                parsed = float(value)
            else:
                parsed = value
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {key!r}: {value!r}") from exc
        setattr(self, key, parsed)
