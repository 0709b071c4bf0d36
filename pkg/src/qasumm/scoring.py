"""Per-sample metric computation shared by the CLI, the service and the reward engine."""

from __future__ import annotations

import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from . import lexical
from .backends import BigramLM, LexicalQAOracle, RemoteLMClient, RemoteNERClient, RemoteQAClient, RuleBasedNER
from .backends.base import EntityBackend, LMBackend, QABackend
from .config import Config
from .data import DEGENERATE, OK, MetricReport, Sample
from .errors import BackendUnavailable
from .qa import DEFAULT_MASK, qa_metrics
from .text import tokenize

logger = logging.getLogger(__name__)

SUPERVISED_METRICS = ("rouge_1", "rouge_2", "rouge_l", "novelty", "qa_fscore_sup", "qa_conf_sup")
UNSUPERVISED_METRICS = ("textrank", "lm", "qa_fscore_unsup", "qa_conf_unsup")
ALL_METRICS = SUPERVISED_METRICS + UNSUPERVISED_METRICS


def derive_seed(root: int, key: str) -> int:
    """Stable per-item seed from the run's root seed."""
    return (root * 1_000_003 + zlib.crc32(key.encode("utf-8"))) % 2**32


@dataclass
class Backends:
    ner: EntityBackend
    qa: QABackend
    lm: Optional[LMBackend] = None

    def metadata(self) -> dict[str, str]:
        return {
            "ner": self.ner.name,
            "qa": self.qa.name,
            "lm": self.lm.name if self.lm is not None else "none",
        }

    @classmethod
    def rule_based(cls, lm_corpus: Iterable[str] = (), mask_token: str = DEFAULT_MASK, window: int = 10):
        ner = RuleBasedNER()
        corpus = list(lm_corpus)
        return cls(ner, LexicalQAOracle(ner, window, mask_token), BigramLM(corpus) if corpus else None)

    @classmethod
    def from_config(cls, cfg: Config, lm_corpus: Iterable[str] = ()) -> "Backends":
        remote = dict(timeout=cfg.timeout, retries=cfg.retries, max_in_flight=cfg.max_in_flight)
        if cfg.ner_backend == "builtin":
            ner = RuleBasedNER()
        else:
            ner = RemoteNERClient(cfg.ner_backend, **remote)
        if cfg.qa_backend == "builtin":
            qa = LexicalQAOracle(ner if isinstance(ner, RuleBasedNER) else RuleBasedNER(), cfg.qa_window, cfg.mask_token)
        else:
            qa = RemoteQAClient(cfg.qa_backend, **remote)
        if cfg.lm_backend == "builtin":
            corpus = list(lm_corpus)
            lm = BigramLM(corpus) if corpus else None
        else:
            lm = RemoteLMClient(cfg.lm_backend, **remote)
        return cls(ner, qa, lm)


class Scorer:
    """Computes the metric roster for one sample at a time.

    Supervised metrics are attempted only when ``sample.has_reference`` is
    true, so reference-free samples never have their reference read.
    """

    def __init__(
        self,
        backends: Backends,
        seed: int = 0,
        max_questions: Optional[int] = 20,
        max_questions_sup: Optional[int] = None,
        mask_token: str = DEFAULT_MASK,
        qa_workers: Optional[int] = None,
    ):
        self.backends = backends
        self.seed = seed
        self.max_questions = max_questions
        self.max_questions_sup = max_questions_sup
        self.mask_token = mask_token
        self.qa_workers = qa_workers

    def _qa(self, source: str, summary: str, max_questions, seed: int):
        return qa_metrics(
            source,
            summary,
            self.backends.ner,
            self.backends.qa,
            max_questions,
            seed,
            self.mask_token,
            self.qa_workers,
        )

    def qa_unsup(self, article: str, summary: str, key: str = ""):
        return self._qa(article, summary, self.max_questions, derive_seed(self.seed, key + "/unsup"))

    def qa_sup(self, reference: str, summary: str, key: str = ""):
        return self._qa(reference, summary, self.max_questions_sup, derive_seed(self.seed, key + "/sup"))

    def score(self, sample: Sample, metrics: Sequence[str] = ALL_METRICS) -> MetricReport:
        unknown = set(metrics) - set(ALL_METRICS)
        if unknown:
            raise ValueError(f"unknown metrics: {sorted(unknown)}")
        report = MetricReport(sample.id, backend_metadata=self.backends.metadata())
        if sample.summary is None:
            raise ValueError(f"sample {sample.id!r} has no summary to score")
        summary = sample.summary
        summ_tok = tokenize(summary)
        wanted = set(metrics)

        ref_tok = None
        if wanted & set(SUPERVISED_METRICS):
            if sample.has_reference:
                ref_tok = tokenize(sample.reference)
                if not ref_tok.tokens:
                    ref_tok = None
            if ref_tok is None:
                for m in SUPERVISED_METRICS:
                    if m in wanted:
                        report.unavailable(m)

        if ref_tok is not None:
            if "rouge_1" in wanted:
                report.set("rouge_1", lexical.rouge_n(summ_tok, [ref_tok], 1).f1)
            if "rouge_2" in wanted:
                report.set("rouge_2", lexical.rouge_n(summ_tok, [ref_tok], 2).f1)
            if "rouge_l" in wanted:
                report.set("rouge_l", lexical.rouge_l(summ_tok, [ref_tok]).f1)
            if "novelty" in wanted:
                report.set("novelty", lexical.novelty(summ_tok, ref_tok))
            if wanted & {"qa_fscore_sup", "qa_conf_sup"}:
                self._set_qa(report, wanted, "sup", lambda: self.qa_sup(ref_tok.raw, summary, sample.id))

        if "textrank" in wanted:
            article_tok = tokenize(sample.article)
            if article_tok.sentences:
                report.set("textrank", lexical.textrank_summary_score(article_tok, summ_tok))
            else:
                report.unavailable("textrank")
        if "lm" in wanted:
            self._set_lm(report, summ_tok)
        if wanted & {"qa_fscore_unsup", "qa_conf_unsup"}:
            self._set_qa(report, wanted, "unsup", lambda: self.qa_unsup(sample.article, summary, sample.id))
        return report

    def _set_qa(self, report: MetricReport, wanted, variant: str, compute) -> None:
        names = [f"qa_fscore_{variant}", f"qa_conf_{variant}"]
        try:
            res = compute()
        except BackendUnavailable as exc:
            logger.warning("QA backend unavailable for %s: %s", report.sample_id, exc)
            for m in names:
                if m in wanted:
                    report.unavailable(m)
            return
        flag = DEGENERATE if res.degenerate else OK
        if names[0] in wanted:
            report.set(names[0], res.fscore, flag)
        if names[1] in wanted:
            report.set(names[1], res.confidence, flag)

    def _set_lm(self, report: MetricReport, summ_tok) -> None:
        if self.backends.lm is None or not summ_tok.tokens:
            report.unavailable("lm")
            return
        try:
            report.set("lm", self.backends.lm.lm_score(summ_tok).metric)
        except BackendUnavailable as exc:
            logger.warning("LM backend unavailable for %s: %s", report.sample_id, exc)
            report.unavailable("lm")

    def score_many(
        self, samples: Sequence[Sample], metrics: Sequence[str] = ALL_METRICS, workers: int = 1
    ) -> list[MetricReport]:
        """Reports in input order, whatever order the workers finish in."""
        if workers <= 1:
            return [self.score(s, metrics) for s in samples]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda s: self.score(s, metrics), samples))
