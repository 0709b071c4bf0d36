"""The learned linear metric and the protocol used to fit it.

Metric values are on the 0-100 scale throughout this module, the scale
the published coefficients were fitted on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Optional, Sequence

import numpy as np

from .analysis import spearman_or_none
from .errors import SingularSystemError

LEARNED_FEATURES = ("rouge_l", "qa_conf_unsup", "qa_fscore_unsup")


@dataclass(frozen=True)
class LearnedMetricSpec:
    """Weights for ROUGE-L, QA confidence and QA F1 (unsupervised QA variants)."""

    alpha: float
    beta: float
    delta: float

    def __post_init__(self):
        for v in (self.alpha, self.beta, self.delta):
            if not math.isfinite(v):
                raise ValueError("coefficients must be finite")

    def __call__(self, rouge_l: float, qa_conf: float, qa_fscore: float) -> float:
        return learned_metric(rouge_l, qa_conf, qa_fscore, self)


PUBLISHED = LearnedMetricSpec(0.8576, 2.274, 0.6413)
EQUAL = LearnedMetricSpec(1.0, 1.0, 1.0)


def learned_metric(
    rouge_l: float, qa_conf: float, qa_fscore: float, spec: LearnedMetricSpec = PUBLISHED
) -> float:
    return spec.alpha * rouge_l + spec.beta * qa_conf + spec.delta * qa_fscore


@dataclass(frozen=True)
class HumanJudgment:
    readability: float
    relevance: float

    def __post_init__(self):
        for name in ("readability", "relevance"):
            v = getattr(self, name)
            if not 1.0 <= v <= 10.0:
                raise ValueError(f"{name} must lie in [1, 10], got {v}")


def geometric_mean_target(readability: float | HumanJudgment, relevance: Optional[float] = None) -> float:
    if isinstance(readability, HumanJudgment):
        readability, relevance = readability.readability, readability.relevance
    if readability <= 0 or relevance is None or relevance <= 0:
        raise ValueError("readability and relevance must be positive")
    return math.sqrt(readability * relevance)


def fit_ridge(X, y, lam: float = 1.0) -> np.ndarray:
    """Ridge coefficients without intercept: ``argmin ||Xw - y||^2 + lam ||w||^2``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError("need at least one sample and one feature")
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y disagree on the number of samples")
    A = X.T @ X + lam * np.eye(X.shape[1])
    if lam == 0 and np.linalg.matrix_rank(A) < A.shape[0]:
        raise SingularSystemError("normal equations are singular; use lambda > 0")
    try:
        return np.linalg.solve(A, X.T @ y)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc


@dataclass
class SubsetScore:
    features: tuple[str, ...]
    mean_rho: float
    rhos: list[float] = field(repr=False, default_factory=list)
    degenerate_repeats: int = 0

    @property
    def degenerate(self) -> bool:
        return self.degenerate_repeats == len(self.rhos)


def default_subsets(features: Sequence[str], max_size: int = 3) -> list[tuple[str, ...]]:
    out = []
    for k in range(1, min(max_size, len(features)) + 1):
        out.extend(combinations(features, k))
    return out


def _design(samples, subset) -> np.ndarray:
    rows = []
    for feats, _ in samples:
        try:
            rows.append([float(feats[f]) for f in subset])
        except KeyError as exc:
            raise ValueError(f"feature {exc.args[0]!r} missing from a sample") from None
    return np.array(rows, dtype=float)


def repeated_split_selection(
    samples: Sequence[tuple[Mapping[str, float], HumanJudgment]],
    candidate_subsets: Sequence[Sequence[str]],
    repeats: int = 1000,
    seed: int = 0,
    lam: float = 1.0,
) -> list[SubsetScore]:
    """Rank feature subsets by mean held-out Spearman correlation.

    Every repeat draws one random half for fitting and scores all subsets
    on the other half. Repeat ``r`` uses its own child seed, so results do
    not depend on evaluation order. Splits where the correlation is
    undefined count as 0 and as degenerate.
    """
    if len(samples) < 4:
        raise ValueError("need at least 4 samples")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    subsets = [tuple(s) for s in candidate_subsets]
    designs = {s: _design(samples, s) for s in subsets}
    target = np.array([geometric_mean_target(j) for _, j in samples])

    n = len(samples)
    half = n // 2
    scores = {s: SubsetScore(s, 0.0) for s in subsets}
    for child in np.random.SeedSequence(seed).spawn(repeats):
        perm = np.random.default_rng(child).permutation(n)
        train, test = perm[:half], perm[half:]
        for s in subsets:
            X = designs[s]
            w = fit_ridge(X[train], target[train], lam)
            rho = spearman_or_none(X[test] @ w, target[test])
            score = scores[s]
            if rho is None:
                score.degenerate_repeats += 1
                rho = 0.0
            score.rhos.append(rho)
    for score in scores.values():
        score.mean_rho = float(np.mean(score.rhos))
    # stable sort keeps caller order among ties
    return sorted(scores.values(), key=lambda sc: -sc.mean_rho)


@dataclass
class FittedMetric:
    features: tuple[str, ...]
    coefficients: tuple[float, ...]
    lam: float = 1.0
    seed: int = 0
    scale: str = "x100"

    def predict(self, feats: Mapping[str, float]) -> float:
        return sum(c * float(feats[f]) for f, c in zip(self.features, self.coefficients))

    def as_spec(self) -> Optional[LearnedMetricSpec]:
        """The (alpha, beta, delta) form, when fitted on exactly the learned-metric features."""
        if set(self.features) != set(LEARNED_FEATURES) or len(self.features) != 3:
            return None
        c = dict(zip(self.features, self.coefficients))
        return LearnedMetricSpec(*(c[f] for f in LEARNED_FEATURES))

    def dumps(self) -> str:
        lines = [
            f"features = {','.join(self.features)}",
            *(f"coef.{f} = {c!r}" for f, c in zip(self.features, self.coefficients)),
        ]
        spec = self.as_spec()
        if spec is not None:
            lines += [f"alpha = {spec.alpha!r}", f"beta = {spec.beta!r}", f"delta = {spec.delta!r}"]
        lines += [f"lambda = {self.lam!r}", f"scale = {self.scale}", f"seed = {self.seed}"]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "FittedMetric":
        kv = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            kv[key.strip()] = value.strip()
        features = tuple(f for f in kv["features"].split(",") if f)
        coefs = tuple(float(kv[f"coef.{f}"]) for f in features)
        return cls(features, coefs, float(kv.get("lambda", 1.0)), int(kv.get("seed", 0)), kv.get("scale", "x100"))


def fit_metric(
    samples: Sequence[tuple[Mapping[str, float], HumanJudgment]],
    features: Sequence[str],
    lam: float = 1.0,
    seed: int = 0,
) -> FittedMetric:
    X = _design(samples, features)
    y = np.array([geometric_mean_target(j) for _, j in samples])
    w = fit_ridge(X, y, lam)
    return FittedMetric(tuple(features), tuple(float(v) for v in w), lam, seed)
