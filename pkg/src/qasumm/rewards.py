"""Rewards, losses and batch scheduling for self-critical summarization training.

The neural policy lives outside this package. A trainer hands over greedy
and sampled decodes together with the sampled sequence's summed
log-probability; this module turns them into rewards and loss values.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np

from .data import Sample
from .errors import ConfigurationError
from .lexical import rouge_l
from .scoring import Scorer

REWARD_NAMES = ("rouge_l", "qa_conf", "qa_fscore")

QA_LEARNED = {"rouge_l": 0.8576, "qa_conf": 2.274, "qa_fscore": 0.6413}
QA_EQUALLY = {"rouge_l": 1.0, "qa_conf": 1.0, "qa_fscore": 1.0}
ROUGE_ONLY = {"rouge_l": 1.0, "qa_conf": 0.0, "qa_fscore": 0.0}


@dataclass
class RewardConfig:
    weights: dict[str, float] = field(default_factory=lambda: dict(QA_LEARNED))
    gamma: float = 0.5
    unsup_proportion: float = 0.0
    rouge_double_on_supervised: bool = True

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not 0.0 <= self.unsup_proportion <= 1.0:
            raise ValueError(f"unsup_proportion must lie in [0, 1], got {self.unsup_proportion}")
        unknown = set(self.weights) - set(REWARD_NAMES)
        if unknown:
            raise ValueError(f"unknown reward names: {sorted(unknown)}")

    def effective_weights(self, supervised: bool) -> dict[str, float]:
        w = {name: float(self.weights.get(name, 0.0)) for name in REWARD_NAMES}
        if not supervised:
            w["rouge_l"] = 0.0
        elif self.rouge_double_on_supervised and self.unsup_proportion > 0:
            w["rouge_l"] *= 2.0
        return w


@dataclass(frozen=True)
class CandidatePair:
    greedy: str
    sampled: str
    sampled_logprob_sum: float

    def __post_init__(self):
        if self.sampled_logprob_sum > 0:
            raise ValueError("a log-probability sum cannot be positive")


def reward_breakdown(
    article: str,
    reference: Optional[str],
    candidate: str,
    weights: Mapping[str, float],
    scorer: Scorer,
    key: str = "",
) -> dict[str, float]:
    """Component scores (0-1 scale) for the rewards that carry a nonzero weight."""
    w_rouge = float(weights.get("rouge_l", 0.0))
    if w_rouge != 0 and reference is None:
        raise ConfigurationError("a nonzero ROUGE-L weight needs a reference summary")
    parts: dict[str, float] = {}
    if w_rouge != 0:
        parts["rouge_l"] = rouge_l(candidate, [reference]).f1 if candidate.strip() else 0.0
    if weights.get("qa_conf", 0.0) != 0 or weights.get("qa_fscore", 0.0) != 0:
        res = scorer.qa_unsup(article, candidate, key)
        parts["qa_conf"] = res.confidence
        parts["qa_fscore"] = res.fscore
    return parts


def combine(parts: Mapping[str, float], weights: Mapping[str, float], scale100: bool = False) -> float:
    total = math.fsum(float(weights.get(k, 0.0)) * v for k, v in parts.items())
    return total * 100.0 if scale100 else total


def compute_reward(
    article: str,
    reference: Optional[str],
    candidate: str,
    weights: Mapping[str, float],
    scorer: Scorer,
    scale100: bool = False,
    key: str = "",
) -> float:
    """Weighted sum of ROUGE-L F1, QA confidence and QA F1 (unsupervised QA).

    Components are on the 0-1 scale; ``scale100`` reports the sum on the
    0-100 scale that the published learned-metric coefficients expect.
    """
    parts = reward_breakdown(article, reference, candidate, weights, scorer, key)
    return combine(parts, weights, scale100)


def self_critical_loss(pair: CandidatePair, r_greedy: float, r_sampled: float) -> float:
    """REINFORCE loss with the greedy decode's reward as baseline."""
    return (r_greedy - r_sampled) * pair.sampled_logprob_sum


def mixed_loss(l_ml: float, l_rl: float, gamma: float) -> float:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    return gamma * l_rl + (1 - gamma) * l_ml


def nll_loss(token_logprobs: Sequence[float]) -> float:
    """Teacher-forced negative log-likelihood of a reference sequence."""
    if any(lp > 0 for lp in token_logprobs):
        raise ValueError("log-probabilities cannot be positive")
    return -math.fsum(token_logprobs)


@dataclass
class RewardBatch:
    samples: list[Sample]
    supervised: bool
    effective_weights: dict[str, float]
    index: int = 0


def _pool_stream(pool: Sequence[Sample], batch_size: int, rng: random.Random, repeat: bool):
    order = list(range(len(pool)))
    while True:
        rng.shuffle(order)
        for i in range(0, len(order) - batch_size + 1, batch_size):
            yield [pool[j] for j in order[i : i + batch_size]]
        tail = len(order) % batch_size
        if tail:
            yield [pool[j] for j in order[-tail:]]
        if not repeat:
            return


def is_unsupervised_slot(i: int, proportion: float) -> bool:
    """Deterministic interleaving: slot ``i`` is unsupervised when floor((i+1)p) > floor(ip).

    With ``p = a/b`` in lowest terms, every aligned window of ``b`` slots
    holds exactly ``a`` unsupervised slots.
    """
    p = Fraction(proportion).limit_denominator(1000)
    return (i + 1) * p.numerator // p.denominator > i * p.numerator // p.denominator


def schedule_batches(
    supervised_pool: Sequence[Sample],
    unsupervised_pool: Sequence[Sample],
    config: RewardConfig,
    batch_size: int = 1,
    seed: int = 0,
    repeat: bool = False,
) -> Iterator[RewardBatch]:
    """Interleave supervised and unsupervised batches at ``config.unsup_proportion``.

    Pools are shuffled with ``seed``. The stream ends as soon as the pool a
    slot calls for runs dry, unless ``repeat`` cycles the pools.
    """
    if config.unsup_proportion > 0 and not unsupervised_pool:
        raise ValueError("a positive unsupervised proportion needs an unsupervised pool")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    rng = random.Random(seed)
    sup = _pool_stream(supervised_pool, batch_size, random.Random(rng.random()), repeat)
    unsup = _pool_stream(unsupervised_pool, batch_size, random.Random(rng.random()), repeat)
    sup_w = config.effective_weights(True)
    unsup_w = config.effective_weights(False)
    i = 0
    while True:
        unsupervised = is_unsupervised_slot(i, config.unsup_proportion)
        samples = next(unsup if unsupervised else sup, None)
        if samples is None:
            return
        yield RewardBatch(samples, not unsupervised, dict(unsup_w if unsupervised else sup_w), i)
        i += 1


@dataclass
class ItemReward:
    r_greedy: float
    r_sampled: float
    greedy_parts: dict[str, float]
    sampled_parts: dict[str, float]

    @property
    def advantage(self) -> float:
        """Reward gain of the sampled decode over the greedy baseline."""
        return self.r_sampled - self.r_greedy


def batch_rewards(
    batch: RewardBatch,
    pairs: Sequence[CandidatePair],
    scorer: Scorer,
    scale100: bool = False,
) -> list[ItemReward]:
    if len(pairs) != len(batch.samples):
        raise ValueError("one candidate pair per sample is required")
    out = []
    for sample, pair in zip(batch.samples, pairs):
        reference = sample.reference if batch.supervised and sample.has_reference else None
        w = batch.effective_weights
        g = reward_breakdown(sample.article, reference, pair.greedy, w, scorer, sample.id)
        s = reward_breakdown(sample.article, reference, pair.sampled, w, scorer, sample.id)
        out.append(ItemReward(combine(g, w, scale100), combine(s, w, scale100), g, s))
    return out


def batch_loss(
    pairs: Sequence[CandidatePair],
    rewards: Sequence[ItemReward],
    ml_losses: Optional[Sequence[float]],
    gamma: float,
) -> float:
    """Mixed objective on per-batch mean losses.

    Batches without references carry no teacher-forcing term, so their
    ``ml_losses`` is ``None`` and only the RL loss remains.
    """
    l_rl = float(np.mean([self_critical_loss(p, r.r_greedy, r.r_sampled) for p, r in zip(pairs, rewards)]))
    if ml_losses is None:
        return l_rl
    return mixed_loss(float(np.mean(ml_losses)), l_rl, gamma)


class ToyCategoricalPolicy:
    """Single-step softmax policy over a small vocabulary, for gradient checks.

    The self-critical estimator ``(r(greedy) - r(y)) * d log p(y)`` has
    expectation equal to the gradient of ``r(greedy) - E[r(y)]`` with the
    baseline held fixed; the methods below expose both sides.
    """

    def __init__(self, logits: Sequence[float], rewards: Sequence[float]):
        self.logits = np.asarray(logits, dtype=float)
        self.rewards = np.asarray(rewards, dtype=float)
        if self.logits.shape != self.rewards.shape:
            raise ValueError("one reward per token is required")

    def probs(self, logits: Optional[np.ndarray] = None) -> np.ndarray:
        z = self.logits if logits is None else np.asarray(logits, dtype=float)
        e = np.exp(z - z.max())
        return e / e.sum()

    @property
    def greedy(self) -> int:
        return int(np.argmax(self.logits))

    def expected_loss(self, logits: Optional[np.ndarray] = None) -> float:
        """``r(greedy) - E_p[r]`` with the baseline fixed at the current greedy token."""
        return float(self.rewards[self.greedy] - self.probs(logits) @ self.rewards)

    def grad_log_prob(self, token: int) -> np.ndarray:
        g = -self.probs()
        g[token] += 1.0
        return g

    def sample(self, n: int, rng: Optional[np.random.Generator] = None, stratified: bool = False) -> np.ndarray:
        """Draw ``n`` tokens by inverse CDF; ``stratified`` uses one uniform per stratum midpoint."""
        if stratified:
            u = (np.arange(n) + 0.5) / n
        else:
            u = (rng or np.random.default_rng()).random(n)
        cdf = np.cumsum(self.probs())
        return np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)

    def loss_and_grad(self, token: int) -> tuple[float, np.ndarray]:
        """Self-critical loss of one sampled token and its gradient w.r.t. the logits."""
        p = self.probs()
        pair = CandidatePair("", "", math.log(p[token]))
        r_g, r_s = self.rewards[self.greedy], self.rewards[token]
        return self_critical_loss(pair, r_g, r_s), (r_g - r_s) * self.grad_log_prob(token)

    def policy_gradient_estimate(self, tokens: Sequence[int]) -> np.ndarray:
        tokens = np.asarray(tokens)
        p = self.probs()
        adv = self.rewards[self.greedy] - self.rewards[tokens]
        onehot = np.eye(len(p))[tokens]
        return (adv[:, None] * (onehot - p)).mean(axis=0)

    def exact_policy_gradient(self) -> np.ndarray:
        p = self.probs()
        adv = self.rewards[self.greedy] - self.rewards
        return (p[:, None] * adv[:, None] * (np.eye(len(p)) - p)).sum(axis=0)
