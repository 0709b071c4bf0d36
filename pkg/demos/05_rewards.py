"""
Rewards for self-critical training
==================================

A trainer supplies greedy and sampled decodes; the reward engine scores
them and turns the difference into a policy-gradient loss. Supervised and
reference-free batches are interleaved at a fixed proportion.
"""

from itertools import islice

from qasumm.data import Sample
from qasumm.rewards import (
    QA_LEARNED,
    CandidatePair,
    RewardConfig,
    ToyCategoricalPolicy,
    batch_loss,
    batch_rewards,
    schedule_batches,
)
from qasumm.scoring import Backends, Scorer

scorer = Scorer(Backends.rule_based())
article = "Maria Lopez won the marathon in Boston on Monday. Her coach Peter Hall praised her pacing."
supervised = [Sample("s0", article, "Maria Lopez won the Boston marathon.")]
unsupervised = [Sample("u0", article)]

config = RewardConfig(dict(QA_LEARNED), gamma=0.9984, unsup_proportion=0.5)
pairs = [CandidatePair("Maria Lopez won the marathon in Boston.", "Peter Hall ran in Boston.", -7.5)]

for batch in islice(schedule_batches(supervised, unsupervised, config, repeat=True), 4):
    (item,) = batch_rewards(batch, pairs, scorer)
    # the teacher-forced loss exists only when there is a reference
    ml = [12.0] if batch.supervised else None
    loss = batch_loss(pairs, [item], ml, config.gamma)
    kind = "supervised  " if batch.supervised else "unsupervised"
    print(f"{kind} rouge weight {batch.effective_weights['rouge_l']:.4f} "
          f"r_greedy {item.r_greedy:.3f} r_sampled {item.r_sampled:.3f} loss {loss:.3f}")

# the estimator's expectation matches the exact gradient on a toy policy
policy = ToyCategoricalPolicy([0.4, -0.3, 1.1], [0.7, 0.2, 0.5])
print("exact gradient    ", policy.exact_policy_gradient().round(5))
print("sampled estimate  ", policy.policy_gradient_estimate(policy.sample(100_000, stratified=True)).round(5))
