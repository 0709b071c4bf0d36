import math
from itertools import islice

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qasumm.data import Sample
from qasumm.errors import ConfigurationError
from qasumm.rewards import (
    QA_EQUALLY,
    QA_LEARNED,
    ROUGE_ONLY,
    CandidatePair,
    RewardConfig,
    ToyCategoricalPolicy,
    batch_loss,
    batch_rewards,
    compute_reward,
    is_unsupervised_slot,
    mixed_loss,
    nll_loss,
    schedule_batches,
    self_critical_loss,
)
from qasumm.scoring import Backends, Scorer

SCORER = Scorer(Backends.rule_based())


class ReferenceTripwire(Sample):
    """A sample whose reference must never be read."""

    @property
    def has_reference(self):
        return False

    def __getattribute__(self, name):
        if name == "reference":
            raise AssertionError("reference was read")
        return super().__getattribute__(name)


class TestLosses:
    def test_equal_rewards_zero(self):
        assert self_critical_loss(CandidatePair("a", "b", -3.0), 0.4, 0.4) == 0.0

    def test_substitution(self):
        assert self_critical_loss(CandidatePair("a", "b", -10.0), 1.0, 0.0) == -10.0

    def test_better_sample_gives_positive_loss(self):
        # minimizing then raises the sampled log-probability
        pair = CandidatePair("a", "b", -2.0)
        assert self_critical_loss(pair, 0.2, 0.5) > 0
        assert self_critical_loss(pair, 0.5, 0.2) < 0

    @given(st.floats(0, 1), st.floats(0, 1), st.floats(-50, 0))
    def test_antisymmetric(self, a, b, lp):
        pair = CandidatePair("g", "s", lp)
        assert self_critical_loss(pair, a, b) == pytest.approx(-self_critical_loss(pair, b, a))

    def test_positive_logprob_rejected(self):
        with pytest.raises(ValueError):
            CandidatePair("a", "b", 0.5)

    def test_mixed_value(self):
        assert mixed_loss(2.0, 1.0, 0.9984) == pytest.approx(1.0016)

    def test_mixed_endpoints(self):
        assert mixed_loss(2.0, 1.0, 0.0) == 2.0
        assert mixed_loss(2.0, 1.0, 1.0) == 1.0
        with pytest.raises(ValueError):
            mixed_loss(1, 1, 1.5)

    @given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0, 1))
    def test_mixed_is_convex_combination(self, l_ml, l_rl, g):
        v = mixed_loss(l_ml, l_rl, g)
        assert min(l_ml, l_rl) - 1e-9 <= v <= max(l_ml, l_rl) + 1e-9

    def test_nll(self):
        assert nll_loss([math.log(0.5)] * 2) == pytest.approx(2 * math.log(2))
        assert nll_loss([0.0, 0.0]) == 0.0
        with pytest.raises(ValueError):
            nll_loss([0.1])


class TestComputeReward:
    article = "John visited Paris . Mary lives in Rome ."

    def test_rouge_only_identity(self):
        assert compute_reward(self.article, "a b c", "a b c", ROUGE_ONLY, SCORER) == 1.0

    def test_rouge_only_scaled(self):
        assert compute_reward(self.article, "a b c", "a b c", ROUGE_ONLY, SCORER, scale100=True) == 100.0

    def test_qa_equally_on_source(self):
        r = compute_reward(self.article, self.article, self.article, QA_EQUALLY, SCORER)
        assert r == pytest.approx(3.0)

    def test_learned_weights(self):
        r = compute_reward(self.article, self.article, self.article, QA_LEARNED, SCORER)
        assert r == pytest.approx(0.8576 + 2.274 + 0.6413)

    def test_missing_reference(self):
        with pytest.raises(ConfigurationError):
            compute_reward(self.article, None, "x", ROUGE_ONLY, SCORER)

    def test_qa_without_reference(self):
        w = {"rouge_l": 0.0, "qa_conf": 1.0, "qa_fscore": 1.0}
        assert compute_reward(self.article, None, "zebras graze", w, SCORER) == 0.0


class TestScheduler:
    def pools(self, n=2000):
        sup = [Sample(f"s{i}", "Ann met Bob .", "Ann met Bob .") for i in range(n)]
        unsup = [Sample(f"u{i}", "Ann met Bob .") for i in range(n)]
        return sup, unsup

    @pytest.mark.parametrize("p,expected", [(0.5, 500), (0.25, 250), (0.1, 100), (1 / 3, 333), (0.0, 0), (1.0, 1000)])
    def test_counts(self, p, expected):
        sup, unsup = self.pools()
        batches = list(islice(schedule_batches(sup, unsup, RewardConfig(unsup_proportion=p)), 1000))
        assert sum(not b.supervised for b in batches) == expected

    def test_slot_formula_windows(self):
        for p in (0.5, 0.3, 0.125):
            b = 1 / p if p != 0.3 else 10
            flags = [is_unsupervised_slot(i, p) for i in range(int(b) * 7)]
            for k in range(7):
                window = flags[int(b) * k : int(b) * (k + 1)]
                assert sum(window) == round(p * b)

    def test_deterministic(self):
        sup, unsup = self.pools(50)
        cfg = RewardConfig(unsup_proportion=0.5)
        a = [[s.id for s in b.samples] for b in schedule_batches(sup, unsup, cfg, 4, seed=9)]
        b = [[s.id for s in b.samples] for b in schedule_batches(sup, unsup, cfg, 4, seed=9)]
        c = [[s.id for s in b.samples] for b in schedule_batches(sup, unsup, cfg, 4, seed=10)]
        assert a == b and a != c

    def test_doubling_only_with_unsupervised_share(self):
        assert RewardConfig(dict(QA_LEARNED), unsup_proportion=0.0).effective_weights(True)["rouge_l"] == 0.8576
        assert RewardConfig(dict(QA_LEARNED), unsup_proportion=0.5).effective_weights(True)["rouge_l"] == 2 * 0.8576
        assert RewardConfig(dict(QA_LEARNED), unsup_proportion=0.5).effective_weights(False)["rouge_l"] == 0.0

    def test_expected_rouge_weight_preserved(self):
        cfg = RewardConfig(dict(QA_LEARNED), unsup_proportion=0.5)
        sup, unsup = self.pools()
        ws = [b.effective_weights["rouge_l"] for b in islice(schedule_batches(sup, unsup, cfg), 1000)]
        assert np.mean(ws) == pytest.approx(0.8576)

    def test_empty_unsup_pool(self):
        with pytest.raises(ValueError):
            next(schedule_batches([Sample("a", "x", "y")], [], RewardConfig(unsup_proportion=0.5)))

    def test_stream_ends_when_pool_dry(self):
        sup, unsup = self.pools(3)
        assert len(list(schedule_batches(sup, unsup, RewardConfig(unsup_proportion=0.5)))) == 6

    def test_repeat_cycles(self):
        sup, unsup = self.pools(3)
        stream = schedule_batches(sup, unsup, RewardConfig(unsup_proportion=0.5), repeat=True)
        assert len(list(islice(stream, 50))) == 50


class TestBatchRewards:
    def test_unsupervised_batch_never_reads_reference(self):
        cfg = RewardConfig(dict(QA_LEARNED), unsup_proportion=1.0)
        trip = ReferenceTripwire("t", "John visited Paris .", None, None)
        batch = next(schedule_batches([], [trip], cfg))
        assert not batch.supervised
        (item,) = batch_rewards(batch, [CandidatePair("John visited Paris .", "zebras", -1.0)], SCORER)
        assert "rouge_l" not in item.greedy_parts
        assert item.r_greedy == pytest.approx(2.274 + 0.6413)
        assert item.advantage == pytest.approx(-item.r_greedy)

    def test_batch_loss(self):
        cfg = RewardConfig(dict(ROUGE_ONLY))
        s = Sample("a", "Ann met Bob .", "ann met bob")
        batch = next(schedule_batches([s], [], cfg))
        pairs = [CandidatePair("ann met bob", "bob", -2.0)]
        rewards = batch_rewards(batch, pairs, SCORER)
        # greedy 1.0, sampled P=1 R=1/3 -> F1=0.5
        l_rl = (1.0 - 0.5) * -2.0
        assert batch_loss(pairs, rewards, None, 0.5) == pytest.approx(l_rl)
        assert batch_loss(pairs, rewards, [3.0], 0.5) == pytest.approx(0.5 * l_rl + 0.5 * 3.0)


class TestToyPolicy:
    policy = ToyCategoricalPolicy([0.3, 1.2, -0.5, 0.1], [0.2, 0.5, 0.9, 0.1])

    def test_exact_matches_finite_difference(self):
        h = 1e-6
        fd = np.zeros(4)
        for k in range(4):
            e = np.zeros(4)
            e[k] = h
            fd[k] = (self.policy.expected_loss(self.policy.logits + e) - self.policy.expected_loss(self.policy.logits - e)) / (2 * h)
        assert np.abs(self.policy.exact_policy_gradient() - fd).max() < 1e-8

    def test_stratified_estimate(self):
        tokens = self.policy.sample(100_000, stratified=True)
        est = self.policy.policy_gradient_estimate(tokens)
        assert np.abs(est - self.policy.exact_policy_gradient()).max() < 1e-4

    def test_random_estimate_unbiased_roughly(self):
        tokens = self.policy.sample(200_000, np.random.default_rng(0))
        est = self.policy.policy_gradient_estimate(tokens)
        assert np.abs(est - self.policy.exact_policy_gradient()).max() < 5e-3

    def test_loss_and_grad(self):
        loss, grad = self.policy.loss_and_grad(2)
        p = self.policy.probs()
        assert loss == pytest.approx((0.5 - 0.9) * math.log(p[2]))
        assert grad == pytest.approx((0.5 - 0.9) * self.policy.grad_log_prob(2))
