"""
Fitting the learned metric
==========================

Ridge regression picks the feature subset whose held-out predictions rank
summaries most like human judges do, then refits it on all data.
"""

import numpy as np

from qasumm.composite import (
    PUBLISHED,
    HumanJudgment,
    default_subsets,
    fit_metric,
    learned_metric,
    repeated_split_selection,
)

# the published coefficients applied to two systems' average scores
print("QA_equally system:", round(learned_metric(38.33, 41.01, 16.06, PUBLISHED), 2))
print("QA_learned system:", round(learned_metric(37.94, 41.39, 15.19, PUBLISHED), 2))

# synthetic judgments that secretly follow rouge_l, qa_conf and qa_fscore
rng = np.random.default_rng(0)
samples = []
for _ in range(80):
    feats = {
        "rouge_l": rng.uniform(10, 50),
        "qa_conf_unsup": rng.uniform(10, 60),
        "qa_fscore_unsup": rng.uniform(5, 40),
        "novelty": rng.uniform(0, 100),
    }
    quality = 0.03 * feats["rouge_l"] + 0.06 * feats["qa_conf_unsup"] + 0.04 * feats["qa_fscore_unsup"]
    quality += rng.normal(0, 0.05)
    samples.append((feats, HumanJudgment(quality, quality)))

ranking = repeated_split_selection(samples, default_subsets(list(samples[0][0])), repeats=50, seed=1)
for score in ranking[:4]:
    print(f"{','.join(score.features):45} mean held-out rho {score.mean_rho:.3f}")

fitted = fit_metric(samples, ranking[0].features, seed=1)
print(fitted.dumps())
