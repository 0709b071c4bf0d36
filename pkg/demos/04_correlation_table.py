"""
Correlating metrics with human judgments
========================================

Spearman's rho between each metric and readability/relevance, starred by
significance.
"""

import numpy as np

from qasumm.analysis import correlation_table
from qasumm.composite import HumanJudgment
from qasumm.data import MetricReport

rng = np.random.default_rng(3)
samples = []
for i in range(100):
    readability = int(rng.integers(1, 11))
    relevance = int(rng.integers(1, 11))
    report = MetricReport(str(i))
    # one metric tracks relevance, one tracks readability, one is noise
    report.set("rouge_l", 0.05 * relevance + rng.normal(0, 0.15))
    report.set("lm", -4 + 0.1 * readability + rng.normal(0, 0.4))
    report.set("novelty", rng.random())
    samples.append((report, HumanJudgment(readability, relevance)))

table = correlation_table(samples, metrics=["rouge_l", "lm", "novelty"])
print(table.to_text())
