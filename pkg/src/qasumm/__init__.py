"""QA-based, reference-free summary metrics and self-critical RL rewards."""

from .analysis import CorrelationCell, correlation_table, spearman, spearman_significance
from .composite import (
    EQUAL,
    PUBLISHED,
    HumanJudgment,
    LearnedMetricSpec,
    fit_ridge,
    geometric_mean_target,
    learned_metric,
    repeated_split_selection,
)
from .data import MetricReport, Sample, load_dataset
from .lexical import PRFScore, novelty, rouge_l, rouge_n, textrank, textrank_summary_score
from .qa import QAMetricResult, QATriplet, generate_triplets, qa_eval, squad_f1
from .rewards import (
    CandidatePair,
    RewardBatch,
    RewardConfig,
    compute_reward,
    mixed_loss,
    nll_loss,
    schedule_batches,
    self_critical_loss,
)
from .scoring import Backends, Scorer
from .text import TokenizedText, ngrams, tokenize, truncate

__version__ = "0.1.0"
