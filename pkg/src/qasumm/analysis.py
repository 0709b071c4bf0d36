"""Spearman correlation of metrics against human judgments."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats

logger = logging.getLogger(__name__)

HUMAN_AXES = ("readability", "relevance")

# Row order of the correlation report.
TABLE_METRICS = (
    "rouge_1",
    "rouge_2",
    "rouge_l",
    "textrank",
    "novelty",
    "lm",
    "qa_fscore_sup",
    "qa_conf_sup",
    "qa_fscore_unsup",
    "qa_conf_unsup",
)

DISPLAY_NAMES = {
    "readability": "Readability",
    "relevance": "Relevance",
    "rouge_1": "ROUGE-1 (sup)",
    "rouge_2": "ROUGE-2 (sup)",
    "rouge_l": "ROUGE-L (sup)",
    "textrank": "Text-Rank (unsup)",
    "novelty": "Novelty (sup)",
    "lm": "LM (unsup)",
    "qa_fscore_sup": "QA_fscore (sup)",
    "qa_conf_sup": "QA_conf (sup)",
    "qa_fscore_unsup": "QA_fscore (unsup)",
    "qa_conf_unsup": "QA_conf (unsup)",
}


class DegenerateCorrelation(ValueError):
    """Raised when a rank correlation is undefined (a constant input)."""


def midranks(x) -> np.ndarray:
    """1-based ranks; tied values share the mean of the ranks they span."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    sorted_x = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d and of equal length")
    if len(x) < 3:
        raise ValueError("need at least 3 observations")
    rx = midranks(x) - (len(x) + 1) / 2
    ry = midranks(y) - (len(y) + 1) / 2
    denom = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if denom == 0:
        raise DegenerateCorrelation("rank correlation undefined for a constant vector")
    return max(-1.0, min(1.0, float(rx @ ry) / denom))


def spearman_or_none(x, y) -> Optional[float]:
    try:
        return spearman(x, y)
    except DegenerateCorrelation:
        return None


def spearman_significance(rho: float, n: int) -> float:
    """Two-sided p-value from the t approximation with n - 2 degrees of freedom."""
    if n < 3:
        raise ValueError("need n >= 3")
    if abs(rho) >= 1:
        return 0.0
    t = rho * math.sqrt((n - 2) / (1 - rho * rho))
    return float(min(1.0, 2 * stats.t.sf(abs(t), n - 2)))


def permutation_pvalue(x, y, n_resamples: int = 10000, seed: int = 0) -> float:
    """Two-sided permutation p-value for Spearman's rho.

    Enumerates every permutation when n <= 8, otherwise samples
    ``n_resamples`` seeded permutations.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    observed = abs(spearman(x, y))
    rx = midranks(x) - (len(x) + 1) / 2
    ry = midranks(y) - (len(y) + 1) / 2
    denom = math.sqrt(float(rx @ rx) * float(ry @ ry))
    tol = 1e-12
    if len(x) <= 8:
        perms = np.array(list(itertools.permutations(range(len(y)))))
    else:
        rng = np.random.default_rng(seed)
        perms = np.array([rng.permutation(len(y)) for _ in range(n_resamples)])
    null = np.abs(ry[perms] @ rx) / denom
    hits = int(np.sum(null >= observed - tol))
    if len(x) <= 8:
        return hits / len(perms)
    return (hits + 1) / (len(perms) + 1)


def stars(p_value: float) -> str:
    if p_value < 0.005:
        return "**"
    if p_value < 0.05:
        return "*"
    return ""


@dataclass(frozen=True)
class CorrelationCell:
    rho: float
    p_value: float
    n: int
    degenerate: bool = False

    @property
    def stars(self) -> str:
        return "" if self.degenerate else stars(self.p_value)

    def format(self) -> str:
        if self.degenerate:
            return "n/a"
        return f"{self.rho:.2f} {self.stars}".rstrip()


def correlation_cell(x, y, method: str = "t", seed: int = 0) -> CorrelationCell:
    n = len(x)
    rho = spearman_or_none(x, y)
    if rho is None:
        return CorrelationCell(0.0, 1.0, n, degenerate=True)
    if method == "t":
        p = spearman_significance(rho, n)
    elif method == "permutation":
        p = permutation_pvalue(x, y, seed=seed)
    else:
        raise ValueError(f"unknown significance method {method!r}")
    return CorrelationCell(rho, p, n)


@dataclass
class CorrelationTable:
    rows: dict[str, dict[str, CorrelationCell]]
    notices: list[str] = field(default_factory=list)

    def to_tsv(self) -> str:
        lines = ["metric\taxis\trho\tp_value\tn\tstars\tdegenerate"]
        for metric, cells in self.rows.items():
            for axis, c in cells.items():
                lines.append(
                    f"{metric}\t{axis}\t{c.rho:.6f}\t{c.p_value:.6g}\t{c.n}\t{c.stars}\t{int(c.degenerate)}"
                )
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        names = [DISPLAY_NAMES.get(m, m) for m in self.rows]
        width = max([len(n) for n in names] + [6])
        header = f"{'':<{width}} | {'Readability':>11} | {'Relevance':>11}"
        rule = "-" * len(header)
        lines = [header, rule]
        for name, (metric, cells) in zip(names, self.rows.items()):
            cols = [cells[a].format() for a in HUMAN_AXES]
            lines.append(f"{name:<{width}} | {cols[0]:>11} | {cols[1]:>11}")
            if metric == "relevance":
                lines.append(rule)
        lines.append(rule)
        lines.append("Spearman's rho (*: p<.05, **: p<.005)")
        lines.extend(f"note: {n}" for n in self.notices)
        return "\n".join(lines) + "\n"


def _usable(report, metric: str) -> Optional[float]:
    if report.flags.get(metric, "ok") != "ok":
        return None
    value = report.values.get(metric)
    if value is None or not math.isfinite(value):
        return None
    return float(value)


def correlation_table(
    samples: Sequence[tuple[object, object]],
    metrics: Optional[Iterable[str]] = None,
    method: str = "t",
    include_human: bool = True,
    seed: int = 0,
) -> CorrelationTable:
    """One Spearman cell per (metric, human axis), pooled over all samples.

    ``samples`` pairs a metric report (``.values`` and ``.flags`` mappings)
    with a judgment (``.readability`` and ``.relevance``). Samples whose
    metric is flagged degenerate or unavailable are left out of that
    metric's cells only.
    """
    if metrics is None:
        seen = {m for report, _ in samples for m in report.values}
        metrics = [m for m in TABLE_METRICS if m in seen] + sorted(seen - set(TABLE_METRICS))
    table = CorrelationTable({})
    if include_human:
        for axis in HUMAN_AXES:
            xs = [getattr(j, axis) for _, j in samples]
            table.rows[axis] = {
                other: correlation_cell(xs, [getattr(j, other) for _, j in samples], method, seed)
                for other in HUMAN_AXES
            }
    for metric in metrics:
        pairs = [(v, j) for r, j in samples if (v := _usable(r, metric)) is not None]
        if not pairs:
            msg = f"metric {metric!r} absent from all samples; column omitted"
            logger.warning(msg)
            table.notices.append(msg)
            continue
        if len(pairs) < 3:
            msg = f"metric {metric!r} usable on only {len(pairs)} samples; column omitted"
            logger.warning(msg)
            table.notices.append(msg)
            continue
        xs = [v for v, _ in pairs]
        table.rows[metric] = {
            axis: correlation_cell(xs, [getattr(j, axis) for _, j in pairs], method, seed)
            for axis in HUMAN_AXES
        }
    return table


def grouped_correlation_tables(
    samples: Sequence[tuple[object, object]],
    groups: Sequence[str],
    **kwargs,
) -> dict[str, CorrelationTable]:
    """Separate tables per group label (e.g. per summarization system)."""
    if len(groups) != len(samples):
        raise ValueError("one group label per sample is required")
    out: dict[str, list] = {}
    for g, s in zip(groups, samples):
        out.setdefault(g, []).append(s)
    return {g: correlation_table(members, **kwargs) for g, members in sorted(out.items())}
