"""Command-line entry point: ``qasumm score|correlate|fit|serve``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from .analysis import correlation_table
from .composite import default_subsets, fit_metric, repeated_split_selection
from .config import Config
from .data import MetricReport, load_dataset, report_from_dict, scale_value
from .errors import ConfigurationError, QASummError
from .scoring import ALL_METRICS, Backends, Scorer

logger = logging.getLogger("qasumm")

DEFAULT_FIT_FEATURES = ("rouge_1", "rouge_2", "rouge_l", "textrank", "novelty", "qa_fscore_unsup", "qa_conf_unsup")


def _metric_list(text: Optional[str]) -> list[str]:
    if not text:
        return list(ALL_METRICS)
    metrics = [m.strip() for m in text.split(",") if m.strip()]
    unknown = sorted(set(metrics) - set(ALL_METRICS))
    if unknown:
        raise ConfigurationError(f"unknown metrics {unknown}; choose from {', '.join(ALL_METRICS)}")
    return metrics


def _config(args) -> Config:
    cfg = Config.load(getattr(args, "config", None))
    for key in ("qa_backend", "lm_backend", "seed", "lm_corpus"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    return cfg


def _lm_corpus(cfg: Config, samples) -> list[str]:
    if cfg.lm_corpus:
        return Path(cfg.lm_corpus).read_text(encoding="utf-8").splitlines()
    return [s.article for s in samples]


def _scorer(cfg: Config, samples) -> Scorer:
    backends = Backends.from_config(cfg, _lm_corpus(cfg, samples))
    return Scorer(backends, cfg.seed, cfg.max_questions, mask_token=cfg.mask_token)


def _check_out(args) -> None:
    if Path(args.out).resolve() == Path(args.data).resolve():
        raise ConfigurationError("--out must differ from --data")


def cmd_score(args) -> int:
    _check_out(args)
    cfg = _config(args)
    metrics = _metric_list(args.metrics)
    loaded = load_dataset(args.data, truncate=not args.no_truncate)
    scorer = _scorer(cfg, loaded.samples)
    failures = len(loaded.errors)
    sums: dict[str, list[float]] = {}

    def attempt(sample):
        try:
            return scorer.score(sample, metrics)
        except (QASummError, ValueError) as exc:
            return exc

    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            outcomes = list(pool.map(attempt, loaded.samples))
    else:
        outcomes = [attempt(s) for s in loaded.samples]

    with open(args.out, "w", encoding="utf-8") as out:
        for sample, report in zip(loaded.samples, outcomes):
            if isinstance(report, Exception):
                logger.error("sample %s failed: %s", sample.id, report)
                out.write(json.dumps({"id": sample.id, "error": str(report)}, sort_keys=True) + "\n")
                failures += 1
                continue
            record = report.to_dict(scale100=args.x100, seed=cfg.seed)
            for m, v in record["values"].items():
                sums.setdefault(m, []).append(v)
            out.write(json.dumps(record, sort_keys=True) + "\n")
        summary = {
            "summary": True,
            "n_samples": len(loaded.samples),
            "n_failed": failures,
            "mean": {m: math.fsum(v) / len(v) for m, v in sorted(sums.items())},
            "count": {m: len(v) for m, v in sorted(sums.items())},
            "scale": "x100" if args.x100 else "raw",
            "seed": cfg.seed,
            "load_errors": [{"line": e.line, "error": e.message} for e in loaded.errors],
        }
        out.write(json.dumps(summary, sort_keys=True) + "\n")
    return 1 if failures else 0


def _reports_for(args, cfg, samples, metrics) -> list[MetricReport]:
    if getattr(args, "reports", None):
        by_id = {}
        with open(args.reports, encoding="utf-8") as fh:
            for line in fh:
                rec = json.loads(line)
                if "values" in rec:
                    by_id[str(rec["id"])] = report_from_dict(rec)
        return [by_id[s.id] for s in samples]
    scorer = _scorer(cfg, samples)
    return [scorer.score(s, metrics) for s in samples]


def cmd_correlate(args) -> int:
    _check_out(args)
    cfg = _config(args)
    metrics = _metric_list(args.metrics)
    loaded = load_dataset(args.data, truncate=not args.no_truncate)
    samples = [s for s in loaded.samples if s.human is not None and s.summary is not None]
    if len(samples) < 3:
        print(
            f"error: correlate needs at least 3 samples with readability, relevance and summary; found {len(samples)}",
            file=sys.stderr,
        )
        return 2
    reports = _reports_for(args, cfg, samples, metrics)
    table = correlation_table(list(zip(reports, [s.human for s in samples])), metrics, method=args.significance)
    Path(args.out).write_text(table.to_tsv(), encoding="utf-8")
    text = table.to_text()
    Path(str(args.out) + ".txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_fit(args) -> int:
    _check_out(args)
    cfg = _config(args)
    features = [f.strip() for f in args.features.split(",")] if args.features else list(DEFAULT_FIT_FEATURES)
    _metric_list(",".join(features))
    loaded = load_dataset(args.data, truncate=not args.no_truncate)
    samples = [s for s in loaded.samples if s.human is not None and s.summary is not None]
    if len(samples) < 4:
        print(f"error: fit needs at least 4 samples with human scores; found {len(samples)}", file=sys.stderr)
        return 2
    reports = _reports_for(args, cfg, samples, features)
    rows = []
    for sample, report in zip(samples, reports):
        if all(report.flags.get(f) == "ok" for f in features):
            rows.append(({f: scale_value(f, report.values[f], True) for f in features}, sample.human))
    if len(rows) < 4:
        print(f"error: only {len(rows)} samples have every feature available", file=sys.stderr)
        return 2
    subsets = default_subsets(features, args.max_subset_size)
    ranking = repeated_split_selection(rows, subsets, args.repeats, cfg.seed, args.lam)
    best = ranking[0]
    fitted = fit_metric(rows, best.features, args.lam, cfg.seed)
    Path(args.out).write_text(fitted.dumps(), encoding="utf-8")
    lines = ["rank\tfeatures\tmean_rho\tdegenerate_repeats"]
    for i, sc in enumerate(ranking, start=1):
        lines.append(f"{i}\t{','.join(sc.features)}\t{sc.mean_rho:.6f}\t{sc.degenerate_repeats}")
    Path(str(args.out) + ".ranking.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"best subset: {','.join(best.features)} (mean held-out rho {best.mean_rho:.4f})")
    print(fitted.dumps(), end="")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app_from_config

    cfg = Config.load(args.config)
    corpus = Path(cfg.lm_corpus).read_text(encoding="utf-8").splitlines() if cfg.lm_corpus else ()
    uvicorn.run(app_from_config(cfg, corpus), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qasumm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--data", required=True, help="JSONL dataset")
        p.add_argument("--out", required=True)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--seed", type=int)
        p.add_argument("--qa-backend", dest="qa_backend", help="'builtin' or a service URL")
        p.add_argument("--lm-backend", dest="lm_backend", help="'builtin' or a service URL")
        p.add_argument("--lm-corpus", dest="lm_corpus", help="one training text per line for the builtin LM")
        p.add_argument("--no-truncate", action="store_true", help="skip the 400/100-token truncation")

    p = sub.add_parser("score", help="score summaries, one JSON report per line")
    common(p)
    p.add_argument("--metrics", help=f"comma-separated subset of {','.join(ALL_METRICS)}")
    p.add_argument("--x100", action="store_true", help="report ROUGE and QA values on the 0-100 scale")
    p.add_argument("--workers", type=int, default=1, help="samples scored in parallel; output keeps input order")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("correlate", help="Spearman correlations with human judgments")
    common(p)
    p.add_argument("--metrics")
    p.add_argument("--reports", help="reuse the output of 'score' instead of rescoring")
    p.add_argument("--significance", choices=("t", "permutation"), default="t")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("fit", help="select and fit the learned metric")
    common(p)
    p.add_argument("--repeats", type=int, default=1000)
    p.add_argument("--features", help="comma-separated candidate features")
    p.add_argument("--max-subset-size", type=int, default=3)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--reports", help="reuse the output of 'score' instead of rescoring")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("serve", help="run the /score and /reward HTTP service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--config")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except QASummError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
