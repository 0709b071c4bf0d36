"""HTTP scoring and reward service for external trainers.

``POST /score``  ``{"article", "reference"?, "summary", "metrics"?}``
``POST /reward`` ``[{"article", "reference"?, "greedy", "sampled"}, ...]``
``GET  /health`` per-backend reachability
"""

from __future__ import annotations

from typing import List, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .config import Config
from .data import Sample
from .errors import BackendUnavailable, ConfigurationError, ProtocolError
from .rewards import RewardConfig, combine, reward_breakdown
from .scoring import ALL_METRICS, Backends, Scorer


class ScoreRequest(BaseModel):
    article: str
    summary: str
    reference: Optional[str] = None
    metrics: List[str] = Field(default_factory=lambda: list(ALL_METRICS))
    id: str = "request"


class RewardItem(BaseModel):
    article: str
    greedy: str
    sampled: str
    reference: Optional[str] = None
    id: str = ""


def _backend_failure(exc: Exception) -> HTTPException:
    component = getattr(exc, "backend", "") or "backend"
    return HTTPException(status_code=503, detail={"component": component, "error": str(exc)})


def create_app(scorer: Scorer, reward_config: RewardConfig, scale100: bool = False) -> FastAPI:
    app = FastAPI(title="qasumm")

    @app.get("/health")
    def health():
        status = {}
        for role in ("ner", "qa", "lm"):
            backend = getattr(scorer.backends, role)
            if backend is None:
                status[role] = {"name": "none", "reachable": False}
            elif hasattr(backend, "healthy"):
                status[role] = {"name": backend.name, "reachable": backend.healthy()}
            else:
                status[role] = {"name": backend.name, "reachable": True}
        return {"status": "ok", "backends": status}

    @app.post("/score")
    def score(req: ScoreRequest):
        unknown = sorted(set(req.metrics) - set(ALL_METRICS))
        if unknown:
            raise HTTPException(status_code=422, detail={"field": "metrics", "error": f"unknown metrics {unknown}"})
        sample = Sample(req.id, req.article, req.reference, req.summary)
        try:
            report = scorer.score(sample, req.metrics)
        except (BackendUnavailable, ProtocolError) as exc:
            raise _backend_failure(exc)
        return report.to_dict(scale100=scale100, seed=scorer.seed)

    @app.post("/reward")
    def reward(items: List[RewardItem]):
        out = []
        for i, item in enumerate(items):
            weights = reward_config.effective_weights(supervised=item.reference is not None)
            key = item.id or str(i)
            try:
                g = reward_breakdown(item.article, item.reference, item.greedy, weights, scorer, key)
                s = reward_breakdown(item.article, item.reference, item.sampled, weights, scorer, key)
            except ConfigurationError as exc:
                raise HTTPException(status_code=422, detail={"field": f"[{i}].reference", "error": str(exc)})
            except (BackendUnavailable, ProtocolError) as exc:
                raise _backend_failure(exc)
            r_g, r_s = combine(g, weights, scale100), combine(s, weights, scale100)
            out.append(
                {
                    "r_greedy": r_g,
                    "r_sampled": r_s,
                    "advantage": r_s - r_g,
                    "weights": weights,
                    "breakdown": {"greedy": g, "sampled": s},
                }
            )
        return out

    return app


def app_from_config(cfg: Config, lm_corpus=()) -> FastAPI:
    backends = Backends.from_config(cfg, lm_corpus)
    scorer = Scorer(backends, cfg.seed, cfg.max_questions, mask_token=cfg.mask_token)
    rc = RewardConfig(dict(cfg.weights), cfg.gamma, cfg.unsup_proportion, cfg.rouge_double_on_supervised)
    return create_app(scorer, rc)
