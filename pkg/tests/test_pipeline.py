"""Ingestion, configuration, per-sample scoring, the CLI and the HTTP service."""

import json

import httpx
import pytest
from fastapi.testclient import TestClient

from qasumm.backends import RemoteQAClient
from qasumm.cli import main
from qasumm.config import Config
from qasumm.data import MetricReport, Sample, load_dataset, report_from_dict
from qasumm.errors import ConfigurationError, DatasetIntegrityError
from qasumm.rewards import RewardConfig
from qasumm.scoring import ALL_METRICS, SUPERVISED_METRICS, UNSUPERVISED_METRICS, Backends, Scorer
from qasumm.service import create_app

RECORDS = [
    {
        "id": "a",
        "article": "John Smith visited Paris on Monday . He met Mary Jones at the Louvre . They talked about art .",
        "reference": "John Smith visited Paris and met Mary Jones .",
        "summary": "John Smith met Mary Jones in Paris .",
        "readability": 7,
        "relevance": 6,
    },
    {
        "id": "b",
        "article": "Rain fell across London all week . The Thames rose quickly . Officials in London warned residents .",
        "reference": "Rain raised the Thames in London .",
        "summary": "The Thames rose after rain in London .",
        "readability": 5,
        "relevance": 8,
    },
    {
        "id": "c",
        "article": "Apple released a phone in California . Critics in New York praised the camera .",
        "reference": "Apple released a phone that critics praised .",
        "summary": "A phone came out .",
        "readability": 3,
        "relevance": 2,
    },
]


def write_jsonl(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    return path


class TestLoadDataset:
    def test_roundtrip(self, tmp_path):
        loaded = load_dataset(write_jsonl(tmp_path / "d.jsonl", RECORDS))
        assert len(loaded) == 3 and not loaded.errors
        for rec, sample in zip(RECORDS, loaded):
            d = sample.to_dict()
            assert {k: d[k] for k in rec} == rec

    def test_missing_article(self, tmp_path):
        recs = [RECORDS[0], {"id": "x", "summary": "s"}, RECORDS[1]]
        loaded = load_dataset(write_jsonl(tmp_path / "d.jsonl", recs))
        assert [s.id for s in loaded] == ["a", "b"]
        assert [e.line for e in loaded.errors] == [2]

    def test_bad_json_line(self, tmp_path):
        p = tmp_path / "d.jsonl"
        p.write_text(json.dumps(RECORDS[0]) + "\n{not json\n", encoding="utf-8")
        loaded = load_dataset(p)
        assert len(loaded) == 1 and loaded.errors[0].line == 2

    def test_truncation(self, tmp_path):
        article = " ".join(f"w{i}" for i in range(500))
        summary = " ".join(f"s{i}" for i in range(150))
        (sample,) = load_dataset(write_jsonl(tmp_path / "d.jsonl", [{"id": "t", "article": article, "summary": summary}]))
        assert len(sample.article.split()) == 400
        assert len(sample.summary.split()) == 100
        (full,) = load_dataset(tmp_path / "d.jsonl", truncate=False)
        assert full.article == article

    def test_duplicate_ids(self, tmp_path):
        with pytest.raises(DatasetIntegrityError):
            load_dataset(write_jsonl(tmp_path / "d.jsonl", [RECORDS[0], RECORDS[0]]))

    def test_half_human_scores(self, tmp_path):
        loaded = load_dataset(write_jsonl(tmp_path / "d.jsonl", [{"id": "h", "article": "x", "readability": 3}]))
        assert len(loaded) == 0 and len(loaded.errors) == 1

    def test_report_roundtrip_x100(self):
        r = MetricReport("a")
        r.set("rouge_l", 0.25)
        r.set("lm", -3.5)
        back = report_from_dict(json.loads(json.dumps(r.to_dict(scale100=True))))
        assert back.values == {"rouge_l": 0.25, "lm": -3.5}


class TestConfig:
    def test_defaults(self):
        cfg = Config.load(environ={})
        assert cfg.qa_backend == "builtin" and cfg.weights["qa_conf"] == 2.274

    def test_file_and_env(self, tmp_path):
        p = tmp_path / "c.conf"
        p.write_text("qa_backend = http://a:1  # remote\nweight.rouge_l = 2\ngamma = 0.9984\nseed = 5\n", encoding="utf-8")
        cfg = Config.load(p, environ={"QASUMM_QA_URL": "http://b:2"})
        assert cfg.qa_backend == "http://b:2"
        assert cfg.weights["rouge_l"] == 2.0 and cfg.gamma == 0.9984 and cfg.seed == 5

    def test_unknown_key(self, tmp_path):
        p = tmp_path / "c.conf"
        p.write_text("colour = blue\n", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            Config.load(p, environ={})


class TestScorer:
    scorer = Scorer(Backends.rule_based([r["article"] for r in RECORDS]))

    def test_identity(self):
        s = Sample("x", RECORDS[0]["article"], "the cat sat", "the cat sat")
        r = self.scorer.score(s, ["rouge_1", "rouge_2", "rouge_l"])
        assert r.values == {"rouge_1": 1.0, "rouge_2": 1.0, "rouge_l": 1.0}

    def test_every_requested_metric_reported(self):
        s = Sample("x", RECORDS[0]["article"], None, RECORDS[0]["summary"])
        r = self.scorer.score(s)
        assert set(r.flags) == set(ALL_METRICS)
        for m in SUPERVISED_METRICS:
            assert r.flags[m] == "unavailable" and m not in r.values
        for m in UNSUPERVISED_METRICS:
            assert r.flags[m] == "ok" and m in r.values

    def test_missing_lm_flagged(self):
        scorer = Scorer(Backends.rule_based())
        r = scorer.score(Sample("x", "Ann met Bob .", None, "Ann met Bob ."), ["lm"])
        assert r.flags["lm"] == "unavailable"

    def test_qa_backend_down_flags_unavailable(self):
        def handler(request):
            return httpx.Response(503)

        qa = RemoteQAClient("http://qa", retries=1, backoff=0, transport=httpx.MockTransport(handler))
        b = Backends.rule_based()
        scorer = Scorer(Backends(b.ner, qa, None))
        r = scorer.score(Sample("x", RECORDS[0]["article"], None, "John Smith left ."), ["qa_conf_unsup", "textrank"])
        assert r.flags["qa_conf_unsup"] == "unavailable"
        assert r.flags["textrank"] == "ok"

    def test_parallel_order(self):
        samples = [Sample(r["id"], r["article"], r["reference"], r["summary"]) for r in RECORDS] * 3
        assert self.scorer.score_many(samples, workers=4) == self.scorer.score_many(samples)


def run_cli(*argv):
    return main([str(a) for a in argv])


class TestCLI:
    def test_score_identity_and_scale(self, tmp_path):
        recs = [dict(r, summary=r["reference"]) for r in RECORDS]
        data = write_jsonl(tmp_path / "d.jsonl", recs)
        assert run_cli("score", "--data", data, "--metrics", "rouge_l", "--out", tmp_path / "r.jsonl") == 0
        lines = [json.loads(l) for l in (tmp_path / "r.jsonl").read_text().splitlines()]
        assert [l["values"]["rouge_l"] for l in lines[:-1]] == [1.0] * 3
        assert run_cli("score", "--data", data, "--metrics", "rouge_l", "--x100", "--out", tmp_path / "s.jsonl") == 0
        lines = [json.loads(l) for l in (tmp_path / "s.jsonl").read_text().splitlines()]
        assert lines[0]["values"]["rouge_l"] == 100.0 and lines[0]["scale"] == "x100"

    def test_summary_mean_and_determinism(self, tmp_path):
        data = write_jsonl(tmp_path / "d.jsonl", RECORDS)
        before = data.read_bytes()
        assert run_cli("score", "--data", data, "--out", tmp_path / "1.jsonl", "--seed", 3) == 0
        assert run_cli("score", "--data", data, "--out", tmp_path / "2.jsonl", "--seed", 3, "--workers", 3) == 0
        assert (tmp_path / "1.jsonl").read_bytes() == (tmp_path / "2.jsonl").read_bytes()
        assert data.read_bytes() == before
        lines = [json.loads(l) for l in (tmp_path / "1.jsonl").read_text().splitlines()]
        summary = lines[-1]
        assert summary["seed"] == 3
        for metric, mean in summary["mean"].items():
            vals = [l["values"][metric] for l in lines[:-1] if metric in l["values"]]
            assert mean == pytest.approx(sum(vals) / len(vals), abs=1e-9)

    def test_reference_free_dataset(self, tmp_path):
        recs = [{k: v for k, v in r.items() if k != "reference"} for r in RECORDS]
        data = write_jsonl(tmp_path / "d.jsonl", recs)
        assert run_cli("score", "--data", data, "--out", tmp_path / "r.jsonl") == 0
        first = json.loads((tmp_path / "r.jsonl").read_text().splitlines()[0])
        assert first["flags"]["novelty"] == "unavailable"
        assert first["flags"]["qa_conf_unsup"] == "ok"

    def test_refuses_to_overwrite_input(self, tmp_path):
        data = write_jsonl(tmp_path / "d.jsonl", RECORDS)
        assert run_cli("score", "--data", data, "--out", data) == 2

    def test_correlate(self, tmp_path):
        data = write_jsonl(tmp_path / "d.jsonl", RECORDS)
        out = tmp_path / "table.tsv"
        assert run_cli("correlate", "--data", data, "--out", out, "--metrics", "rouge_l,lm") == 0
        text = (tmp_path / "table.tsv.txt").read_text()
        assert "(*: p<.05, **: p<.005)" in text
        assert out.read_text().startswith("metric\t")

    def test_correlate_refuses_without_humans(self, tmp_path, capsys):
        recs = [{k: v for k, v in r.items() if k not in ("readability", "relevance")} for r in RECORDS]
        data = write_jsonl(tmp_path / "d.jsonl", recs)
        assert run_cli("correlate", "--data", data, "--out", tmp_path / "t.tsv") == 2
        assert "at least 3 samples" in capsys.readouterr().err

    def test_fit_byte_identical(self, tmp_path):
        recs = [dict(r, id=f"{r['id']}{i}") for i in range(3) for r in RECORDS]
        data = write_jsonl(tmp_path / "d.jsonl", recs)
        args = ["fit", "--data", data, "--repeats", 5, "--seed", 2, "--features", "rouge_l,qa_conf_unsup"]
        assert run_cli(*args, "--out", tmp_path / "a.txt") == 0
        assert run_cli(*args, "--out", tmp_path / "b.txt") == 0
        assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()
        assert (tmp_path / "a.txt.ranking.tsv").read_bytes() == (tmp_path / "b.txt.ranking.tsv").read_bytes()
        assert "seed = 2" in (tmp_path / "a.txt").read_text()

    def test_unknown_metric(self, tmp_path):
        data = write_jsonl(tmp_path / "d.jsonl", RECORDS)
        assert run_cli("score", "--data", data, "--metrics", "bleu", "--out", tmp_path / "r.jsonl") == 2


class TestService:
    scorer = Scorer(Backends.rule_based([r["article"] for r in RECORDS]))
    client = TestClient(create_app(scorer, RewardConfig()))

    def test_score_identity(self):
        r = self.client.post("/score", json={"article": "Ann met Bob .", "reference": "a b c", "summary": "a b c", "metrics": ["rouge_l"]})
        assert r.status_code == 200 and r.json()["values"]["rouge_l"] == 1.0

    def test_unknown_metric_is_4xx(self):
        r = self.client.post("/score", json={"article": "x", "summary": "y", "metrics": ["bleu"]})
        assert r.status_code == 422
        assert r.json()["detail"]["field"] == "metrics"

    def test_missing_field_is_4xx(self):
        assert self.client.post("/score", json={"article": "x"}).status_code == 422

    def test_reward_zero_advantage(self):
        item = {"article": RECORDS[0]["article"], "reference": RECORDS[0]["reference"], "greedy": "John met Mary .", "sampled": "John met Mary ."}
        r = self.client.post("/reward", json=[item])
        assert r.status_code == 200
        assert r.json()[0]["advantage"] == 0.0

    def test_health(self):
        body = self.client.get("/health").json()
        assert set(body["backends"]) == {"ner", "qa", "lm"}
        assert body["backends"]["qa"]["reachable"] is True

    def test_backend_failure_is_5xx_with_component(self):
        qa = RemoteQAClient("http://qa", retries=1, backoff=0, transport=httpx.MockTransport(lambda req: httpx.Response(500)))
        b = Backends.rule_based()
        client = TestClient(create_app(Scorer(Backends(b.ner, qa, None)), RewardConfig()))
        item = {"article": RECORDS[0]["article"], "reference": "x", "greedy": "John Smith .", "sampled": "Paris ."}
        r = client.post("/reward", json=[item])
        assert r.status_code == 503
        assert r.json()["detail"]["component"]
