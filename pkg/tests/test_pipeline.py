"""Tests for stage orchestration and the output tree."""

import json

import pytest

from fcmir import pipeline
from fcmir.config import load_config
from fcmir.errors import ConfigError, ResponseParseError, StageError
from fcmir.manifest import validate_manifest
from fcmir.pipeline import run_many, run_pipeline, validate_stages
from fcmir.synth import build_keyframe_corpus, write_corpus

FULL_RUN = ["sample", "stitch", "summarize", "suggest"]


def _manifest_json(out_dir):
    return json.loads((out_dir / "manifest.json").read_text(encoding="utf-8"))


@pytest.fixture
def offline_config():
    """Synthetic-frame sampling with no endpoint configured."""
    return load_config(env={}, overrides={"sampling": {"fps": 2.0, "interval_s": 0.5}})


class TestValidateStages:
    def test_execution_order(self):
        assert validate_stages(["summarize", "sample"]) == ["sample", "summarize"]

    @pytest.mark.parametrize(
        "stages, message",
        [
            (["suggest", "sample"], "requires 'summarize'"),
            (["stitch"], "requires 'sample'"),
            (["sample", "render"], "Unknown stage"),
            ([], "No stages"),
        ],
    )
    def test_invalid_chains(self, stages, message):
        with pytest.raises(ConfigError, match=message):
            validate_stages(stages)


class TestRunPipeline:
    def test_sample_only(self, synth_source, offline_config, tmp_path):
        out = tmp_path / "out"
        manifest = run_pipeline(synth_source, offline_config, ["sample"], out)
        data = _manifest_json(out)

        assert manifest.status == "complete"
        assert validate_manifest(data) == []
        assert set(data) >= {"keyframes", "compression"}
        assert "intent" not in data and "stitched" not in data
        for record in data["keyframes"]["retained"]:
            assert (out / record["path"]).exists()
        assert data["compression"]["frame_pct"] >= 50.0

    def test_endpoint_stage_without_endpoint(self, synth_source, offline_config, tmp_path):
        """The missing endpoint is reported before anything is written."""
        out = tmp_path / "out"
        with pytest.raises(ConfigError, match="need an endpoint"):
            run_pipeline(synth_source, offline_config, ["sample", "summarize"], out)
        assert not out.exists()

    def test_judge_needs_gold(self, synth_source, synth_config, tmp_path):
        with pytest.raises(ConfigError, match="gold reference"):
            run_pipeline(synth_source, synth_config, ["sample", "summarize", "judge"], tmp_path)

    def test_refuses_foreign_output_dir(self, synth_source, offline_config, tmp_path):
        out = tmp_path / "out"
        out.mkdir()
        (out / "notes.txt").write_text("keep me", encoding="utf-8")

        with pytest.raises(ConfigError, match="refusing"):
            run_pipeline(synth_source, offline_config, ["sample"], out)
        assert (out / "notes.txt").exists()

    def test_refuses_unreadable_manifest(self, synth_source, offline_config, tmp_path):
        out = tmp_path / "out"
        out.mkdir()
        (out / "manifest.json").write_text("not json", encoding="utf-8")

        with pytest.raises(ConfigError, match="Unreadable"):
            run_pipeline(synth_source, offline_config, ["sample"], out)
        assert (out / "manifest.json").read_text(encoding="utf-8") == "not json"

    def test_refuses_manifest_of_another_tool(self, synth_source, offline_config, tmp_path):
        out = tmp_path / "out"
        run_pipeline(synth_source, offline_config, ["sample"], out)
        data = _manifest_json(out)
        data["generator"] = "othertool/2.0"
        (out / "manifest.json").write_text(json.dumps(data), encoding="utf-8")

        with pytest.raises(ConfigError, match="not written by fcmir"):
            run_pipeline(synth_source, offline_config, ["sample"], out)

    def test_invalid_manifest_is_not_promoted_as_complete(
        self, synth_source, offline_config, tmp_path, monkeypatch
    ):
        monkeypatch.setattr(
            pipeline, "validate_manifest", lambda data: ["keyframes record is malformed"]
        )
        out = tmp_path / "out"

        with pytest.raises(StageError, match="invalid manifest"):
            run_pipeline(synth_source, offline_config, ["sample"], out)

        data = _manifest_json(out)
        assert data["status"] == "incomplete"
        assert "keyframes record is malformed" in data["error"]

    def test_previous_output_is_replaced(self, synth_source, offline_config, tmp_path):
        out = tmp_path / "out"
        run_pipeline(synth_source, offline_config, ["sample", "stitch"], out)
        run_pipeline(synth_source, offline_config, ["sample"], out)

        assert not (out / "stitched").exists()
        assert [p.name for p in tmp_path.iterdir()] == ["out"]

    def test_full_run(self, synth_source, synth_config, mock_endpoint, mock_responses, tmp_path):
        mock_endpoint.load_fixtures(mock_responses)
        out = tmp_path / "out"

        manifest = run_pipeline(synth_source, synth_config, FULL_RUN, out)
        data = _manifest_json(out)

        assert manifest.status == "complete"
        assert validate_manifest(data) == []
        assert data["intent"]["Intent"] == "Book tickets for the 2025 tour concert Hangzhou stop"
        assert sorted(data["suggestions"]) == ["operation", "search"]
        assert data["config"]["endpoint"]["api_key"] == ""
        assert set(data["timings_ms"]) == set(FULL_RUN)
        for record in data["stitched"]:
            assert (out / record["path"]).exists()
        assert sorted(p.name for p in (out / "responses").iterdir()) == [
            "01_summarize.json",
            "02_suggest_operation.json",
            "03_suggest_search.json",
        ]
        sent = mock_endpoint.requests_for("summarize")[0]
        assert sent.image_count == len(data["stitched"])

    def test_runs_are_reproducible(
        self, synth_source, synth_config, mock_endpoint, mock_responses, tmp_path
    ):
        """Two runs differ only in their stage timings."""
        mock_endpoint.load_fixtures(mock_responses)
        first = tmp_path / "first"
        second = tmp_path / "second"
        run_pipeline(synth_source, synth_config, FULL_RUN, first)
        run_pipeline(synth_source, synth_config, FULL_RUN, second)

        a, b = _manifest_json(first), _manifest_json(second)
        a.pop("timings_ms")
        b.pop("timings_ms")
        assert a == b
        for record in a["stitched"]:
            assert (first / record["path"]).read_bytes() == (second / record["path"]).read_bytes()

    def test_judge_stage(self, synth_source, synth_config, mock_endpoint, mock_responses, tmp_path):
        mock_endpoint.load_fixtures(mock_responses)
        out = tmp_path / "out"
        run_pipeline(
            synth_source,
            synth_config,
            ["sample", "summarize", "judge"],
            out,
            gold="Bought concert tickets",
        )
        (card,) = _manifest_json(out)["score_cards"]
        assert card["rubric"] == "summary"
        assert sum(card["scores"].values()) == 9

    def test_stage_failure_keeps_partial_manifest(
        self, synth_source, synth_config, mock_endpoint, tmp_path
    ):
        mock_endpoint.enqueue("summarize", "The user is buying tickets.")
        out = tmp_path / "out"

        with pytest.raises(ResponseParseError):
            run_pipeline(synth_source, synth_config, FULL_RUN, out)

        data = _manifest_json(out)
        assert data["status"] == "incomplete"
        assert "malformed JSON" in data["error"]
        assert "keyframes" in data and "intent" not in data
        assert validate_manifest(data) == []
        assert (out / "responses" / "01_summarize.json").exists()


class TestRunMany:
    @pytest.fixture
    def sources(self, tmp_path):
        roots = write_corpus(build_keyframe_corpus(2, seed=6), tmp_path / "corpus")
        renamed = []
        for i, root in enumerate(roots):
            target = tmp_path / f"rec_{i}"
            (root / "frames").rename(target)
            renamed.append(target)
        return renamed

    def test_parallel_sources(self, sources, offline_config, tmp_path):
        results = run_many(sources, offline_config, ["sample"], tmp_path / "runs", jobs=2)

        assert [r.source for r in results] == [str(s) for s in sources]
        assert all(r.error is None for r in results)
        for source in sources:
            data = _manifest_json(tmp_path / "runs" / source.name)
            assert data["source_id"] == source.name

    def test_failures_are_collected(self, sources, offline_config, tmp_path):
        missing = tmp_path / "missing"
        results = run_many([sources[0], missing], offline_config, ["sample"], tmp_path / "runs")

        assert results[0].error is None
        assert results[1].error.exit_code == 3
        assert _manifest_json(tmp_path / "runs" / "missing")["status"] == "incomplete"

    def test_duplicate_names(self, offline_config, tmp_path):
        sources = [tmp_path / "a" / "frames", tmp_path / "b" / "frames"]
        with pytest.raises(ConfigError, match="unique"):
            run_many(sources, offline_config, ["sample"], tmp_path / "runs")

    def test_jobs_must_be_positive(self, sources, offline_config, tmp_path):
        with pytest.raises(ConfigError, match="--jobs"):
            run_many(sources, offline_config, ["sample"], tmp_path / "runs", jobs=0)

    def test_shared_in_flight_limit(self, sources, mock_endpoint, mock_responses, tmp_path):
        """Parallel sources never hold more endpoint requests open than max_in_flight."""
        mock_endpoint.load_fixtures(mock_responses)
        mock_endpoint.latency_s = 0.2
        config = load_config(
            env={},
            overrides={
                "sampling": {"fps": 2.0, "interval_s": 0.5},
                "endpoint": {
                    "base_url": mock_endpoint.base_url,
                    "model": "mock-vision",
                    "backoff_s": 0.0,
                    "max_in_flight": 1,
                },
            },
        )
        results = run_many(
            sources, config, ["sample", "summarize", "suggest"], tmp_path / "runs", jobs=2
        )

        assert all(r.error is None for r in results)
        assert len(mock_endpoint.requests) == 6
        assert mock_endpoint.peak_concurrency == 1
