"""Tests for the comparator and input-form ablation reports."""

import pytest

from fcmir.ablation import (
    INPUT_COLUMNS,
    QUALITY_COLUMNS,
    REPORT_COLUMNS,
    ablate,
    ablate_inputs,
    corpus_trajectories,
)
from fcmir.config import load_config
from fcmir.errors import ConfigError
from fcmir.keyframe import MODALITIES
from fcmir.models import COMPARATORS
from fcmir.synth import build_keyframe_corpus, write_corpus

SYNTH_SAMPLING = {"sampling": {"fps": 2.0, "interval_s": 0.5}}


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("ablation")
    write_corpus(build_keyframe_corpus(2, seed=2), root)
    return root


def test_report_per_comparator(corpus):
    report = ablate(corpus, load_config(env={}, overrides=SYNTH_SAMPLING))

    assert list(report.columns) == REPORT_COLUMNS
    assert report["comparator"].tolist() == list(COMPARATORS)
    assert report["sampled"].nunique() == 1
    assert (report["trajectories"] == 2).all()

    hybrid = report.set_index("comparator").loc["phash_ssim"]
    assert hybrid["screen_coverage"] == 1.0
    assert hybrid["duplicates_retained"] == 0
    assert hybrid["frame_compression_pct"] >= 50.0


def test_summary_quality_columns(corpus, tmp_path, mock_endpoint, mock_responses):
    """With an endpoint and references the report scores the generated summaries."""
    mock_endpoint.load_fixtures(mock_responses)
    (corpus / "references.csv").write_text(
        "trajectory,reference\ntraj_000,Viewed the 2025 tour concert page and clicked Book Now\n",
        encoding="utf-8",
    )
    config = load_config(
        env={},
        overrides={
            **SYNTH_SAMPLING,
            "endpoint": {"base_url": mock_endpoint.base_url, "backoff_s": 0.0},
        },
    )
    try:
        report = ablate(corpus, config, comparators=["phash_ssim"])
    finally:
        (corpus / "references.csv").unlink()

    assert list(report.columns) == REPORT_COLUMNS + QUALITY_COLUMNS
    row = report.iloc[0]
    assert 0.0 < row["sbert"] <= 1.0
    assert 0.0 < row["rouge_avg"] <= 1.0
    assert len(mock_endpoint.requests_for("summarize")) == 1


def test_missing_truth_leaves_coverage_blank(tmp_path):
    roots = write_corpus(build_keyframe_corpus(1, seed=4), tmp_path)
    (roots[0] / "truth.json").unlink()

    report = ablate(tmp_path, load_config(env={}, overrides=SYNTH_SAMPLING), ["l1"])

    assert report["screen_coverage"].isna().all()
    assert report["duplicates_retained"].isna().all()


def test_unknown_comparator(corpus):
    with pytest.raises(ConfigError, match="Unknown comparator"):
        ablate(corpus, load_config(env={}), ["orb"])


def test_corpus_without_trajectories(tmp_path):
    with pytest.raises(ConfigError, match="No trajectories"):
        corpus_trajectories(tmp_path)
    with pytest.raises(ConfigError, match="not found"):
        corpus_trajectories(tmp_path / "absent")


class TestInputForms:
    def test_report_per_input_form(self, corpus):
        report = ablate_inputs(corpus, load_config(env={}, overrides=SYNTH_SAMPLING))
        assert list(report.columns) == INPUT_COLUMNS
        assert report["input_form"].tolist() == list(MODALITIES)

        rows = report.set_index("input_form")
        assert rows.loc["uniform", "images"] == rows.loc["uniform", "sampled"]
        assert rows.loc["uniform", "frame_compression_pct"] == 0.0
        assert rows.loc["last_frame", "images"] == 2
        assert rows.loc["keyframes", "images"] < rows.loc["uniform", "images"]
        assert rows.loc["keyframes_stitched", "images"] <= rows.loc["keyframes", "images"]
        assert (
            rows.loc["keyframes_stitched", "pixel_compression_pct"]
            >= rows.loc["keyframes", "pixel_compression_pct"] - 1e-9
        )

    def test_summary_quality_columns(self, corpus, mock_endpoint, mock_responses):
        mock_endpoint.load_fixtures(mock_responses)
        (corpus / "references.csv").write_text(
            "trajectory,reference\ntraj_001,Clicked Book Now on the concert page\n",
            encoding="utf-8",
        )
        config = load_config(
            env={},
            overrides={
                **SYNTH_SAMPLING,
                "endpoint": {"base_url": mock_endpoint.base_url, "backoff_s": 0.0},
            },
        )
        try:
            report = ablate_inputs(corpus, config, ["last_frame"])
        finally:
            (corpus / "references.csv").unlink()

        assert list(report.columns) == INPUT_COLUMNS + QUALITY_COLUMNS
        (request,) = mock_endpoint.requests_for("summarize")
        assert request.image_count == 1
        assert 0.0 < report.iloc[0]["rouge_avg"] <= 1.0

    def test_unknown_input_form(self, corpus):
        with pytest.raises(ConfigError, match="Unknown input form"):
            ablate_inputs(corpus, load_config(env={}), ["video"])
