"""Tests for manifest I/O and validation."""

import json

from fcmir.manifest import ManifestIO, validate_manifest, write_json_atomic


def _complete(**extra):
    manifest = ManifestIO.create("rec", ["sample"])
    manifest.status = "complete"
    manifest.keyframes = {"retained": [{"index": 3, "path": "keyframes/frame_000003.png"}]}
    data = manifest.to_dict()
    data.update(extra)
    return data


def test_write_json_atomic_is_deterministic(tmp_path):
    """Keys are sorted, indent is two spaces and the file ends with a newline."""
    path = tmp_path / "out" / "data.json"
    write_json_atomic({"b": 1, "a": "杭州"}, path)

    assert path.read_text(encoding="utf-8") == '{\n  "a": "杭州",\n  "b": 1\n}\n'
    assert list(path.parent.iterdir()) == [path]


def test_manifest_round_trip(tmp_path):
    manifest = ManifestIO.create("rec", ["sample", "summarize"])
    manifest.intent = {"Operation": "a", "Intent": "b"}
    path = tmp_path / "manifest.json"
    ManifestIO.write(manifest, path)

    loaded = ManifestIO.read(path)

    assert loaded.to_dict() == manifest.to_dict()
    assert loaded.generator.startswith("fcmir/")
    assert "stitched" not in json.loads(path.read_text(encoding="utf-8"))


class TestValidateManifest:
    def test_valid(self):
        assert validate_manifest(_complete()) == []

    def test_schema_version(self):
        assert any("schema" in e for e in validate_manifest(_complete(schema=2)))

    def test_completed_stage_without_record(self):
        data = _complete(stages=["sample", "summarize"])
        assert validate_manifest(data) == ["stage 'summarize' ran but 'intent' is missing"]

    def test_record_without_stage(self):
        data = _complete(intent={"Operation": "a", "Intent": "b"})
        assert validate_manifest(data) == [
            "'intent' present but stage 'summarize' was not requested"
        ]

    def test_incomplete_run_may_lack_records(self):
        data = _complete(status="incomplete", stages=["sample", "summarize"], error="boom")
        assert validate_manifest(data) == []

    def test_absolute_keyframe_path(self):
        data = _complete(keyframes={"retained": [{"index": 0, "path": "/tmp/frame.png"}]})
        assert validate_manifest(data) == [
            "keyframe path must be relative to the output directory: /tmp/frame.png"
        ]

    def test_empty_intent_and_suggestions(self):
        data = _complete(
            stages=["sample", "summarize", "suggest"],
            intent={"Operation": "", "Intent": "b"},
            suggestions={"search": {"kind": "search", "suggestions": []}},
        )
        assert validate_manifest(data) == [
            "intent.Operation must be a nonempty string",
            "suggestions.search is empty",
        ]
