"""Tests for prompt templates and request rendering."""

import base64
import io

import numpy as np
import pytest
from PIL import Image

from fcmir.errors import ConfigError, PromptError
from fcmir.models import PROMPT_KINDS, PromptTemplate
from fcmir.prompts import encode_image, load_template, load_templates, placeholders, render_prompt


class TestTemplates:
    def test_all_kinds_ship_a_template(self):
        templates = load_templates()
        assert sorted(templates) == sorted(PROMPT_KINDS)
        assert all(t.text.strip() for t in templates.values())

    def test_placeholders(self):
        assert placeholders(load_template("summarize")) == []
        assert placeholders(load_template("suggest_operation")) == ["operation", "intent"]
        assert placeholders(load_template("judge_summary")) == ["prediction", "gold"]

    def test_template_dir_overrides_single_files(self, tmp_path):
        """Files present in the directory win; missing ones fall back to the defaults."""
        (tmp_path / "summarize.txt").write_text("Custom ${nothing}", encoding="utf-8")

        custom = load_template("summarize", tmp_path)
        fallback = load_template("suggest_search", tmp_path)

        assert custom.text == "Custom ${nothing}"
        assert fallback.text == load_template("suggest_search").text

    def test_unknown_kind(self):
        with pytest.raises(ConfigError, match="Unknown prompt kind"):
            load_template("translate")


class TestRenderPrompt:
    def test_images_attached_in_order(self):
        """The text part comes first, then one image part per URL in input order."""
        urls = [f"data:image/png;base64,{i}" for i in range(6)]
        body = render_prompt(load_template("summarize"), {}, urls, model="m")

        content = body["messages"][0]["content"]
        assert body["model"] == "m"
        assert body["temperature"] == 0
        assert content[0]["type"] == "text"
        assert [part["image_url"]["url"] for part in content[1:]] == urls

    def test_slots_are_substituted(self):
        body = render_prompt(
            load_template("suggest_search"),
            {"operation": "Opened the map", "intent": "Find a hotel"},
            ["data:image/png;base64,AA"],
        )
        text = body["messages"][0]["content"][0]["text"]
        assert "Opened the map" in text and "Find a hotel" in text
        assert "${" not in text

    def test_missing_slot(self):
        with pytest.raises(PromptError, match="Unbound placeholder 'operation'"):
            render_prompt(load_template("suggest_operation"), {}, ["x"])

    def test_zero_images(self):
        with pytest.raises(PromptError, match="requires at least one image"):
            render_prompt(load_template("summarize"), {}, [])

    def test_judge_without_images(self):
        body = render_prompt(load_template("judge_summary"), {"prediction": "p", "gold": "g"}, [])
        assert len(body["messages"][0]["content"]) == 1

    def test_too_many_images(self):
        template = PromptTemplate(kind="summarize", text="Summarize.", max_images=2)
        with pytest.raises(PromptError, match="exceed max_images=2"):
            render_prompt(template, {}, ["a", "b", "c"])

    def test_rendering_is_deterministic(self):
        template = load_template("judge_suggestion")
        slots = {"prediction": "- a", "gold": "b"}
        assert render_prompt(template, slots, []) == render_prompt(template, slots, [])


def test_encode_image_downscales():
    pixels = np.zeros((200, 1000, 3), np.uint8)
    url = encode_image(pixels, width=100)

    assert url.startswith("data:image/png;base64,")
    decoded = base64.b64decode(url.split(",", 1)[1])
    with Image.open(io.BytesIO(decoded)) as img:
        assert img.size == (100, 20)
