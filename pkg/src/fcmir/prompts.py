"""Prompt templates and chat-completions request rendering.

Templates are plain text files with ``${name}`` placeholders. The defaults ship
in ``fcmir/templates/<kind>.txt``; a template directory in the config replaces
them file by file.
"""

import base64
import io
import logging
from collections.abc import Mapping, Sequence
from importlib import resources
from pathlib import Path
from string import Template
from typing import Any

import numpy as np
from PIL import Image

from .errors import ConfigError, PromptError
from .ingest import resize_pixels_to_width
from .models import PROMPT_KINDS, Frame, PromptTemplate, StitchedImage

logger = logging.getLogger(__name__)

# Kinds that only make sense with visual input.
IMAGE_REQUIRED = ("summarize", "suggest_operation", "suggest_search")


def load_template(
    kind: str, template_dir: str | Path | None = None, max_images: int = 16
) -> PromptTemplate:
    """Load the template for ``kind`` from ``template_dir`` or the packaged defaults."""
    if kind not in PROMPT_KINDS:
        raise ConfigError(f"Unknown prompt kind '{kind}', expected {PROMPT_KINDS}")

    if template_dir is not None:
        path = Path(template_dir) / f"{kind}.txt"
        if path.exists():
            logger.debug(f"Using template {path}")
            text = path.read_text(encoding="utf-8")
            return PromptTemplate(kind=kind, text=text, max_images=max_images)

    text = resources.files("fcmir").joinpath("templates", f"{kind}.txt").read_text(
        encoding="utf-8"
    )
    return PromptTemplate(kind=kind, text=text, max_images=max_images)


def load_templates(
    template_dir: str | Path | None = None, max_images: int = 16
) -> dict[str, PromptTemplate]:
    """All five templates keyed by kind."""
    return {kind: load_template(kind, template_dir, max_images) for kind in PROMPT_KINDS}


def placeholders(template: PromptTemplate) -> list[str]:
    """Placeholder names in order of first appearance."""
    return Template(template.text).get_identifiers()


def encode_image(image: Frame | StitchedImage | np.ndarray, width: int | None = None) -> str:
    """PNG data URL of an image, downscaled to ``width`` first when given."""
    pixels = image if isinstance(image, np.ndarray) else image.pixels
    if width is not None:
        pixels = resize_pixels_to_width(pixels, width)
    buffer = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8)).save(buffer, format="PNG")
    return "data:image/png;base64," + base64.b64encode(buffer.getvalue()).decode("ascii")


def render_prompt(
    template: PromptTemplate,
    slots: Mapping[str, str],
    images: Sequence[str],
    model: str = "",
) -> dict[str, Any]:
    """Build a deterministic chat-completions request body.

    Args:
        template: Prompt template
        slots: Values for every placeholder in the template
        images: Image data URLs, attached in the given order
        model: Model name placed in the body

    Raises:
        PromptError: Unbound placeholder, too many images, or no images for a
            kind that requires visual input
    """
    missing = [name for name in placeholders(template) if name not in slots]
    if missing:
        raise PromptError(f"Unbound placeholder '{missing[0]}' in {template.kind} template")
    if len(images) > template.max_images:
        raise PromptError(
            f"{len(images)} images exceed max_images={template.max_images} for {template.kind}"
        )
    if template.kind in IMAGE_REQUIRED and not images:
        raise PromptError(f"{template.kind} requires at least one image")

    text = Template(template.text).substitute(slots)
    content: list[dict[str, Any]] = [{"type": "text", "text": text}]
    content.extend({"type": "image_url", "image_url": {"url": url}} for url in images)
    return {
        "model": model,
        "temperature": 0,
        "messages": [{"role": "user", "content": content}],
    }
