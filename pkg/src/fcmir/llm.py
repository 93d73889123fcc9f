"""Client for a chat-completions-style multimodal endpoint.

Covers intent summarization, operation/search suggestions and rubric judging.
Every raw response is archived before it is parsed so a parse failure never
loses the model output.
"""

import json
import logging
import re
import threading
import time
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import requests

from .errors import EndpointError, PromptError, ResponseParseError
from .models import (
    RUBRIC_METRICS,
    EndpointConfig,
    Frame,
    IntentSummary,
    PromptTemplate,
    ScoreCard,
    StitchedImage,
    SuggestionSet,
)
from .prompts import encode_image, load_template, render_prompt

logger = logging.getLogger(__name__)

KIND_HEADER = "X-Fcmir-Prompt-Kind"

_FENCE = re.compile(r"^\s*```[A-Za-z0-9_-]*\s*\n?(.*?)\n?\s*```\s*$", re.DOTALL)

ImageInput = Frame | StitchedImage | np.ndarray | str


@dataclass
class ChatResult:
    """One completed round-trip.

    Attributes:
        kind: Prompt kind sent in the request
        content: Assistant message text
        retries: Attempts beyond the first that were needed
        archive_path: Where the raw body was written (None without an archive dir)
    """

    kind: str
    content: str
    retries: int = 0
    archive_path: str | None = None


def in_flight_slots(config: EndpointConfig) -> threading.BoundedSemaphore:
    """Semaphore sized to ``max_in_flight``, for clients that share one endpoint budget."""
    return threading.BoundedSemaphore(config.max_in_flight)


class LLMClient:
    """Thread-safe client with bounded in-flight requests and retry on transient errors.

    Clients built with the same ``slots`` share one in-flight limit; otherwise
    each client gets its own ``max_in_flight`` budget.
    """

    def __init__(
        self,
        config: EndpointConfig,
        archive_dir: str | Path | None = None,
        session: requests.Session | None = None,
        slots: threading.BoundedSemaphore | None = None,
    ):
        if not config.configured:
            raise EndpointError("No endpoint configured; set [endpoint] base_url or FCMIR_API_BASE")
        self.config = config
        self.archive_dir = Path(archive_dir) if archive_dir is not None else None
        self._session = session or requests.Session()
        self._slots = slots if slots is not None else in_flight_slots(config)
        self._seq_lock = threading.Lock()
        self._seq = 0
        self.history: list[ChatResult] = []

    @property
    def url(self) -> str:
        return self.config.base_url.rstrip("/") + "/chat/completions"

    def _headers(self, kind: str) -> dict[str, str]:
        headers = {"Content-Type": "application/json", KIND_HEADER: kind}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        return headers

    def _next_seq(self) -> int:
        with self._seq_lock:
            self._seq += 1
            return self._seq

    def _archive(self, seq: int, kind: str, status: int, retries: int, body: str) -> str | None:
        if self.archive_dir is None:
            return None
        self.archive_dir.mkdir(parents=True, exist_ok=True)
        path = self.archive_dir / f"{seq:02d}_{kind}.json"
        record = {"kind": kind, "status": status, "retries": retries, "body": body}
        path.write_text(
            json.dumps(record, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
            newline="\n",
        )
        return str(path)

    def _post(self, payload: dict[str, Any], kind: str) -> tuple[requests.Response, int]:
        """POST with exponential backoff; only transport errors and 5xx are retried."""
        cfg = self.config
        last_error = ""
        for attempt in range(cfg.max_retries + 1):
            if attempt:
                delay = cfg.backoff_s * 2 ** (attempt - 1)
                logger.debug(f"Retry {attempt}/{cfg.max_retries} for {kind} in {delay:.2f}s")
                time.sleep(delay)
            try:
                with self._slots:
                    response = self._session.post(
                        self.url, json=payload, headers=self._headers(kind), timeout=cfg.timeout_s
                    )
            except (requests.ConnectionError, requests.Timeout) as e:
                last_error = f"transport error: {e}"
                logger.warning(f"{kind} request failed ({last_error})")
                continue
            if response.status_code >= 500:
                last_error = f"HTTP {response.status_code}"
                logger.warning(f"{kind} request failed ({last_error})")
                continue
            if response.status_code >= 400:
                raise EndpointError(
                    f"{kind} request rejected with HTTP {response.status_code}: "
                    f"{response.text[:200]}"
                )
            return response, attempt
        raise EndpointError(
            f"{kind} request failed after {cfg.max_retries + 1} attempts ({last_error})"
        )

    def complete(self, payload: dict[str, Any], kind: str) -> ChatResult:
        """Send one request and return the assistant text.

        Raises:
            EndpointError: Retries exhausted or a 4xx response
            ResponseParseError: Body is not a chat-completions response
        """
        seq = self._next_seq()
        response, retries = self._post(payload, kind)
        archive_path = self._archive(seq, kind, response.status_code, retries, response.text)
        logger.info(f"{kind}: HTTP {response.status_code} after {retries} retries")
        content = extract_content(response.text)
        result = ChatResult(kind=kind, content=content, retries=retries, archive_path=archive_path)
        with self._seq_lock:
            self.history.append(result)
        return result

    def close(self) -> None:
        self._session.close()

    def __enter__(self) -> "LLMClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def extract_content(body: str) -> str:
    """Assistant text from a chat-completions body (string or list-of-parts content)."""
    try:
        data = json.loads(body)
        content = data["choices"][0]["message"]["content"]
    except (json.JSONDecodeError, KeyError, IndexError, TypeError) as e:
        raise ResponseParseError(f"not a chat-completions response: {e}", raw=body) from e
    if isinstance(content, list):
        content = "".join(part.get("text", "") for part in content if isinstance(part, dict))
    if not isinstance(content, str):
        raise ResponseParseError("assistant content is not text", raw=body)
    return content


def _strip_fences(raw: str) -> str:
    match = _FENCE.match(raw)
    return match.group(1) if match else raw


def _load_json(raw: str, opener: str, closer: str) -> Any:
    """Parse JSON after fence stripping; fall back to the outermost bracketed span."""
    text = _strip_fences(raw).strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    start, end = text.find(opener), text.rfind(closer)
    if start == -1 or end <= start:
        raise ResponseParseError("malformed JSON: no JSON object in response", raw=raw)
    try:
        return json.loads(text[start : end + 1])
    except json.JSONDecodeError as e:
        raise ResponseParseError(f"malformed JSON: {e}", raw=raw) from e


def parse_intent_response(raw: str) -> IntentSummary:
    """Parse ``{"Operation": ..., "Intent": ...}`` (keys are case-sensitive).

    Raises:
        ResponseParseError: Malformed JSON, missing key or empty value
    """
    data = _load_json(raw, "{", "}")
    if not isinstance(data, dict):
        raise ResponseParseError("malformed JSON: expected an object", raw=raw)
    for key in ("Operation", "Intent"):
        if key not in data:
            raise ResponseParseError(f"missing {key}", raw=raw)
        value = data[key]
        if not isinstance(value, str) or not value.strip():
            raise ResponseParseError(f"empty {key}", raw=raw)
    return IntentSummary(operation=data["Operation"].strip(), intent=data["Intent"].strip())


def parse_suggestions(raw: str, kind: str) -> SuggestionSet:
    """Parse ``{"Suggestions": [...]}`` or a bare JSON list of strings."""
    text = _strip_fences(raw).strip()
    data = _load_json(raw, "[", "]") if text.startswith("[") else _load_json(raw, "{", "}")
    if isinstance(data, dict):
        if "Suggestions" not in data:
            raise ResponseParseError("missing Suggestions", raw=raw)
        data = data["Suggestions"]
    if not isinstance(data, list):
        raise ResponseParseError("Suggestions is not a list", raw=raw)
    suggestions = [s.strip() for s in data if isinstance(s, str) and s.strip()]
    if not suggestions:
        raise ResponseParseError("empty suggestion list", raw=raw)
    return SuggestionSet(kind=kind, suggestions=suggestions)


def parse_score_card(raw: str, rubric: str) -> ScoreCard:
    """Parse a JSON map of the rubric's five metric names to integer scores."""
    data = _load_json(raw, "{", "}")
    if not isinstance(data, dict):
        raise ResponseParseError("malformed JSON: expected an object", raw=raw)
    try:
        return ScoreCard(rubric=rubric, scores=dict(data))
    except ValueError as e:
        raise ResponseParseError(str(e), raw=raw) from e


def limit_images(images: Sequence[ImageInput], max_images: int) -> list[ImageInput]:
    """Evenly subsample to at most ``max_images``, always keeping the first and last."""
    if len(images) <= max_images:
        return list(images)
    if max_images == 1:
        return [images[-1]]
    positions = np.linspace(0, len(images) - 1, max_images).round().astype(int)
    return [images[i] for i in positions]


def _encode_all(images: Sequence[ImageInput], width: int) -> list[str]:
    return [img if isinstance(img, str) else encode_image(img, width) for img in images]


def _check_kind(template: PromptTemplate, expected: str) -> None:
    if template.kind != expected:
        raise PromptError(f"Template kind '{template.kind}' does not match request '{expected}'")


def summarize_intent(
    images: Sequence[ImageInput],
    client: LLMClient,
    template: PromptTemplate | None = None,
) -> IntentSummary:
    """Summarize a trajectory from keyframes or stitched images.

    Raises:
        PromptError: No images or too many images
        EndpointError: Endpoint failure after retries
        ResponseParseError: Response is not the Operation/Intent JSON
    """
    cfg = client.config
    template = template or load_template("summarize", max_images=cfg.max_images)
    _check_kind(template, "summarize")
    payload = render_prompt(template, {}, _encode_all(images, cfg.image_width), cfg.model)
    result = client.complete(payload, template.kind)
    return parse_intent_response(result.content)


def generate_suggestions(
    summary: IntentSummary,
    images: Sequence[ImageInput],
    kind: str,
    client: LLMClient,
    template: PromptTemplate | None = None,
) -> SuggestionSet:
    """Next-step suggestions of ``kind`` ("operation" or "search") for a summarized trajectory."""
    cfg = client.config
    expected = f"suggest_{kind}"
    template = template or load_template(expected, max_images=cfg.max_images)
    _check_kind(template, expected)
    slots = {"operation": summary.operation, "intent": summary.intent}
    payload = render_prompt(template, slots, _encode_all(images, cfg.image_width), cfg.model)
    result = client.complete(payload, template.kind)
    return parse_suggestions(result.content, kind)


def prediction_text(prediction: IntentSummary | SuggestionSet) -> str:
    if isinstance(prediction, IntentSummary):
        return json.dumps(prediction.to_dict(), ensure_ascii=False)
    return "\n".join(f"- {s}" for s in prediction.suggestions)


def judge_score(
    prediction: IntentSummary | SuggestionSet,
    gold: str,
    rubric: str,
    client: LLMClient,
    images: Sequence[ImageInput] = (),
    template: PromptTemplate | None = None,
) -> ScoreCard:
    """Score a prediction against a reference on the five-metric 0-2 rubric.

    Raises:
        ValueError: Rubric does not match the prediction type
        ResponseParseError: Missing metric or score outside {0, 1, 2}
    """
    if rubric not in RUBRIC_METRICS:
        raise ValueError(f"Unknown rubric '{rubric}', expected {tuple(RUBRIC_METRICS)}")
    expected_rubric = "summary" if isinstance(prediction, IntentSummary) else "suggestion"
    if rubric != expected_rubric:
        raise ValueError(f"Rubric '{rubric}' does not apply to a {type(prediction).__name__}")

    cfg = client.config
    kind = f"judge_{rubric}"
    template = template or load_template(kind, max_images=cfg.max_images)
    _check_kind(template, kind)
    slots = {"prediction": prediction_text(prediction), "gold": gold}
    payload = render_prompt(template, slots, _encode_all(images, cfg.image_width), cfg.model)
    result = client.complete(payload, template.kind)
    return parse_score_card(result.content, rubric)
