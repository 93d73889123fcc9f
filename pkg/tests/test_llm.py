"""Tests for the endpoint client and response parsing, against the mock endpoint."""

import json
from concurrent.futures import ThreadPoolExecutor

import pytest

from fcmir.errors import EndpointError, PromptError, ResponseParseError
from fcmir.llm import (
    LLMClient,
    extract_content,
    generate_suggestions,
    in_flight_slots,
    judge_score,
    limit_images,
    parse_intent_response,
    parse_suggestions,
    summarize_intent,
)
from fcmir.models import SUMMARY_METRICS, EndpointConfig, IntentSummary
from fcmir.prompts import load_template

IMAGES = ["data:image/png;base64,AAAA", "data:image/png;base64,BBBB"]
SUMMARY = IntentSummary(operation="Opened the concert page", intent="Buy concert tickets")


def _scores(**overrides):
    scores = {metric: 2 for metric in SUMMARY_METRICS}
    scores.update(overrides)
    return json.dumps(scores)


class TestParsing:
    def test_fenced_intent(self):
        summary = parse_intent_response('```json\n{"Operation": " a ", "Intent": "b"}\n```')
        assert summary == IntentSummary(operation="a", intent="b")

    def test_json_inside_prose(self):
        raw = 'Sure: {"Operation": "a", "Intent": "b"} Hope this helps.'
        assert parse_intent_response(raw).intent == "b"

    def test_missing_key(self):
        with pytest.raises(ResponseParseError, match="missing Intent"):
            parse_intent_response('{"Operation": "a"}')

    def test_keys_are_case_sensitive(self):
        with pytest.raises(ResponseParseError, match="missing Operation"):
            parse_intent_response('{"operation": "a", "intent": "b"}')

    def test_malformed_json(self):
        with pytest.raises(ResponseParseError, match="malformed JSON") as excinfo:
            parse_intent_response('{"Operation": ')
        assert excinfo.value.raw == '{"Operation": '

    @pytest.mark.parametrize(
        "summary",
        [
            SUMMARY,
            IntentSummary(operation="打开地图，搜索“杭州东站”", intent="查找去车站的路线"),
            IntentSummary(operation='Typed {"q": 1} into the box', intent="Debug a [JSON] form"),
        ],
    )
    def test_serialized_summary_parses_back(self, summary):
        assert parse_intent_response(json.dumps(summary.to_dict())) == summary
        assert parse_intent_response(json.dumps(summary.to_dict(), ensure_ascii=False)) == summary

    def test_suggestion_shapes(self):
        assert parse_suggestions('{"Suggestions": ["a", " b "]}', "operation").suggestions == [
            "a",
            "b",
        ]
        assert parse_suggestions('["q1", "q2"]', "search").suggestions == ["q1", "q2"]

    def test_empty_suggestions(self):
        with pytest.raises(ResponseParseError, match="empty suggestion list"):
            parse_suggestions("[]", "search")

    def test_list_of_parts_content(self):
        body = json.dumps(
            {"choices": [{"message": {"content": [{"type": "text", "text": "hi"}, {"x": 1}]}}]}
        )
        assert extract_content(body) == "hi"

    def test_not_a_chat_body(self):
        with pytest.raises(ResponseParseError, match="not a chat-completions response"):
            extract_content('{"result": "hi"}')


class TestClient:
    def test_unconfigured(self):
        with pytest.raises(EndpointError, match="No endpoint configured"):
            LLMClient(EndpointConfig())

    def test_summarize_from_fixtures(self, mock_endpoint, endpoint_config, mock_responses):
        mock_endpoint.load_fixtures(mock_responses)
        with LLMClient(endpoint_config) as client:
            summary = summarize_intent(IMAGES, client)

        assert summary.intent == "Book tickets for the 2025 tour concert Hangzhou stop"
        (request,) = mock_endpoint.requests_for("summarize")
        assert request.path == "/v1/chat/completions"
        assert request.image_count == 2
        assert request.body["model"] == "mock-vision"

    def test_bearer_token(self, mock_endpoint, endpoint_config, mock_responses):
        mock_endpoint.load_fixtures(mock_responses)
        endpoint_config.api_key = "sk-test"
        with LLMClient(endpoint_config) as client:
            summarize_intent(IMAGES, client)
        assert mock_endpoint.requests[0].headers["Authorization"] == "Bearer sk-test"

    def test_retries_server_errors(self, mock_endpoint, endpoint_config):
        """Two 500s followed by a good answer succeed with two retries."""
        mock_endpoint.enqueue(
            "summarize", (500, "boom"), (500, "boom"), '{"Operation": "a", "Intent": "b"}'
        )
        with LLMClient(endpoint_config) as client:
            summary = summarize_intent(IMAGES, client)

        assert summary.operation == "a"
        assert client.history[-1].retries == 2
        assert len(mock_endpoint.requests) == 3

    def test_retries_exhausted(self, mock_endpoint, endpoint_config):
        mock_endpoint.enqueue("summarize", (503, "busy"))
        with LLMClient(endpoint_config) as client:
            with pytest.raises(EndpointError, match="after 3 attempts"):
                summarize_intent(IMAGES, client)

    def test_client_errors_are_not_retried(self, mock_endpoint, endpoint_config):
        mock_endpoint.enqueue("summarize", (400, "bad request"))
        with LLMClient(endpoint_config) as client:
            with pytest.raises(EndpointError, match="HTTP 400"):
                summarize_intent(IMAGES, client)
        assert len(mock_endpoint.requests) == 1

    def test_in_flight_requests_are_bounded(self, mock_endpoint, endpoint_config):
        """Six concurrent calls through a two-slot client never overlap more than two deep."""
        mock_endpoint.latency_s = 0.2
        mock_endpoint.enqueue("summarize", '{"Operation": "a", "Intent": "b"}')
        endpoint_config.max_in_flight = 2
        with LLMClient(endpoint_config) as client:
            with ThreadPoolExecutor(max_workers=6) as pool:
                list(pool.map(lambda _: summarize_intent(IMAGES, client), range(6)))

        assert len(mock_endpoint.requests) == 6
        assert mock_endpoint.peak_concurrency == 2

    def test_clients_can_share_slots(self, mock_endpoint, endpoint_config):
        mock_endpoint.latency_s = 0.1
        mock_endpoint.enqueue("summarize", '{"Operation": "a", "Intent": "b"}')
        endpoint_config.max_in_flight = 1
        slots = in_flight_slots(endpoint_config)
        clients = [LLMClient(endpoint_config, slots=slots) for _ in range(3)]
        with ThreadPoolExecutor(max_workers=3) as pool:
            list(pool.map(lambda c: summarize_intent(IMAGES, c), clients))
        for client in clients:
            client.close()

        assert mock_endpoint.peak_concurrency == 1

    def test_prose_reply_is_archived(self, mock_endpoint, endpoint_config, tmp_path):
        """A reply that is not JSON fails to parse but its raw body is kept."""
        mock_endpoint.enqueue("summarize", "The user seems to be buying tickets.")
        with LLMClient(endpoint_config, archive_dir=tmp_path) as client:
            with pytest.raises(ResponseParseError):
                summarize_intent(IMAGES, client)

        record = json.loads((tmp_path / "01_summarize.json").read_text(encoding="utf-8"))
        assert record["status"] == 200
        assert "buying tickets" in record["body"]


class TestSuggestions:
    def test_both_kinds(self, mock_endpoint, endpoint_config, mock_responses):
        mock_endpoint.load_fixtures(mock_responses)
        with LLMClient(endpoint_config) as client:
            operation = generate_suggestions(SUMMARY, IMAGES, "operation", client)
            search = generate_suggestions(SUMMARY, IMAGES, "search", client)

        assert operation.kind == "operation" and len(operation.suggestions) == 2
        assert search.suggestions[0] == "2025 tour concert Hangzhou seating chart"
        text = mock_endpoint.requests_for("suggest_search")[0].body["messages"][0]["content"][0]
        assert "Buy concert tickets" in text["text"]

    def test_template_kind_mismatch(self, endpoint_config):
        with LLMClient(endpoint_config) as client:
            with pytest.raises(PromptError, match="does not match"):
                generate_suggestions(
                    SUMMARY, IMAGES, "operation", client, template=load_template("suggest_search")
                )


class TestJudge:
    def test_full_marks(self, mock_endpoint, endpoint_config):
        mock_endpoint.enqueue("judge_summary", _scores())
        with LLMClient(endpoint_config) as client:
            card = judge_score(SUMMARY, "Bought tickets", "summary", client)
        assert card.total == 10

    def test_score_out_of_range(self, mock_endpoint, endpoint_config):
        mock_endpoint.enqueue("judge_summary", _scores(**{"Action Sequence Accuracy": 3}))
        with LLMClient(endpoint_config) as client:
            with pytest.raises(ResponseParseError, match="score out of range"):
                judge_score(SUMMARY, "gold", "summary", client)

    def test_incomplete_rubric(self, mock_endpoint, endpoint_config):
        scores = {metric: 1 for metric in SUMMARY_METRICS[:4]}
        mock_endpoint.enqueue("judge_summary", json.dumps(scores))
        with LLMClient(endpoint_config) as client:
            with pytest.raises(ResponseParseError, match="incomplete rubric"):
                judge_score(SUMMARY, "gold", "summary", client)

    def test_rubric_must_fit_prediction(self, endpoint_config):
        with LLMClient(endpoint_config) as client:
            with pytest.raises(ValueError, match="does not apply"):
                judge_score(SUMMARY, "gold", "suggestion", client)


class TestLimitImages:
    def test_even_subsample_keeps_ends(self):
        assert limit_images(list(range(10)), 4) == [0, 3, 6, 9]

    def test_single_slot_keeps_last(self):
        assert limit_images(list(range(5)), 1) == [4]

    def test_under_limit_is_unchanged(self):
        assert limit_images([1, 2], 16) == [1, 2]
