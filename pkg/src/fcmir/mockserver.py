"""In-process fixture-replay endpoint for offline tests and demos.

Responses are queued per prompt kind (taken from the ``X-Fcmir-Prompt-Kind``
request header). Each queued entry is either assistant text, which is wrapped in
a chat-completions body, or an explicit ``(status, body)`` pair for error paths.
When a queue holds a single entry it is replayed for every request.
"""

import json
import logging
import threading
import time
from collections import defaultdict, deque
from collections.abc import Iterable
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any

from .llm import KIND_HEADER

logger = logging.getLogger(__name__)

DEFAULT_KIND = "default"


@dataclass
class RecordedRequest:
    """A request received by the mock endpoint."""

    path: str
    kind: str
    headers: dict[str, str]
    body: dict[str, Any] = field(default_factory=dict)

    @property
    def image_count(self) -> int:
        count = 0
        for message in self.body.get("messages", []):
            content = message.get("content")
            if isinstance(content, list):
                count += sum(1 for part in content if part.get("type") == "image_url")
        return count


def chat_body(content: str, model: str = "mock") -> str:
    """Serialize assistant text as a minimal chat-completions response."""
    return json.dumps(
        {
            "id": "mock-0",
            "object": "chat.completion",
            "model": model,
            "choices": [
                {
                    "index": 0,
                    "message": {"role": "assistant", "content": content},
                    "finish_reason": "stop",
                }
            ],
        },
        ensure_ascii=False,
    )


class MockEndpoint:
    """Threaded HTTP server replaying queued responses.

    ``latency_s`` holds each request open for that long; ``peak_concurrency``
    records the most requests it served at once.

    Usage:
        with MockEndpoint() as mock:
            mock.enqueue("summarize", '{"Operation": "...", "Intent": "..."}')
            cfg = EndpointConfig(base_url=mock.base_url, model="mock")
    """

    def __init__(self, host: str = "127.0.0.1", port: int = 0, latency_s: float = 0.0):
        self._queues: dict[str, deque] = defaultdict(deque)
        self._lock = threading.Lock()
        self.latency_s = latency_s
        self._active = 0
        self.peak_concurrency = 0
        self.requests: list[RecordedRequest] = []
        self._server = ThreadingHTTPServer((host, port), self._handler_class())
        self._server.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/v1"

    def enqueue(self, kind: str, *responses: str | tuple[int, str]) -> "MockEndpoint":
        """Queue responses for a prompt kind (``"default"`` serves any kind without a queue)."""
        with self._lock:
            self._queues[kind].extend(responses)
        return self

    def load_fixtures(self, path: str | Path) -> "MockEndpoint":
        """Queue responses from a JSON file mapping kind → list of entries.

        Entries are strings (assistant text), objects (serialized as the
        assistant text) or ``{"status": 500, "body": "..."}`` error records.
        """
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        for kind, entries in data.items():
            self.enqueue(kind, *_fixture_entries(entries))
        return self

    def _next(self, kind: str) -> tuple[int, str]:
        with self._lock:
            queue = self._queues.get(kind) or self._queues.get(DEFAULT_KIND)
            if not queue:
                return 404, json.dumps({"error": f"no mock response queued for '{kind}'"})
            entry = queue[0] if len(queue) == 1 else queue.popleft()
        if isinstance(entry, tuple):
            return entry
        return 200, chat_body(entry)

    def _record(self, request: RecordedRequest) -> None:
        with self._lock:
            self.requests.append(request)

    def _enter(self) -> None:
        with self._lock:
            self._active += 1
            self.peak_concurrency = max(self.peak_concurrency, self._active)

    def _leave(self) -> None:
        with self._lock:
            self._active -= 1

    def requests_for(self, kind: str) -> list[RecordedRequest]:
        with self._lock:
            return [r for r in self.requests if r.kind == kind]

    def _handler_class(self) -> type[BaseHTTPRequestHandler]:
        endpoint = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self) -> None:  # noqa: N802
                length = int(self.headers.get("Content-Length") or 0)
                raw = self.rfile.read(length).decode("utf-8") if length else ""
                try:
                    body = json.loads(raw) if raw else {}
                except json.JSONDecodeError:
                    body = {"_raw": raw}
                kind = self.headers.get(KIND_HEADER, DEFAULT_KIND)
                request = RecordedRequest(
                    path=self.path, kind=kind, headers=dict(self.headers), body=body
                )
                endpoint._record(request)
                endpoint._enter()
                try:
                    if endpoint.latency_s:
                        time.sleep(endpoint.latency_s)
                    status, payload = endpoint._next(kind)
                finally:
                    endpoint._leave()
                data = payload.encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, format: str, *args: Any) -> None:  # noqa: A002
                logger.debug("mock endpoint: " + format % args)

        return Handler

    def start(self) -> "MockEndpoint":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        logger.info(f"Mock endpoint listening on {self.base_url}")
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self) -> "MockEndpoint":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def _fixture_entries(entries: Iterable[Any]) -> list[str | tuple[int, str]]:
    result: list[str | tuple[int, str]] = []
    for entry in entries:
        if isinstance(entry, str):
            result.append(entry)
        elif isinstance(entry, dict) and "status" in entry:
            result.append((int(entry["status"]), str(entry.get("body", ""))))
        else:
            result.append(json.dumps(entry, ensure_ascii=False))
    return result
