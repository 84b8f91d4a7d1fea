"""Chat-completion backends: live HTTP, scripted fixtures and record-replay.

Every call is keyed by ``(stage, subtask, attempt)``. The scripted and replay
backends use the key to find a stored response; the live backend ignores it.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from dataclasses import dataclass
from pathlib import Path

import httpx

from ..errors import BackendError, FixtureExhausted, FixtureKeyMissing, NonSuccessStatus, TransportError

logger = logging.getLogger(__name__)

API_KEY_ENV = "CURRICULLM_API_KEY"
CHAT_PATH = "/v1/chat/completions"


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[tuple[str, str], ...]
    temperature: float = 1.0
    candidate_count: int = 1

    def __post_init__(self):
        if not self.messages:
            raise ValueError("a chat request needs at least one message")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        for role, _ in self.messages:
            if role not in ("system", "user"):
                raise ValueError(f"unsupported role {role!r}")

    def to_body(self) -> dict:
        return {
            "model": self.model,
            "messages": [{"role": r, "content": c} for r, c in self.messages],
            "temperature": self.temperature,
            "n": self.candidate_count,
        }

    @property
    def text(self) -> str:
        return "\n\n".join(f"[{role}]\n{content}" for role, content in self.messages)


def key_name(key) -> str:
    stage, subtask, _ = key
    return f"{stage}/{subtask}"


class Backend:
    def complete(self, request: ChatRequest, key: tuple[str, int, int]) -> list[str]:
        raise NotImplementedError

    def close(self):
        pass


class LiveBackend(Backend):
    """OpenAI-compatible ``/v1/chat/completions`` client."""

    def __init__(self, base_url: str, model: str | None = None, api_key: str | None = None,
                 timeout: float = 120.0, transport: httpx.BaseTransport | None = None):
        base = base_url.rstrip("/")
        if base.endswith("/v1"):
            base = base[: -len("/v1")]
        self.url = base + CHAT_PATH
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self._client = httpx.Client(timeout=timeout, transport=transport)
        self.calls = 0

    def complete(self, request, key):
        body = request.to_body()
        if self.model:
            body["model"] = self.model
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        self.calls += 1
        try:
            resp = self._client.post(self.url, json=body, headers=headers)
        except httpx.HTTPError as exc:
            raise TransportError(f"{type(exc).__name__}: {exc}") from exc
        if resp.status_code != 200:
            raise NonSuccessStatus(resp.status_code, resp.text)
        try:
            choices = resp.json()["choices"]
            return [c["message"]["content"] for c in choices]
        except (ValueError, KeyError, TypeError) as exc:
            raise TransportError(f"malformed chat completion response: {exc}") from exc

    def close(self):
        self._client.close()


class ScriptedBackend(Backend):
    """Serves fixture responses; the attempt number indexes the list stored under ``stage/subtask``."""

    def __init__(self, responses: dict[str, list[str]]):
        self.responses = {k: list(v) if isinstance(v, list) else [v] for k, v in responses.items()}
        self.calls = 0

    @classmethod
    def from_file(cls, path) -> "ScriptedBackend":
        data = json.loads(Path(path).read_text())
        return cls(data.get("responses", data))

    def complete(self, request, key):
        self.calls += 1
        name = key_name(key)
        if name not in self.responses:
            raise FixtureKeyMissing(f"no fixture responses for {name}")
        items = self.responses[name]
        attempt = key[2]
        if attempt >= len(items):
            raise FixtureExhausted(f"fixture {name} has {len(items)} response(s); attempt {attempt} requested")
        return [items[attempt]]


class ReplayBackend(Backend):
    """Replays stored responses; misses are forwarded to ``inner`` and recorded."""

    def __init__(self, directory, inner: Backend | None = None):
        self.directory = Path(directory)
        self.inner = inner
        self.calls = 0

    def path(self, key) -> Path:
        stage, subtask, attempt = key
        return self.directory / f"{stage}_{subtask:02d}_{attempt:02d}.json"

    def complete(self, request, key):
        path = self.path(key)
        if path.exists():
            return json.loads(path.read_text())["response"]
        if self.inner is None:
            raise FixtureKeyMissing(f"no recorded response at {path}")
        self.calls += 1
        response = self.inner.complete(request, key)
        self.directory.mkdir(parents=True, exist_ok=True)
        record = {"key": list(key), "request": request.to_body(), "response": response}
        path.write_text(json.dumps(record, indent=1, sort_keys=True) + "\n")
        return response

    def close(self):
        if self.inner is not None:
            self.inner.close()


def parse_backend_spec(spec: str, model: str | None = None) -> Backend:
    """``live:<url>,<model>``, ``scripted:<fixture>`` or ``replay:<dir>[,<url>,<model>]``."""
    kind, _, rest = spec.partition(":")
    if kind == "scripted" and rest:
        return ScriptedBackend.from_file(rest)
    if kind == "live" and rest:
        url, _, live_model = rest.partition(",")
        return LiveBackend(url, live_model or model)
    if kind == "replay" and rest:
        directory, _, live = rest.partition(",")
        inner = None
        if live:
            url, _, live_model = live.partition(",")
            inner = LiveBackend(url, live_model or model)
        return ReplayBackend(directory, inner)
    raise ValueError(f"cannot parse backend spec {spec!r}")


class Gateway:
    """Serial dispatch of chat requests with per-``(stage, subtask)`` attempt counters."""

    def __init__(self, backend: Backend):
        self.backend = backend
        self.calls = 0
        self._lock = threading.Lock()
        self._attempts: dict[tuple[str, int], int] = {}

    def complete(self, request: ChatRequest, stage: str, subtask: int) -> str:
        with self._lock:
            attempt = self._attempts.get((stage, subtask), 0)
            self._attempts[(stage, subtask)] = attempt + 1
            self.calls += 1
            logger.info("llm call %s subtask %d attempt %d", stage, subtask, attempt)
            try:
                choices = self.backend.complete(request, (stage, subtask, attempt))
            except BackendError as exc:
                exc.args = (f"{stage} stage, subtask {subtask}: {exc}",)
                raise
            if not choices:
                raise TransportError(f"{stage} stage returned no choices")
            return choices[0]
