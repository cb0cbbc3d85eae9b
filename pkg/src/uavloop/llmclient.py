"""Chat-completion client: an OpenAI-compatible HTTP backend and a scripted one.

The scripted backend replays canned responses from a JSON file::

    {"entries": [
        {"agent": "generator", "content": "```\\ntakeoff(5)\\n```"},
        {"agent": "evaluator", "content": "VERDICT: YES"},
        {"agent": "generator", "task": "adv-03", "content": "..."}
    ]}

Entries are consumed in order per agent. Entries carrying a ``task`` key form
their own queue and are served only to requests tagged with that task id;
untagged requests (and tagged ones whose queue does not exist) use the shared
per-agent queue.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal, Protocol

import httpx

log = logging.getLogger(__name__)

Agent = Literal["generator", "evaluator"]


@dataclass(frozen=True)
class Turn:
    role: Literal["user", "assistant"]
    content: str


@dataclass(frozen=True)
class ChatRequest:
    system_prompt: str
    turns: tuple[Turn, ...]
    model: str = "o3-mini"
    temperature: float = 0.0
    max_output_tokens: int = 4096
    # routing metadata for the scripted backend; never sent over the wire
    agent: Agent = "generator"
    task_id: str | None = None

    def __post_init__(self) -> None:
        if not self.system_prompt:
            raise ValueError("system_prompt must be non-empty")
        if not self.turns:
            raise ValueError("request needs at least one turn")
        for i, turn in enumerate(self.turns):
            expected = "user" if i % 2 == 0 else "assistant"
            if turn.role != expected:
                raise ValueError(f"turn {i} has role {turn.role!r}, expected {expected!r}")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")

    def messages(self) -> list[dict[str, str]]:
        out = [{"role": "system", "content": self.system_prompt}]
        out.extend({"role": t.role, "content": t.content} for t in self.turns)
        return out


@dataclass(frozen=True)
class BackendConfig:
    kind: Literal["http", "scripted"] = "scripted"
    endpoint_url: str = "https://api.openai.com/v1"
    api_key_env_var: str = "OPENAI_API_KEY"
    timeout: float = 60.0
    max_retries: int = 3
    retry_backoff: float = 1.0
    script_path: str | None = None
    model: str = "o3-mini"
    temperature: float = 0.0
    max_output_tokens: int = 4096

    @classmethod
    def from_dict(cls, data: dict) -> "BackendConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown backend settings: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class Usage:
    prompt_tokens: int = 0
    completion_tokens: int = 0


@dataclass(frozen=True)
class Completion:
    content: str
    usage: Usage = field(default_factory=Usage)


class LlmError(Exception):
    pass


class Timeout(LlmError):
    pass


class HttpStatus(LlmError):
    def __init__(self, code: int, body_excerpt: str):
        super().__init__(f"HTTP {code}: {body_excerpt}")
        self.code = code
        self.body_excerpt = body_excerpt


class Exhausted(LlmError):
    pass


class MalformedResponse(LlmError):
    pass


class MissingApiKey(LlmError):
    pass


class ChatBackend(Protocol):
    def complete(self, request: ChatRequest) -> Completion: ...


class HttpBackend:
    def __init__(
        self,
        config: BackendConfig,
        *,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self._sleep = sleep
        self._client = httpx.Client(timeout=config.timeout, transport=transport)

    def _api_key(self) -> str:
        key = os.environ.get(self.config.api_key_env_var, "")
        if not key:
            raise MissingApiKey(f"environment variable {self.config.api_key_env_var} is not set")
        return key

    def complete(self, request: ChatRequest) -> Completion:
        key = self._api_key()
        url = self.config.endpoint_url.rstrip("/") + "/chat/completions"
        payload = {
            "model": request.model,
            "messages": request.messages(),
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}

        attempt = 0
        while True:
            log.debug("POST %s model=%s attempt=%d", url, request.model, attempt + 1)
            try:
                response = self._client.post(url, json=payload, headers=headers)
            except httpx.TimeoutException as exc:
                error: LlmError = Timeout(f"request to {url} timed out: {exc}")
            except httpx.TransportError as exc:
                error = LlmError(f"transport error talking to {url}: {exc}")
            else:
                if response.status_code == 200:
                    return _parse_completion(response)
                error = HttpStatus(response.status_code, response.text[:200])
                if response.status_code != 429 and response.status_code < 500:
                    raise error

            if attempt >= self.config.max_retries:
                raise error
            delay = self.config.retry_backoff * (2**attempt)
            log.warning("retrying after %s (%.2fs)", type(error).__name__, delay)
            self._sleep(delay)
            attempt += 1

    def close(self) -> None:
        self._client.close()


def _parse_completion(response: httpx.Response) -> Completion:
    try:
        body = response.json()
        content = body["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse(f"unexpected response body: {response.text[:200]}") from exc
    if not isinstance(content, str):
        raise MalformedResponse("message content is not text")
    usage = body.get("usage") or {}
    return Completion(
        content,
        Usage(int(usage.get("prompt_tokens", 0) or 0), int(usage.get("completion_tokens", 0) or 0)),
    )


@dataclass(frozen=True)
class ScriptEntry:
    agent: Agent
    content: str
    task: str | None = None


def load_script(path: str | os.PathLike) -> list[ScriptEntry]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict):
        data = data.get("entries")
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a list of entries")
    entries = []
    for i, item in enumerate(data):
        if not isinstance(item, dict) or item.get("agent") not in ("generator", "evaluator"):
            raise ValueError(f"{path}: entry {i} needs agent 'generator' or 'evaluator'")
        if not isinstance(item.get("content"), str):
            raise ValueError(f"{path}: entry {i} needs text content")
        entries.append(ScriptEntry(item["agent"], item["content"], item.get("task")))
    return entries


class ScriptedBackend:
    """Deterministic replay of canned responses, keyed by agent role and position."""

    def __init__(self, entries: list[ScriptEntry]):
        self._queues: dict[tuple[str, str | None], list[str]] = {}
        for e in entries:
            self._queues.setdefault((e.agent, e.task), []).append(e.content)
        self._cursor: dict[tuple[str, str | None], int] = {}
        self._lock = threading.Lock()
        self.requests: list[ChatRequest] = []

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "ScriptedBackend":
        return cls(load_script(path))

    def complete(self, request: ChatRequest) -> Completion:
        key = (request.agent, request.task_id)
        with self._lock:
            if key not in self._queues:
                key = (request.agent, None)
            queue = self._queues.get(key, [])
            pos = self._cursor.get(key, 0)
            if pos >= len(queue):
                raise Exhausted(f"scripted responses for {request.agent!r} exhausted after {pos}")
            self._cursor[key] = pos + 1
            self.requests.append(request)
        return Completion(queue[pos])


def make_backend(config: BackendConfig) -> ChatBackend:
    if config.kind == "http":
        return HttpBackend(config)
    if config.kind == "scripted":
        if not config.script_path:
            raise ValueError("scripted backend needs script_path")
        return ScriptedBackend.from_file(config.script_path)
    raise ValueError(f"unknown backend kind {config.kind!r}")


def complete(request: ChatRequest, backend: ChatBackend) -> Completion:
    return backend.complete(request)
