"""Chat-completion gateway, a fixture-replaying mock, and program extraction."""

from __future__ import annotations

import hashlib
import logging
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import httpx

from .program.lexer import CSyntaxError
from .program.parser import SourceProgram, parse

log = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant")


class GatewayError(RuntimeError):
    pass


class TransportError(GatewayError):
    pass


class ApiError(GatewayError):
    def __init__(self, status: int, body: str):
        super().__init__(f"API returned HTTP {status}: {body[:200]}")
        self.status = status
        self.body = body


class Timeout(GatewayError):
    pass


class MissingFixture(GatewayError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    endpoint: str = "https://api.openai.com/v1"
    model: str = "gpt-3.5-turbo"
    temperature: float = 1.0
    timeout: float = 60.0
    max_retries: int = 3
    max_tokens: int = 4096
    api_key_env: str = "OPENAI_API_KEY"
    backoff: float = 1.0

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class Message:
    role: str
    content: str


@dataclass
class Conversation:
    messages: list[Message] = field(default_factory=list)

    def _append(self, role: str, content: str) -> None:
        turns = [m for m in self.messages if m.role != "system"]
        expected = "user" if not turns or turns[-1].role == "assistant" else "assistant"
        if role == "system":
            if self.messages:
                raise ValueError("a system message may only lead the conversation")
        elif role != expected:
            raise ValueError(f"expected a {expected} message, got {role}")
        self.messages.append(Message(role, content))

    def system(self, content: str) -> "Conversation":
        self._append("system", content)
        return self

    def user(self, content: str) -> "Conversation":
        self._append("user", content)
        return self

    def assistant(self, content: str) -> "Conversation":
        self._append("assistant", content)
        return self

    def last_user(self) -> str:
        for m in reversed(self.messages):
            if m.role == "user":
                return m.content
        raise ValueError("conversation has no user message")

    def window(self, max_messages: int = 6) -> "Conversation":
        """Leading system message plus the most recent turns, starting on a user turn."""
        head = [m for m in self.messages[:1] if m.role == "system"]
        tail = self.messages[len(head):][-max_messages:]
        while tail and tail[0].role != "user":
            tail = tail[1:]
        return Conversation(head + tail)

    def to_payload(self) -> list[dict]:
        return [{"role": m.role, "content": m.content} for m in self.messages]


@dataclass(frozen=True)
class LlmReply:
    text: str
    prompt_tokens: int | None = None
    completion_tokens: int | None = None
    latency: float = 0.0


class Gateway(Protocol):
    def complete(self, conversation: Conversation, config: ModelConfig) -> LlmReply: ...


def prompt_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class HttpGateway:
    """OpenAI-compatible ``/chat/completions`` client.

    Network errors, timeouts, HTTP 429 and 5xx are retried with exponential
    backoff.  The whole call never runs past ``timeout * (max_retries + 1)``.
    """

    def __init__(self, client: httpx.Client | None = None, sleep=time.sleep, clock=time.monotonic):
        self._client = client or httpx.Client()
        self._sleep = sleep
        self._clock = clock

    def complete(self, conversation: Conversation, config: ModelConfig) -> LlmReply:
        if not conversation.messages:
            raise ValueError("conversation is empty")
        url = config.endpoint.rstrip("/") + "/chat/completions"
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(config.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": config.model,
            "messages": conversation.to_payload(),
            "temperature": config.temperature,
            "max_tokens": config.max_tokens,
        }
        start = self._clock()
        deadline = start + config.timeout * (config.max_retries + 1)
        last: GatewayError | None = None
        for attempt in range(config.max_retries + 1):
            remaining = deadline - self._clock()
            if remaining <= 0:
                break
            try:
                resp = self._client.post(url, json=body, headers=headers, timeout=min(config.timeout, remaining))
            except httpx.TimeoutException as exc:
                last = Timeout(f"request timed out: {exc}")
            except httpx.TransportError as exc:
                last = TransportError(f"could not reach {url}: {exc}")
            else:
                if resp.status_code == 200:
                    return self._reply(resp, self._clock() - start)
                last = ApiError(resp.status_code, resp.text)
                if resp.status_code != 429 and resp.status_code < 500:
                    raise last
            if attempt < config.max_retries:
                pause = min(config.backoff * 2**attempt, max(deadline - self._clock(), 0))
                log.info("LLM request failed (%s); retrying in %.1fs", last, pause)
                self._sleep(pause)
        raise last or Timeout("deadline reached before the request could be sent")

    @staticmethod
    def _reply(resp: httpx.Response, latency: float) -> LlmReply:
        try:
            data = resp.json()
            text = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ApiError(resp.status_code, resp.text) from exc
        usage = data.get("usage") or {}
        return LlmReply(text or "", usage.get("prompt_tokens"), usage.get("completion_tokens"), latency)


class MockGateway:
    """Replies read from ``<sha256 of last user message>.txt`` files.

    The k-th repeat of the same prompt (k >= 1) prefers ``<hash>.<k>.txt``.
    ``_default.txt`` answers any prompt without its own fixture.
    """

    def __init__(self, fixture_dir: str | Path):
        self.dir = Path(fixture_dir)
        if not self.dir.is_dir():
            raise MissingFixture(f"fixture directory {self.dir} does not exist")
        self.seen: dict[str, int] = {}
        self.calls: list[str] = []

    def complete(self, conversation: Conversation, config: ModelConfig | None = None) -> LlmReply:
        key = prompt_hash(conversation.last_user())
        n = self.seen.get(key, 0)
        self.seen[key] = n + 1
        self.calls.append(key)
        for name in ([f"{key}.{n}.txt"] if n else []) + [f"{key}.txt", "_default.txt"]:
            path = self.dir / name
            if path.is_file():
                return LlmReply(path.read_text("utf-8"))
        raise MissingFixture(f"no fixture for prompt {key}")


# --- extraction ---------------------------------------------------------------------

_FENCE_RE = re.compile(r"```[^\n`]*\n(.*?)```", re.S)
_MAX_REGION_STARTS = 80


def _try_parse(text: str) -> bool:
    try:
        parse(text)
    except (CSyntaxError, RecursionError):
        return False
    return True


def _program(text: str) -> SourceProgram:
    return SourceProgram(prompt_hash(text)[:12], text)


def extract_program(reply: LlmReply | str) -> SourceProgram | None:
    """First fenced block if any, else the longest run of lines that parses."""
    text = reply.text if isinstance(reply, LlmReply) else reply
    fence = _FENCE_RE.search(text)
    if fence is not None:
        code = fence.group(1)
        return _program(code) if code.strip() and _try_parse(code) else None
    lines = text.splitlines(keepends=True)
    starts = [i for i, ln in enumerate(lines) if ln.strip() and not ln[0].isspace()][:_MAX_REGION_STARTS]
    ends = [j + 1 for j, ln in enumerate(lines) if ln.rstrip().endswith(("}", ";"))]
    regions = sorted(((i, j) for i in starts for j in ends if j > i), key=lambda r: (r[0] - r[1], r[0]))
    for i, j in regions:
        code = "".join(lines[i:j])
        if _try_parse(code):
            return _program(code)
    return None


__all__ = [
    "ApiError",
    "Conversation",
    "Gateway",
    "GatewayError",
    "HttpGateway",
    "LlmReply",
    "Message",
    "MissingFixture",
    "MockGateway",
    "ModelConfig",
    "Timeout",
    "TransportError",
    "extract_program",
    "prompt_hash",
]
