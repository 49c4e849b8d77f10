"""Chat-completion clients: an OpenAI-compatible HTTP client and a scripted mock.

Both expose ``complete(request) -> ChatResponse``. The mock answers from a
line-delimited JSON script so the whole pipeline can run offline and
deterministically.
"""

from __future__ import annotations

import json
import logging
import os
import random
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal, Protocol, Sequence
from urllib.parse import urlparse

import httpx

from .errors import (
    AuthMissing,
    BadStatus,
    EmptyCompletion,
    InvalidRequest,
    ScriptExhausted,
    ScriptParse,
    TransportFailure,
)

logger = logging.getLogger(__name__)

Role = Literal["system", "user", "assistant"]
_ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    content: str

    def __post_init__(self):
        if self.role not in _ROLES:
            raise InvalidRequest(f"unknown message role {self.role!r}")


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.3
    max_tokens: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(self.messages))
        if not self.messages:
            raise InvalidRequest("a chat request needs at least one message")
        if self.messages[-1].role != "user":
            raise InvalidRequest("the last message of a chat request must come from the user")
        if self.temperature < 0:
            raise InvalidRequest("temperature must be >= 0")
        if self.max_tokens is not None and self.max_tokens <= 0:
            raise InvalidRequest("max_tokens must be positive")

    @classmethod
    def single(cls, model: str, prompt: str, temperature: float = 0.3,
               max_tokens: int | None = None) -> "ChatRequest":
        return cls(model, (ChatMessage("user", prompt),), temperature, max_tokens)

    @property
    def final_user_message(self) -> str:
        return self.messages[-1].content

    def to_payload(self) -> dict:
        body = {
            "model": self.model,
            "messages": [{"role": m.role, "content": m.content} for m in self.messages],
            "temperature": self.temperature,
        }
        if self.max_tokens is not None:
            body["max_tokens"] = self.max_tokens
        return body


@dataclass(frozen=True)
class Usage:
    prompt_tokens: int = 0
    completion_tokens: int = 0

    @property
    def total(self) -> int:
        return self.prompt_tokens + self.completion_tokens


@dataclass(frozen=True)
class ChatResponse:
    content: str
    finish_reason: Literal["stop", "length", "error"] = "stop"
    usage: Usage = field(default_factory=Usage)
    # transient failures retried before this response arrived
    retries: int = 0


@dataclass(frozen=True)
class ProviderProfile:
    """Connection settings for one endpoint; the API key itself never lives here."""

    name: str
    base_url: str
    model: str
    credential_env: str
    timeout_s: float = 120.0
    max_retries: int = 3

    def __post_init__(self):
        parsed = urlparse(self.base_url)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise ValueError(f"profile {self.name!r}: malformed base_url {self.base_url!r}")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    @classmethod
    def from_dict(cls, name: str, data: dict) -> "ProviderProfile":
        if "api_key" in data:
            raise ValueError(
                f"profile {name!r}: store the key in an environment variable, not the config"
            )
        return cls(
            name=name,
            base_url=data["base_url"],
            model=data["model"],
            credential_env=data["credential_env"],
            timeout_s=float(data.get("timeout_s", 120.0)),
            max_retries=int(data.get("max_retries", 3)),
        )

    def to_dict(self) -> dict:
        return {
            "base_url": self.base_url,
            "model": self.model,
            "credential_env": self.credential_env,
            "timeout_s": self.timeout_s,
            "max_retries": self.max_retries,
        }


BUILTIN_PROFILES = {
    "openai": ProviderProfile(
        "openai", "https://api.openai.com/v1", "gpt-4-turbo-2024-04-09", "OPENAI_API_KEY"
    ),
    "deepseek": ProviderProfile(
        "deepseek", "https://api.deepseek.com", "deepseek-chat", "DEEPSEEK_API_KEY"
    ),
}


class ChatProvider(Protocol):
    model: str

    def complete(self, request: ChatRequest) -> ChatResponse: ...


_FINISH_REASONS = {"stop": "stop", "length": "length"}


class HTTPProvider:
    """OpenAI-compatible ``POST {base_url}/chat/completions`` client.

    Transport errors and 5xx responses are retried up to ``max_retries`` times
    with exponential backoff (1 s initial, doubling, full jitter); 4xx
    responses fail immediately.
    """

    def __init__(
        self,
        profile: ProviderProfile,
        *,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
        jitter: random.Random | None = None,
        environ=None,
    ):
        self.profile = profile
        self.model = profile.model
        self._client = client or httpx.Client(timeout=profile.timeout_s)
        self._sleep = sleep
        self._jitter = jitter or random.Random()
        self._environ = os.environ if environ is None else environ

    def _backoff(self, attempt: int) -> float:
        return self._jitter.uniform(0.0, 1.0 * 2**attempt)

    def complete(self, request: ChatRequest) -> ChatResponse:
        key = self._environ.get(self.profile.credential_env)
        if not key:
            raise AuthMissing(self.profile.credential_env)
        url = self.profile.base_url.rstrip("/") + "/chat/completions"
        headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}
        payload = request.to_payload()

        retries = 0
        while True:
            try:
                resp = self._client.post(
                    url, json=payload, headers=headers, timeout=self.profile.timeout_s
                )
            except httpx.TransportError as exc:
                if retries >= self.profile.max_retries:
                    raise TransportFailure(str(exc) or type(exc).__name__, retries + 1) from exc
                logger.warning("transport error (%s), retrying", exc)
            else:
                if resp.status_code < 400:
                    return self._parse(resp, retries)
                if resp.status_code < 500 or retries >= self.profile.max_retries:
                    raise BadStatus(resp.status_code, resp.text)
                logger.warning("HTTP %s from %s, retrying", resp.status_code, url)
            self._sleep(self._backoff(retries))
            retries += 1

    @staticmethod
    def _parse(resp: httpx.Response, retries: int) -> ChatResponse:
        try:
            body = resp.json()
            choice = body["choices"][0]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise EmptyCompletion(f"response carries no choices: {exc}") from exc
        content = (choice.get("message") or {}).get("content")
        finish = _FINISH_REASONS.get(choice.get("finish_reason") or "stop", "error")
        if not content:
            raise EmptyCompletion("first choice has no content")
        usage = body.get("usage") or {}
        return ChatResponse(
            content=content,
            finish_reason=finish,
            usage=Usage(
                int(usage.get("prompt_tokens", 0) or 0),
                int(usage.get("completion_tokens", 0) or 0),
            ),
            retries=retries,
        )


@dataclass
class ScriptRecord:
    response: str
    match: re.Pattern | None = None
    line: int = 0


class MockProvider:
    """Scripted provider used by tests, demos and parameter sweeps.

    Each call consumes the first unconsumed record whose ``match`` regex
    matches the final user message; failing that, the first unconsumed record
    without a ``match``.
    """

    def __init__(self, records: Sequence[ScriptRecord], model: str = "mock"):
        self.model = model
        self._records = list(records)
        self._used = [False] * len(self._records)
        self._lock = threading.Lock()
        self.calls: list[ChatRequest] = []

    @classmethod
    def from_responses(cls, responses: Sequence[str], model: str = "mock") -> "MockProvider":
        return cls([ScriptRecord(r, None, i + 1) for i, r in enumerate(responses)], model)

    @property
    def remaining(self) -> int:
        return self._used.count(False)

    def _pick(self, prompt: str) -> int:
        fallback = None
        for i, rec in enumerate(self._records):
            if self._used[i]:
                continue
            if rec.match is None:
                if fallback is None:
                    fallback = i
            elif rec.match.search(prompt):
                return i
        if fallback is None:
            raise ScriptExhausted(
                f"no script record left for call #{len(self.calls)} "
                f"({self.remaining} record(s) unconsumed, none applicable)"
            )
        return fallback

    def complete(self, request: ChatRequest) -> ChatResponse:
        prompt = request.final_user_message
        with self._lock:
            self.calls.append(request)
            i = self._pick(prompt)
            self._used[i] = True
            content = self._records[i].response
        return ChatResponse(
            content=content,
            finish_reason="stop",
            usage=Usage(len(prompt.split()), len(content.split())),
        )


def parse_mock_script(text: str) -> list[ScriptRecord]:
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScriptParse(lineno, f"invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict) or not isinstance(obj.get("response"), str):
            raise ScriptParse(lineno, 'expected an object with a string "response"')
        pattern = obj.get("match")
        if pattern is not None:
            if not isinstance(pattern, str):
                raise ScriptParse(lineno, '"match" must be a string')
            try:
                pattern = re.compile(pattern)
            except re.error as exc:
                raise ScriptParse(lineno, f"bad regex: {exc}") from exc
        records.append(ScriptRecord(obj["response"], pattern, lineno))
    return records


def load_mock_script(path: str | os.PathLike, model: str = "mock") -> MockProvider:
    text = Path(path).read_text(encoding="utf-8")
    return MockProvider(parse_mock_script(text), model=model)


def build_provider(profile: ProviderProfile, **kwargs) -> HTTPProvider:
    return HTTPProvider(profile, **kwargs)


def complete(profile: ProviderProfile | MockProvider, request: ChatRequest) -> ChatResponse:
    """One-shot completion against a profile (HTTP) or an existing mock."""
    if isinstance(profile, MockProvider):
        return profile.complete(request)
    return HTTPProvider(profile).complete(request)
