"""Text-generation backends: an OpenAI-style HTTP client and a scripted stand-in."""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import httpx

logger = logging.getLogger(__name__)

API_KEY_ENV = "PRACT_API_KEY"


class BackendError(RuntimeError):
    def __init__(self, message: str, attempts: int = 1, status: int | None = None):
        super().__init__(message)
        self.attempts = attempts
        self.status = status


class NoScriptMatch(BackendError):
    def __init__(self, prompt: str):
        super().__init__(f"no script rule matches prompt:\n{prompt}")
        self.prompt = prompt


@dataclass(frozen=True)
class ChatMessage:
    role: str  # "system" | "user" | "assistant"
    content: str

    def __post_init__(self) -> None:
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"bad role {self.role!r}")
        if self.role != "assistant" and not self.content:
            raise ValueError(f"{self.role} message must have content")


@dataclass(frozen=True)
class BackendConfig:
    kind: str  # "http" | "scripted"
    endpoint_url: str | None = None
    model_name: str | None = None
    temperature: float = 0.0
    max_output_tokens: int = 512
    script_path: str | None = None
    max_retries: int = 3
    backoff_seconds: float = 0.5
    timeout_seconds: float = 60.0

    def __post_init__(self) -> None:
        if self.kind == "http" and not (self.endpoint_url and self.model_name):
            raise ValueError("http backend needs endpoint_url and model_name")
        if self.kind == "scripted" and not self.script_path:
            raise ValueError("scripted backend needs script_path")
        if self.kind not in ("http", "scripted"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.temperature < 0 or self.max_output_tokens < 1:
            raise ValueError("temperature must be >= 0 and max_output_tokens >= 1")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> BackendConfig:
        return cls(**d)


@dataclass(frozen=True)
class ScriptRule:
    """First rule whose ``match`` occurs in the prompt answers it.

    With ``regex`` set, ``match`` is searched as a DOTALL pattern and
    ``response`` may use group references (``\\1``, ``\\g<name>``).
    """

    match: str
    response: str
    max_uses: int | None = None
    regex: bool = False

    def __post_init__(self) -> None:
        if self.max_uses is not None and self.max_uses < 1:
            raise ValueError("max_uses must be positive")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"match": self.match, "response": self.response}
        if self.max_uses is not None:
            out["max_uses"] = self.max_uses
        if self.regex:
            out["regex"] = True
        return out


def render_prompt_text(messages: Sequence[ChatMessage]) -> str:
    return "\n\n".join(m.content for m in messages)


class Backend:
    """Base class: counts calls; subclasses implement ``_complete``."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._calls = 0

    @property
    def call_count(self) -> int:
        return self._calls

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        if not messages:
            raise ValueError("messages must be non-empty")
        with self._lock:
            self._calls += 1
        return self._complete(tuple(messages))

    def _complete(self, messages: tuple[ChatMessage, ...]) -> str:
        raise NotImplementedError


class ScriptedBackend(Backend):
    def __init__(self, rules: Sequence[ScriptRule]):
        super().__init__()
        self.rules = tuple(rules)
        self._uses = [0] * len(self.rules)
        self.prompts: list[str] = []

    @classmethod
    def from_file(cls, path: str | Path) -> ScriptedBackend:
        return cls(load_script(path))

    def _complete(self, messages: tuple[ChatMessage, ...]) -> str:
        prompt = render_prompt_text(messages)
        with self._lock:
            self.prompts.append(prompt)
            for i, rule in enumerate(self.rules):
                if rule.max_uses is not None and self._uses[i] >= rule.max_uses:
                    continue
                if rule.regex:
                    m = re.search(rule.match, prompt, re.DOTALL)
                    if m is None:
                        continue
                    response = m.expand(rule.response)
                elif rule.match in prompt:
                    response = rule.response
                else:
                    continue
                self._uses[i] += 1
                return response
        raise NoScriptMatch(prompt)


class HttpBackend(Backend):
    """Chat-completion client: messages array in, first choice text out."""

    def __init__(self, cfg: BackendConfig, api_key: str | None = None, transport: httpx.BaseTransport | None = None):
        super().__init__()
        self.cfg = cfg
        key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        self._client = httpx.Client(headers=headers, timeout=cfg.timeout_seconds, transport=transport)

    def close(self) -> None:
        self._client.close()

    def _complete(self, messages: tuple[ChatMessage, ...]) -> str:
        payload = {
            "model": self.cfg.model_name,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_output_tokens,
        }
        attempts = 0
        while True:
            attempts += 1
            try:
                resp = self._client.post(self.cfg.endpoint_url, json=payload)
            except httpx.TransportError as exc:
                err = BackendError(f"network failure: {exc}", attempts)
            else:
                if resp.status_code < 300:
                    try:
                        return _extract_text(resp, attempts)
                    except BackendError as exc:
                        err = exc
                else:
                    err = BackendError(f"HTTP {resp.status_code}: {resp.text[:200]}", attempts, resp.status_code)
                    if 400 <= resp.status_code < 500 and resp.status_code != 429:
                        raise err
            if attempts > self.cfg.max_retries:
                raise err
            delay = self.cfg.backoff_seconds * 2 ** (attempts - 1)
            logger.warning("backend call failed (%s); retry %d in %.2fs", err, attempts, delay)
            time.sleep(delay)


def _extract_text(resp: httpx.Response, attempts: int) -> str:
    try:
        content = resp.json()["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise BackendError(f"malformed response body: {exc!r}", attempts, resp.status_code) from exc
    if not isinstance(content, str):
        raise BackendError("malformed response body: content is not text", attempts, resp.status_code)
    return content


def load_script(path: str | Path) -> list[ScriptRule]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return [ScriptRule(**r) for r in data]


def save_script(rules: Sequence[ScriptRule], path: str | Path) -> None:
    Path(path).write_text(json.dumps([r.to_dict() for r in rules], indent=2) + "\n", encoding="utf-8")


def make_backend(cfg: BackendConfig, base_dir: str | Path | None = None) -> Backend:
    if cfg.kind == "scripted":
        path = Path(cfg.script_path)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return ScriptedBackend.from_file(path)
    return HttpBackend(cfg)


@dataclass
class RoleBackends:
    """One backend per role, so call counts and scripts stay separate."""

    executor: Backend
    reflector: Backend
    optimizer: Backend
