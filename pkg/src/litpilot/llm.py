"""Completion-backend abstraction: prompt templates, a deterministic
scripted mock, and a remote chat-completions HTTP backend."""
from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import requests

from .errors import (
    BackendRejected,
    BackendTimeout,
    MissingSlot,
    TransportFailure,
    UnknownSlot,
)

# ---------------------------------------------------------------------------
# chat types
# ---------------------------------------------------------------------------

_ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in _ROLES:
            raise ValueError(f"bad role: {self.role}")
        if self.role in ("user", "assistant") and not self.content:
            raise ValueError(f"{self.role} message must be nonempty")


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0
    max_tokens: int = 1024
    stream: bool = False

    def __post_init__(self):
        if isinstance(self.messages, list):
            object.__setattr__(self, "messages", tuple(self.messages))
        if not self.messages:
            raise ValueError("messages must be nonempty")
        if self.messages[0].role not in ("system", "user"):
            raise ValueError("first message must be system or user")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be > 0")

    def prompt_text(self) -> str:
        return "\n".join(m.content for m in self.messages)


@dataclass(frozen=True)
class CompletionResult:
    content: str
    finish: str  # stop | length | error
    tokens_in: int
    tokens_out: int


# ---------------------------------------------------------------------------
# templates
# ---------------------------------------------------------------------------

_PLACEHOLDER_RE = re.compile(r"\{(\w+)\}")


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str
    exemplars: tuple[tuple[str, str], ...] = ()

    @property
    def slots(self) -> set[str]:
        return set(_PLACEHOLDER_RE.findall(self.body))


def render(template: PromptTemplate, slots: dict[str, str]) -> str:
    """Serialize exemplars then substitute every placeholder verbatim."""
    needed = template.slots
    for name in slots:
        if name not in needed:
            raise UnknownSlot(name)
    for name in needed:
        if name not in slots:
            raise MissingSlot(name)

    parts = []
    for inp, out in template.exemplars:
        parts.append(f"Example input: {inp}\nExample output: {out}")
    body = _PLACEHOLDER_RE.sub(lambda m: slots[m.group(1)], template.body)
    parts.append(body)
    return "\n\n".join(parts)


_ASSET_DIR = resources.files("litpilot") / "prompts"
_template_cache: dict[str, PromptTemplate] = {}


def get_template(name: str) -> PromptTemplate:
    """Load a named template from the prompt-assets directory."""
    cached = _template_cache.get(name)
    if cached is not None:
        return cached
    body = (_ASSET_DIR / f"{name}.txt").read_text(encoding="utf-8")
    exemplars: tuple[tuple[str, str], ...] = ()
    ex_path = _ASSET_DIR / f"{name}.exemplars.json"
    try:
        raw = ex_path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raw = ""
    if raw:
        exemplars = tuple((e["input"], e["output"]) for e in json.loads(raw))
    template = PromptTemplate(name=name, body=body, exemplars=exemplars)
    _template_cache[name] = template
    return template


# ---------------------------------------------------------------------------
# scripted mock backend
# ---------------------------------------------------------------------------

_MATCH_KINDS = ("exact", "contains", "regex")


@dataclass(frozen=True)
class MockRule:
    match: str
    pattern: str
    response: str

    def __post_init__(self):
        if self.match not in _MATCH_KINDS:
            raise ValueError(f"bad match kind: {self.match}")
        if self.match == "regex":
            re.compile(self.pattern)  # validate eagerly

    def matches(self, prompt: str) -> bool:
        if self.match == "exact":
            return prompt == self.pattern
        if self.match == "contains":
            return self.pattern in prompt
        return re.search(self.pattern, prompt) is not None

    def is_catch_all(self) -> bool:
        return self.match == "contains" and self.pattern == ""


class MockBackend:
    """Deterministic scripted backend: first matching rule wins. The rule
    list must end with a catch-all (contains "")."""

    def __init__(self, rules: list[MockRule]):
        if not rules or not rules[-1].is_catch_all():
            raise ValueError("rule list must end with a catch-all rule")
        self.rules = list(rules)
        self.transcript: list[tuple[str, str]] = []
        self._lock = threading.Lock()

    @classmethod
    def from_rules_file(cls, path: str | Path) -> "MockBackend":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls([MockRule(**r) for r in data])

    def _respond(self, prompt: str) -> str:
        for rule in self.rules:
            if rule.matches(prompt):
                return rule.response
        raise AssertionError("unreachable: catch-all rule is mandatory")

    def complete(self, request: ChatRequest) -> CompletionResult:
        prompt = request.prompt_text()
        content = self._respond(prompt)
        with self._lock:
            self.transcript.append((prompt, content))
        return CompletionResult(
            content=content,
            finish="stop",
            tokens_in=len(prompt.split()),
            tokens_out=len(content.split()),
        )

    def stream(self, request: ChatRequest):
        content = self.complete(request).content
        for i in range(0, len(content), 16):
            yield content[i:i + 16]


# ---------------------------------------------------------------------------
# remote HTTP backend
# ---------------------------------------------------------------------------


class HttpBackend:
    """Chat-completions wire client: POST {base_url}/chat/completions with
    bearer auth from LITPILOT_API_KEY; one retry on transport failure."""

    def __init__(self, base_url: str, model: str = "litpilot",
                 timeout: float = 30.0, session: requests.Session | None = None):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.timeout = timeout
        self._session = session or requests.Session()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get("LITPILOT_API_KEY")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _body(self, request: ChatRequest, stream: bool) -> dict:
        return {
            "model": self.model,
            "messages": [{"role": m.role, "content": m.content}
                         for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "stream": stream,
        }

    def _post(self, request: ChatRequest, stream: bool) -> requests.Response:
        url = f"{self.base_url}/chat/completions"
        last_exc: Exception | None = None
        for _ in range(2):  # one retry on transport failure
            try:
                return self._session.post(
                    url, json=self._body(request, stream),
                    headers=self._headers(), timeout=self.timeout,
                    stream=stream,
                )
            except requests.Timeout as exc:
                last_exc = BackendTimeout(str(exc))
            except requests.RequestException as exc:
                last_exc = TransportFailure(str(exc))
        raise last_exc

    def complete(self, request: ChatRequest) -> CompletionResult:
        resp = self._post(request, stream=False)
        if resp.status_code // 100 != 2:
            raise BackendRejected(resp.status_code, resp.text)
        data = resp.json()
        choice = data["choices"][0]
        content = choice["message"]["content"]
        finish = choice.get("finish_reason") or "stop"
        if finish not in ("stop", "length"):
            finish = "error"
        usage = data.get("usage", {})
        prompt = request.prompt_text()
        return CompletionResult(
            content=content,
            finish=finish,
            tokens_in=usage.get("prompt_tokens", len(prompt.split())),
            tokens_out=usage.get("completion_tokens", len(content.split())),
        )

    def stream(self, request: ChatRequest):
        resp = self._post(request, stream=True)
        if resp.status_code // 100 != 2:
            raise BackendRejected(resp.status_code, resp.text)
        for line in resp.iter_lines(decode_unicode=True):
            if not line or not line.startswith("data:"):
                continue
            payload = line[len("data:"):].strip()
            if payload == "[DONE]":
                break
            delta = json.loads(payload)["choices"][0].get("delta", {})
            piece = delta.get("content")
            if piece:
                yield piece


def make_backend(kind: str, *, base_url: str | None = None,
                 rules_path: str | Path | None = None, timeout: float = 30.0):
    if kind == "mock":
        if rules_path is None:
            raise ValueError("mock backend requires a rules file")
        return MockBackend.from_rules_file(rules_path)
    if kind == "http":
        if base_url is None:
            raise ValueError("http backend requires base_url")
        return HttpBackend(base_url, timeout=timeout)
    raise ValueError(f"unknown backend kind: {kind}")
