"""Generation backends, prompt rendering and answer extraction.

Two kinds of backend share one interface:

- :class:`RemoteBackend` talks to an OpenAI-style chat-completions endpoint.
- :class:`MockBackend` replays a :class:`MockScript` (or a Python responder)
  so that whole pipelines run offline and bit-reproducibly.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Callable, Optional, Sequence

import httpx

from .errors import ConfigError, InputError

log = logging.getLogger(__name__)

DEFAULT_TEMPERATURE = 0.7
DEFAULT_MAX_TOKENS = 4096
LONG_TRAJECTORY_MAX_TOKENS = 32768
API_KEY_ENV = "SKILLROUTE_API_KEY"

PROMPT_KINDS = ("keyword", "cot_mc", "cot_math", "aggregate", "discuss")
MULTIPLE_CHOICE = "multiple_choice"
NUMERIC = "numeric"
ANSWER_KINDS = (MULTIPLE_CHOICE, NUMERIC)

_PLACEHOLDERS = {
    "keyword": ("question",),
    "cot_mc": ("question",),
    "cot_math": ("question",),
    "aggregate": ("responses", "question", "answer_instruction"),
    "discuss": ("responses", "question", "answer_instruction"),
}


# --------------------------------------------------------------------------
# prompts
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    return resources.files("skillroute").joinpath("prompts", f"{name}.txt").read_text("utf-8")


def answer_instruction(answer_kind: str) -> str:
    if answer_kind == MULTIPLE_CHOICE:
        return load_template("instruction_mc")
    if answer_kind == NUMERIC:
        return load_template("instruction_math")
    raise InputError(f"unknown answer kind {answer_kind!r}")


def cot_kind(answer_kind: str) -> str:
    """Prompt kind for zero-shot CoT on a question of the given answer kind."""
    return {MULTIPLE_CHOICE: "cot_mc", NUMERIC: "cot_math"}[answer_kind]


def render_prompt(kind: str, fields: dict) -> str:
    """Fill the template for ``kind``.

    For ``aggregate`` and ``discuss``, ``fields["responses"]`` may be a list of
    response texts; they are joined by blank lines in the given order.  The
    trailing answer instruction is derived from ``fields["answer_kind"]``
    (default multiple choice) unless ``answer_instruction`` is given.
    """
    if kind not in _PLACEHOLDERS:
        raise InputError(f"unknown prompt kind {kind!r}")
    values = dict(fields)
    if kind in ("aggregate", "discuss"):
        if "answer_instruction" not in values:
            values["answer_instruction"] = answer_instruction(values.get("answer_kind", MULTIPLE_CHOICE))
        responses = values.get("responses")
        if isinstance(responses, (list, tuple)):
            if not responses:
                raise InputError(f"prompt kind {kind!r} needs at least one response")
            values["responses"] = "\n\n".join(responses)
    for name in _PLACEHOLDERS[kind]:
        if name not in values:
            raise InputError(f"missing placeholder {name!r} for prompt kind {kind!r}")

    names = "|".join(_PLACEHOLDERS[kind])
    # single pass so substituted text is never re-scanned for placeholders
    return re.sub(r"\{(%s)\}" % names, lambda m: str(values[m.group(1)]), load_template(kind))


# --------------------------------------------------------------------------
# answer extraction
# --------------------------------------------------------------------------

_ANSWER_IS = r"(?i:the\s+(?:final\s+)?answer\s+is)\s*[:\-]?\s*\**\s*"
_MC_PAREN = re.compile(_ANSWER_IS + r"\(([A-Z])\)")
_MC_BARE = re.compile(_ANSWER_IS + r"([A-Z])(?![A-Za-z0-9])")
_BOXED = re.compile(r"\\+boxed\s*\{")
_ANSWER_TOKEN = re.compile(_ANSWER_IS + r"(\S+)")


def normalize_numeric(text: str) -> str:
    """Canonical form used to compare numeric answers."""
    s = re.sub(r"\s+", "", text)
    while len(s) >= 2 and s[0] == "{" and s[-1] == "}" and _balanced(s[1:-1]):
        s = s[1:-1]
    s = s.strip("$")
    return re.sub(r"^([-+]?)0+(?=\d)", r"\1", s)


def _balanced(s: str) -> bool:
    depth = 0
    for ch in s:
        depth += ch == "{"
        depth -= ch == "}"
        if depth < 0:
            return False
    return depth == 0


def _last_boxed(text: str) -> Optional[str]:
    starts = [m.end() for m in _BOXED.finditer(text)]
    for start in reversed(starts):
        depth = 1
        for i in range(start, len(text)):
            if text[i] == "{":
                depth += 1
            elif text[i] == "}":
                depth -= 1
                if depth == 0:
                    return text[start:i]
    return None


def extract_answer(text: str, kind: str) -> Optional[str]:
    """Final answer in a CoT completion, or ``None`` on an extraction miss.

    The last match wins, since models often restate candidate answers while
    reasoning.
    """
    if not text:
        return None
    if kind == MULTIPLE_CHOICE:
        for pattern in (_MC_PAREN, _MC_BARE):
            found = pattern.findall(text)
            if found:
                return found[-1]
        return None
    if kind == NUMERIC:
        boxed = _last_boxed(text)
        if boxed is not None:
            value = normalize_numeric(boxed)
            return value or None
        found = _ANSWER_TOKEN.findall(text)
        if found:
            value = normalize_numeric(found[-1].rstrip(".,;:!)").lstrip("("))
            return value or None
        return None
    raise InputError(f"unknown answer kind {kind!r}")


def answers_match(extracted: Optional[str], gold: Optional[str], kind: str) -> bool:
    if extracted is None or gold is None:
        return False
    if kind == MULTIPLE_CHOICE:
        return extracted.strip().upper() == gold.strip().upper()
    return normalize_numeric(extracted) == normalize_numeric(gold)


# --------------------------------------------------------------------------
# backends
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BackendConfig:
    model_id: str
    endpoint: str
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS
    retry_limit: int = 3
    in_flight_limit: int = 8
    backoff_base: float = 0.5
    api_key_env: str = API_KEY_ENV
    model_name: Optional[str] = None  # name sent on the wire, defaults to model_id

    def __post_init__(self):
        if not self.model_id:
            raise ConfigError("backend model_id must be non-empty")
        if self.temperature < 0:
            raise ConfigError(f"{self.model_id}: temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ConfigError(f"{self.model_id}: max_tokens must be > 0")
        if self.retry_limit < 0 or self.in_flight_limit < 1:
            raise ConfigError(f"{self.model_id}: retry_limit >= 0 and in_flight_limit >= 1 required")

    @property
    def is_mock(self) -> bool:
        return self.endpoint.startswith("mock:")

    @classmethod
    def from_dict(cls, data: dict) -> "BackendConfig":
        data = dict(data)
        long_trajectory = data.pop("long_trajectory", False)
        if long_trajectory and "max_tokens" not in data:
            data["max_tokens"] = LONG_TRAJECTORY_MAX_TOKENS
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown backend fields: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


@dataclass(frozen=True)
class GenerationResult:
    text: str
    finish_reason: str  # "stop" | "length" | "error"
    prompt_tokens: int = 0
    completion_tokens: int = 0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.finish_reason != "error"

    @classmethod
    def failure(cls, error: str) -> "GenerationResult":
        return cls(text="", finish_reason="error", error=error)


class TransportError(Exception):
    """A single generation attempt failed; the call may be retried."""


def count_tokens(text: str) -> int:
    return len(text.split())


class Backend:
    """Base class: retry with exponential backoff and an in-flight limit."""

    def __init__(self, config: BackendConfig, sleep: Callable[[float], None] = time.sleep):
        self.config = config
        self._gate = threading.BoundedSemaphore(config.in_flight_limit)
        self._sleep = sleep
        self._stats_lock = threading.Lock()
        self.calls = 0
        self.attempts = 0

    @property
    def model_id(self) -> str:
        return self.config.model_id

    def _attempt(self, prompt: str) -> GenerationResult:
        raise NotImplementedError

    def generate(self, prompt: str) -> GenerationResult:
        with self._stats_lock:
            self.calls += 1
        last_error = "no attempt made"
        for attempt in range(self.config.retry_limit + 1):
            if attempt:
                self._sleep(self.config.backoff_base * 2 ** (attempt - 1))
            with self._stats_lock:
                self.attempts += 1
            try:
                with self._gate:
                    return self._attempt(prompt)
            except TransportError as exc:
                last_error = str(exc)
                log.warning("%s: attempt %d failed: %s", self.model_id, attempt + 1, exc)
        return GenerationResult.failure(last_error)

    def generate_many(self, prompts: Sequence[str]) -> list[GenerationResult]:
        """Generate for a batch of prompts; results are in prompt order."""
        if len(prompts) <= 1 or self.config.in_flight_limit == 1:
            return [self.generate(p) for p in prompts]
        with ThreadPoolExecutor(max_workers=self.config.in_flight_limit) as pool:
            return list(pool.map(self.generate, prompts))


class RemoteBackend(Backend):
    def __init__(self, config: BackendConfig, client: Optional[httpx.Client] = None, **kwargs):
        super().__init__(config, **kwargs)
        self._client = client or httpx.Client(timeout=httpx.Timeout(600.0, connect=10.0))

    def payload(self, prompt: str) -> dict:
        return {
            "model": self.config.model_name or self.config.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        }

    def _attempt(self, prompt: str) -> GenerationResult:
        headers = {}
        key = os.environ.get(self.config.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            resp = self._client.post(self.config.endpoint, json=self.payload(prompt), headers=headers)
            resp.raise_for_status()
            body = resp.json()
            choice = body["choices"][0]
            text = choice["message"]["content"]
            if not isinstance(text, str):
                raise TypeError("message content is not a string")
        except (httpx.HTTPError, ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"{type(exc).__name__}: {exc}") from exc
        usage = body.get("usage") or {}
        return GenerationResult(
            text=text,
            finish_reason="length" if choice.get("finish_reason") == "length" else "stop",
            prompt_tokens=int(usage.get("prompt_tokens", count_tokens(prompt))),
            completion_tokens=int(usage.get("completion_tokens", count_tokens(text))),
        )


def fingerprint(model_id: str, prompt: str) -> str:
    return hashlib.sha256(f"{model_id}\x00{prompt}".encode("utf-8")).hexdigest()[:16]


@dataclass
class MockScript:
    """Scripted responses for :class:`MockBackend`.

    ``mode`` selects how ``entries`` is read:

    ordinal
        ``{model_id: [text, ...]}``; the n-th call of a model gets entry
        ``n % len``.  Key ``"*"`` applies to models without their own list.
    exact
        ``{fingerprint(model_id, prompt): text}``; a miss is an error unless
        ``rules`` or ``default`` cover it.

    ``rules`` is a list of ``{"contains": str, "response": str}`` objects
    (optionally restricted by ``"model"``), tried in order after ``entries``.
    A ``null`` response, or ``{"error": msg}``, simulates a transport error.
    """

    mode: str = "ordinal"
    entries: dict = field(default_factory=dict)
    rules: list = field(default_factory=list)
    default: object = None
    has_default: bool = False

    def __post_init__(self):
        if self.mode not in ("ordinal", "exact"):
            raise ConfigError(f"unknown mock script mode {self.mode!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "MockScript":
        return cls(
            mode=data.get("mode", "ordinal"),
            entries=data.get("entries", {}),
            rules=data.get("rules", []),
            default=data.get("default"),
            has_default="default" in data,
        )

    @classmethod
    def from_file(cls, path) -> "MockScript":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except FileNotFoundError:
            raise InputError(f"mock script not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"mock script {path} is not valid JSON: {exc}") from None

    def lookup(self, model_id: str, prompt: str, ordinal: int):
        if self.mode == "ordinal":
            seq = self.entries.get(model_id, self.entries.get("*"))
            if seq:
                return seq[ordinal % len(seq)]
        else:
            key = fingerprint(model_id, prompt)
            if key in self.entries:
                return self.entries[key]
        for rule in self.rules:
            if rule.get("model", model_id) == model_id and rule["contains"] in prompt:
                return rule["response"]
        if self.has_default:
            return self.default
        raise KeyError(f"mock script has no response for {model_id} (ordinal {ordinal})")


class MockBackend(Backend):
    """Deterministic offline backend.

    Responses come from ``script`` or from ``responder(prompt, ordinal)``;
    either may yield ``None`` to simulate a failed attempt.  Calls are served
    in order, so a fixed call sequence gives a fixed transcript.
    """

    def __init__(self, config: BackendConfig, script: Optional[MockScript] = None,
                 responder: Optional[Callable[[str, int], Optional[str]]] = None, **kwargs):
        kwargs.setdefault("sleep", lambda s: None)
        super().__init__(config, **kwargs)
        if (script is None) == (responder is None):
            raise ConfigError("MockBackend needs exactly one of script or responder")
        self.script = script
        self.responder = responder
        self._ordinal = 0
        self._lock = threading.Lock()
        self.prompts: list[str] = []

    def _attempt(self, prompt: str) -> GenerationResult:
        with self._lock:
            ordinal = self._ordinal
            self._ordinal += 1
            self.prompts.append(prompt)
        if self.responder is not None:
            text = self.responder(prompt, ordinal)
        else:
            try:
                text = self.script.lookup(self.model_id, prompt, ordinal)
            except KeyError as exc:
                raise TransportError(str(exc)) from None
        if text is None or isinstance(text, dict):
            message = text.get("error", "scripted failure") if isinstance(text, dict) else "scripted failure"
            raise TransportError(message)
        return GenerationResult(
            text=text,
            finish_reason="stop",
            prompt_tokens=count_tokens(prompt),
            completion_tokens=count_tokens(text),
        )

    def generate_many(self, prompts: Sequence[str]) -> list[GenerationResult]:
        return [self.generate(p) for p in prompts]


def make_backend(config: BackendConfig, base_dir=None, client: Optional[httpx.Client] = None) -> Backend:
    """Build the backend named by ``config.endpoint``.

    ``mock:<path>`` loads a JSON :class:`MockScript`; relative paths resolve
    against ``base_dir`` (normally the config file's directory).
    """
    if config.is_mock:
        path = Path(config.endpoint[len("mock:"):])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return MockBackend(config, script=MockScript.from_file(path))
    if not config.endpoint.startswith(("http://", "https://")):
        raise ConfigError(f"{config.model_id}: endpoint must be an http(s) URL or mock:<path>")
    return RemoteBackend(config, client=client)

