"""Transports that turn a rendered prompt into a model reply."""

from __future__ import annotations

import logging
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import httpx

from .prompt import SIGMA_BOUNDS, format_float

logger = logging.getLogger(__name__)

API_KEY_ENV = "ADVISOR_API_KEY"
PROVIDERS = ("http-chat", "scripted", "surrogate-one-fifth")
REPLAY_SEPARATOR = "---"

# scaffolding of the user template without log or sigma, rounded up
_TEMPLATE_OVERHEAD = 700


class AdvisorError(RuntimeError):
    """The advisor could not produce a reply."""


@dataclass(frozen=True)
class AdvisorConfig:
    name: str = "advisor"
    provider: str = "surrogate-one-fifth"
    endpoint_url: str = ""
    model_name: str = ""
    temperature: float = 0.0
    char_budget: int = 8000
    timeout_seconds: float = 60.0
    max_retries: int = 5
    min_request_interval_ms: float = 0.0
    backoff_seconds: float = 1.0
    replay_file: str | None = None

    def __post_init__(self) -> None:
        if self.provider not in PROVIDERS:
            raise ValueError(f"unknown provider {self.provider!r}; expected one of {PROVIDERS}")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.char_budget <= _TEMPLATE_OVERHEAD:
            raise ValueError(f"char_budget must exceed the template scaffolding ({_TEMPLATE_OVERHEAD} chars)")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.provider == "http-chat" and not self.endpoint_url:
            raise ValueError(f"advisor {self.name!r}: http-chat needs an endpoint_url")
        if self.provider == "scripted" and not self.replay_file:
            raise ValueError(f"advisor {self.name!r}: scripted provider needs a replay_file")


# Groq-hosted models; char budgets keep the log well inside each context window
PROFILES: dict[str, AdvisorConfig] = {
    "llama2-70b": AdvisorConfig(
        name="llama2-70b",
        provider="http-chat",
        endpoint_url="https://api.groq.com/openai/v1",
        model_name="llama2-70b-4096",
        char_budget=8000,
        min_request_interval_ms=2000,
    ),
    "mixtral": AdvisorConfig(
        name="mixtral",
        provider="http-chat",
        endpoint_url="https://api.groq.com/openai/v1",
        model_name="mixtral-8x7b-32768",
        char_budget=60000,
        min_request_interval_ms=2000,
    ),
    "surrogate": AdvisorConfig(name="surrogate", provider="surrogate-one-fifth"),
}


class RateLimiter:
    """Serialises callers and spaces consecutive acquisitions by ``interval`` seconds."""

    def __init__(self, interval: float) -> None:
        self.interval = interval
        self._lock = threading.Lock()
        self._last: float | None = None

    def __enter__(self):
        self._lock.acquire()
        if self._last is not None:
            wait = self._last + self.interval - time.monotonic()
            if wait > 0:
                time.sleep(wait)
        self._last = time.monotonic()
        return self

    def __exit__(self, *exc) -> None:
        self._lock.release()


_limiters: dict[str, RateLimiter] = {}
_limiters_lock = threading.Lock()


def shared_limiter(key: str, interval: float) -> RateLimiter:
    """One limiter per endpoint for the whole process."""
    with _limiters_lock:
        limiter = _limiters.get(key)
        if limiter is None:
            limiter = _limiters[key] = RateLimiter(interval)
        else:
            limiter.interval = max(limiter.interval, interval)
        return limiter


class HttpChatProvider:
    """OpenAI-compatible chat-completions client with retries and pacing."""

    remote = True

    def __init__(self, config: AdvisorConfig, api_key: str | None = None, client: httpx.Client | None = None) -> None:
        self.config = config
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        if not self.api_key:
            raise AdvisorError(f"advisor {config.name!r} needs an API key in ${API_KEY_ENV}")
        self.url = config.endpoint_url.rstrip("/") + "/chat/completions"
        self.limiter = shared_limiter(self.url, config.min_request_interval_ms / 1000.0)
        self.client = client or httpx.Client(timeout=config.timeout_seconds)

    def payload(self, system_message: str, user_message: str) -> dict:
        return {
            "model": self.config.model_name,
            "messages": [
                {"role": "system", "content": system_message},
                {"role": "user", "content": user_message},
            ],
            "temperature": self.config.temperature,
        }

    def complete(self, system_message: str, user_message: str) -> str:
        body = self.payload(system_message, user_message)
        headers = {"Authorization": f"Bearer {self.api_key}"}
        delay = self.config.backoff_seconds
        last_error = "no attempt made"
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                time.sleep(delay)
                delay *= 2
            try:
                with self.limiter:
                    response = self.client.post(self.url, json=body, headers=headers)
            except httpx.HTTPError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                logger.warning("advisor %s: transport error (%s), attempt %d", self.config.name, last_error, attempt + 1)
                continue
            if response.status_code == 429 or response.status_code >= 500:
                last_error = f"HTTP {response.status_code}"
                logger.warning("advisor %s: %s, attempt %d", self.config.name, last_error, attempt + 1)
                continue
            if response.status_code >= 400:
                raise AdvisorError(f"HTTP {response.status_code}: {response.text[:200]}")
            try:
                return response.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise AdvisorError(f"malformed completion body: {exc!r}") from exc
        raise AdvisorError(f"retries exhausted after {self.config.max_retries + 1} attempts: {last_error}")


def read_replay_file(path: str | Path) -> list[str]:
    """Responses separated by lines containing only ``---``."""
    blocks: list[list[str]] = [[]]
    for line in Path(path).read_text().splitlines():
        if line.strip() == REPLAY_SEPARATOR:
            blocks.append([])
        else:
            blocks[-1].append(line)
    responses = ["\n".join(block).strip("\n") for block in blocks]
    return [r for r in responses if r.strip()]


class ScriptedProvider:
    remote = False

    def __init__(self, responses: list[str]) -> None:
        self.responses = list(responses)
        self._next = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedProvider":
        return cls(read_replay_file(path))

    def complete(self, system_message: str, user_message: str) -> str:
        if self._next >= len(self.responses):
            raise AdvisorError(f"replay exhausted after {len(self.responses)} responses")
        reply = self.responses[self._next]
        self._next += 1
        return reply


_SIGMA_RE = re.compile(r"I am currently using the following step size: ([^\s]+?)\.?\n")
_EVAL_RE = re.compile(r"^f\(x(\d+)\) = (\S+)$", re.MULTILINE)


class SurrogateOneFifthProvider:
    """Offline stand-in for a model: replays the one-fifth rule over the log.

    Each call looks at the evaluation lines newer than the previous call. A
    line counts as a success when its value beats every earlier value in the
    visible log, as a failure when it is worse; the very first visible line
    only seeds the comparison. The recommendation is
    ``sigma * increase**successes * decrease**failures``, clamped to bounds.
    """

    remote = False

    def __init__(self, increase: float = 1.5, bounds: tuple[float, float] = SIGMA_BOUNDS) -> None:
        self.increase = increase
        self.bounds = bounds
        self._last_generation = 0

    def complete(self, system_message: str, user_message: str) -> str:
        match = _SIGMA_RE.search(user_message)
        if match is None:
            raise AdvisorError("surrogate could not find the current step size in the prompt")
        sigma = float(match.group(1))
        successes = failures = 0
        best = None
        newest = self._last_generation
        for gen_text, value_text in _EVAL_RE.findall(user_message):
            generation, value = int(gen_text), float(value_text)
            if best is not None and generation > self._last_generation:
                if value < best:
                    successes += 1
                elif value > best:
                    failures += 1
            best = value if best is None else min(best, value)
            newest = max(newest, generation)
        self._last_generation = newest
        # exponent form keeps one success + four failures exactly neutral
        proposed = sigma * self.increase ** (successes - failures / 4)
        low, high = self.bounds
        return f"Recommended step size: {format_float(min(max(proposed, low), high))}"


def make_provider(config: AdvisorConfig, base_dir: str | Path | None = None):
    if config.provider == "http-chat":
        return HttpChatProvider(config)
    if config.provider == "scripted":
        path = Path(config.replay_file)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return ScriptedProvider.from_file(path)
    return SurrogateOneFifthProvider()


def query(provider, system_message: str, user_message: str) -> str:
    """Send one exchange; raises :class:`AdvisorError` on failure."""
    try:
        return provider.complete(system_message, user_message)
    except AdvisorError:
        raise
    except Exception as exc:
        raise AdvisorError(f"{type(exc).__name__}: {exc}") from exc
