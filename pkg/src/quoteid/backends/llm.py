"""Chat-completion client with bounded concurrency, exponential backoff and an
on-disk response cache keyed by (model, prompt hash)."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import httpx

from ..errors import ApiError, ConfigError, TransportError
from ..prompting import PromptTemplate, parse_prediction
from . import render_prompt

log = logging.getLogger(__name__)

RETRYABLE_STATUS = frozenset({408, 409, 429, 500, 502, 503, 504})


@dataclass(frozen=True)
class LlmClientConfig:
    endpoint: str
    model_name: str
    temperature: float = 0.0
    max_retries: int = 3
    timeout: float = 60.0
    parallelism: int = 4
    api_key_env: str = "OPENAI_API_KEY"
    backoff_base: float = 1.0
    backoff_max: float = 30.0

    def __post_init__(self):
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        if self.timeout <= 0:
            raise ConfigError("timeout must be positive")

    @classmethod
    def load(cls, path) -> "LlmClientConfig":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
            return cls(**{k: v for k, v in obj.items() if k in cls.__dataclass_fields__})
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise ConfigError(f"cannot load LLM config {path}: {exc}") from exc

    def backoff(self, retry: int) -> float:
        """Delay before retry number ``retry`` (0-based)."""
        return min(self.backoff_max, self.backoff_base * 2 ** retry)

    def to_json(self):
        return asdict(self)


def cache_key(model: str, prompt: str) -> str:
    return hashlib.sha256(f"{model}\n{prompt}".encode("utf-8")).hexdigest()


class ResponseCache:
    """Append-only JSON-lines store of raw responses."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._data: dict[str, str] = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        row = json.loads(line)
                        self._data[row["key"]] = row["response"]

    def __len__(self):
        return len(self._data)

    def get(self, model, prompt):
        return self._data.get(cache_key(model, prompt))

    def put(self, model, prompt, response):
        key = cache_key(model, prompt)
        with self._lock:
            if key in self._data:
                return
            self._data[key] = response
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"key": key, "model": model, "response": response}, ensure_ascii=False) + "\n")


class LlmClient:
    def __init__(self, config: LlmClientConfig, cache: ResponseCache | None = None,
                 http: httpx.Client | None = None, sleep=time.sleep):
        self.config = config
        self.cache = cache
        self.sleep = sleep
        self._http = http
        self._slots = threading.BoundedSemaphore(config.parallelism)
        self._lock = threading.Lock()
        self.requests_sent = 0

    @property
    def http(self) -> httpx.Client:
        if self._http is None:
            self._http = httpx.Client(timeout=self.config.timeout)
        return self._http

    def close(self):
        if self._http is not None:
            self._http.close()

    def _headers(self):
        env = self.config.api_key_env
        if not env:
            return {}
        key = os.environ.get(env)
        if not key:
            raise ConfigError(f"environment variable {env} is not set")
        return {"Authorization": f"Bearer {key}"}

    def _post(self, prompt):
        body = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        }
        with self._slots:
            with self._lock:
                self.requests_sent += 1
            return self.http.post(self.config.endpoint, json=body, headers=self._headers())

    def request(self, prompt: str) -> str:
        """One completion, retried with exponential backoff on transient failures."""
        last = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                delay = self.config.backoff(attempt - 1)
                log.debug("retry %d after %.2fs: %s", attempt, delay, last)
                self.sleep(delay)
            try:
                resp = self._post(prompt)
            except httpx.TransportError as exc:
                last = exc
                continue
            if resp.status_code in RETRYABLE_STATUS:
                last = ApiError(resp.status_code, resp.text)
                continue
            if resp.status_code >= 400:
                raise ApiError(resp.status_code, resp.text)
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError):
                raise ApiError(resp.status_code, resp.text) from None
        if isinstance(last, ApiError):
            raise last
        raise TransportError(f"request failed after {self.config.max_retries} retries: {last!r}")

    def complete(self, prompt: str) -> str:
        model = self.config.model_name
        if self.cache is not None:
            hit = self.cache.get(model, prompt)
            if hit is not None:
                return hit
        text = self.request(prompt)
        if self.cache is not None:
            self.cache.put(model, prompt, text)
        return text

    def complete_many(self, prompts):
        """Results in input order; failed prompts yield their exception."""
        def run(p):
            try:
                return self.complete(p)
            except (TransportError, ConfigError) as exc:
                return exc

        with ThreadPoolExecutor(max_workers=self.config.parallelism) as pool:
            return list(pool.map(run, prompts))


def llm_identify(client: LlmClient, prompt: str) -> str:
    return client.complete(prompt)


class LlmBackend:
    name = "llm"

    def __init__(self, client: LlmClient, template: PromptTemplate):
        self.client = client
        self.template = template

    def prompt(self, segment, mode=None) -> str:
        return render_prompt(self.template, segment, mode)

    def identify(self, segment, mode=None):
        raw = self.client.complete(self.prompt(segment, mode))
        return parse_prediction(raw, segment.lang)
