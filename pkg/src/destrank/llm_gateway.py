"""Chat-completion client with a persistent record/replay cache.

Responses are cached in an append-only JSONL file keyed by a SHA-256 digest
of the canonicalized request, so a warm cache makes every run fully
deterministic and offline.
"""
from __future__ import annotations

import datetime
import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import requests

from .errors import ApiError, CacheMiss, MalformedCache, NetworkError

DEFAULT_MODEL = "gpt-4o"
ENV_API_KEY = "DESTRANK_LLM_API_KEY"
ENV_BASE_URL = "DESTRANK_LLM_BASE_URL"
ENV_MODEL = "DESTRANK_LLM_MODEL"

RETRY_DELAYS = (1.0, 2.0, 4.0)


@dataclass(frozen=True)
class ChatRequest:
    model: str
    user_prompt: str
    system_prompt: Optional[str] = None
    temperature: float = 0.0
    max_tokens: int = 1024

    def __post_init__(self):
        if not self.user_prompt:
            raise ValueError("user_prompt must be non-empty")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")


@dataclass(frozen=True)
class ChatResponse:
    text: str
    cached: bool


def canonical_request_json(request: ChatRequest) -> str:
    """Canonical serialization used for cache keys: sorted keys, no whitespace."""
    payload = {
        "max_tokens": request.max_tokens,
        "model": request.model,
        "system_prompt": request.system_prompt,
        "temperature": request.temperature,
        "user_prompt": request.user_prompt,
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def request_key(request: ChatRequest) -> str:
    digest = hashlib.sha256(canonical_request_json(request).encode("utf-8"))
    return digest.hexdigest()


def _load_cache(path: Path) -> dict[str, str]:
    cache: dict[str, str] = {}
    if not path.exists():
        return cache
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
                key = entry["key"]
                text = entry["response_text"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise MalformedCache(line_no, str(exc)) from exc
            cache[key] = text  # append-only file: last entry wins
    return cache


def append_cache_entry(path, request: ChatRequest, response_text: str) -> str:
    """Append one cache entry; returns its key. Usable for seeding fixtures."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    key = request_key(request)
    entry = {
        "key": key,
        "request": {
            "model": request.model,
            "system_prompt": request.system_prompt,
            "user_prompt": request.user_prompt,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        },
        "response_text": response_text,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    with path.open("a", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
    return key


def cache_stats(cache_path) -> dict:
    """Entry count and distinct models in a cache file."""
    path = Path(cache_path)
    keys: set[str] = set()
    models: set[str] = set()
    if not path.exists():
        return {"entries": 0, "models": set()}
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
                keys.add(entry["key"])
                models.add(entry["request"]["model"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise MalformedCache(line_no, str(exc)) from exc
    return {"entries": len(keys), "models": models}


class LlmGateway:
    """Issues chat completions, replaying from cache whenever possible.

    In cache-only mode (no API key, or explicitly requested) an unseen
    request raises :class:`CacheMiss` instead of touching the network.
    Cache appends are serialized through a lock; concurrent completes are
    safe.
    """

    def __init__(
        self,
        cache_path,
        base_url: Optional[str] = None,
        api_key: Optional[str] = None,
        model: str = DEFAULT_MODEL,
        cache_only: bool = False,
        session: Optional[requests.Session] = None,
    ):
        self.cache_path = Path(cache_path)
        self.base_url = (base_url or "").rstrip("/")
        self.api_key = api_key
        self.model = model
        self.cache_only = cache_only or not api_key
        self._session = session or requests.Session()
        self._lock = threading.Lock()
        self._cache = _load_cache(self.cache_path)
        self.network_calls = 0

    @classmethod
    def from_env(cls, cache_path, cache_only: bool = False) -> "LlmGateway":
        return cls(
            cache_path,
            base_url=os.environ.get(ENV_BASE_URL),
            api_key=os.environ.get(ENV_API_KEY),
            model=os.environ.get(ENV_MODEL, DEFAULT_MODEL),
            cache_only=cache_only,
        )

    def complete(self, request: ChatRequest) -> ChatResponse:
        key = request_key(request)
        with self._lock:
            if key in self._cache:
                return ChatResponse(text=self._cache[key], cached=True)
        if self.cache_only:
            raise CacheMiss(key)
        text = self._call_api(request)
        with self._lock:
            append_cache_entry(self.cache_path, request, text)
            self._cache[key] = text
        return ChatResponse(text=text, cached=False)

    def _call_api(self, request: ChatRequest) -> str:
        url = f"{self.base_url}/v1/chat/completions"
        messages = []
        if request.system_prompt:
            messages.append({"role": "system", "content": request.system_prompt})
        messages.append({"role": "user", "content": request.user_prompt})
        body = {
            "model": request.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Authorization": f"Bearer {self.api_key}"}
        last_exc: Optional[Exception] = None
        for attempt in range(len(RETRY_DELAYS) + 1):
            try:
                resp = self._session.post(url, json=body, headers=headers, timeout=120)
                self.network_calls += 1
            except requests.RequestException as exc:
                last_exc = exc
                if attempt < len(RETRY_DELAYS):
                    time.sleep(RETRY_DELAYS[attempt])
                continue
            if resp.status_code != 200:
                raise ApiError(resp.status_code, resp.text)
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, ValueError) as exc:
                raise ApiError(resp.status_code, f"unexpected response shape: {exc}") from exc
        raise NetworkError(f"chat completion failed after retries: {last_exc}")
