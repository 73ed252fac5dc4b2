"""Chat-completion client with deterministic record/replay cassettes.

The client speaks one wire format (the ubiquitous chat-completions HTTP shape)
through an injectable transport: any callable taking a :class:`ChatRequest`
and returning the model's text. Three modes:

- ``live``: every call goes to the transport.
- ``record``: cassette hits are served from disk; misses go to the transport
  and the response is appended to the cassette.
- ``replay``: served from the cassette only; a miss raises
  :class:`~equirep.errors.ReplayMiss` and no transport is ever touched.

Cassettes are JSON Lines files mapping a request fingerprint to the response
text (the request itself is echoed for readability). Fingerprints are the
SHA-256 of the canonical JSON of (system_text, user_text, temperature,
max_output_tokens), so they are stable across processes and platforms.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import requests

from .errors import (
    AuthenticationError,
    ConfigError,
    LLMError,
    ReplayMiss,
    RequestTimeout,
)

Transport = Callable[["ChatRequest"], str]


@dataclass(frozen=True)
class ChatRequest:
    user_text: str
    system_text: str | None = None
    temperature: float = 0.0
    max_output_tokens: int = 1024


def request_fingerprint(request: ChatRequest) -> str:
    payload = json.dumps(
        {
            "system_text": request.system_text,
            "user_text": request.user_text,
            "temperature": request.temperature,
            "max_output_tokens": request.max_output_tokens,
        },
        sort_keys=True,
        ensure_ascii=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class Cassette:
    """Append-only fingerprint -> response store backed by a JSONL file."""

    def __init__(self, path: str | Path, must_exist: bool = False):
        self.path = Path(path)
        self._entries: dict[str, str] = {}
        self._lock = threading.Lock()
        if self.path.exists():
            for line_no, line in enumerate(
                self.path.read_text("utf-8").splitlines(), start=1
            ):
                if not line.strip():
                    continue
                try:
                    entry = json.loads(line)
                    self._entries[entry["fingerprint"]] = entry["response"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise ConfigError(
                        f"malformed cassette {self.path} at line {line_no}: {exc}"
                    ) from exc
        elif must_exist:
            raise ConfigError(f"cassette file not found: {self.path}")

    def __len__(self) -> int:
        return len(self._entries)

    def lookup(self, fingerprint: str) -> str | None:
        with self._lock:
            return self._entries.get(fingerprint)

    def record(self, fingerprint: str, request: ChatRequest, response: str) -> None:
        line = json.dumps(
            {
                "fingerprint": fingerprint,
                "response": response,
                "request": {
                    "system_text": request.system_text,
                    "user_text": request.user_text,
                    "temperature": request.temperature,
                    "max_output_tokens": request.max_output_tokens,
                },
            },
            sort_keys=True,
            ensure_ascii=True,
        )
        with self._lock:
            self._entries[fingerprint] = response
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")


class HttpTransport:
    """POSTs chat-completion requests to an OpenAI-shaped endpoint.

    Timeouts, connection failures, and transient statuses (429, 5xx) raise
    :class:`RequestTimeout` so the client retries them; 401/403 raise
    :class:`AuthenticationError` and are never retried.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        credential_env: str = "OPENAI_API_KEY",
        timeout: float = 60.0,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.timeout = timeout
        self._session = session or requests.Session()
        api_key = os.environ.get(credential_env, "")
        if not api_key:
            raise ConfigError(
                f"no credential found: set the {credential_env} environment variable"
            )
        self._headers = {
            "Authorization": f"Bearer {api_key}",
            "Content-Type": "application/json",
        }

    def __call__(self, request: ChatRequest) -> str:
        messages = []
        if request.system_text is not None:
            messages.append({"role": "system", "content": request.system_text})
        messages.append({"role": "user", "content": request.user_text})
        body = {
            "model": self.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        try:
            resp = self._session.post(
                self.endpoint, headers=self._headers, json=body, timeout=self.timeout
            )
        except (requests.Timeout, requests.ConnectionError) as exc:
            raise RequestTimeout(f"request to {self.endpoint} failed: {exc}") from exc
        if resp.status_code in (401, 403):
            raise AuthenticationError(f"provider rejected credential ({resp.status_code})")
        if resp.status_code == 429 or resp.status_code >= 500:
            raise RequestTimeout(f"transient provider error ({resp.status_code})")
        if resp.status_code != 200:
            raise LLMError(f"provider error {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise LLMError(f"unexpected response shape: {exc}") from exc


class LLMClient:
    """Mode-aware completion client with retries and bounded concurrency."""

    MODES = ("live", "record", "replay")

    def __init__(
        self,
        mode: str = "live",
        transport: Transport | None = None,
        cassette_path: str | Path | None = None,
        max_in_flight: int = 4,
        retry_attempts: int = 3,
        backoff_base: float = 0.5,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if mode not in self.MODES:
            raise ConfigError(f"mode must be one of {self.MODES}, got {mode!r}")
        if mode in ("live", "record") and transport is None:
            raise ConfigError(f"{mode} mode needs a transport")
        if mode in ("record", "replay") and cassette_path is None:
            raise ConfigError(f"{mode} mode needs a cassette path")
        self.mode = mode
        self._transport = transport
        self._cassette = (
            Cassette(cassette_path, must_exist=(mode == "replay"))
            if cassette_path is not None
            else None
        )
        self._semaphore = threading.Semaphore(max(1, max_in_flight))
        self._retry_attempts = max(1, retry_attempts)
        self._backoff_base = backoff_base
        self._sleep = sleep
        self._counter_lock = threading.Lock()
        self.network_calls = 0
        self.cassette_hits = 0

    def complete(self, request: ChatRequest) -> str:
        fingerprint = request_fingerprint(request)
        if self._cassette is not None:
            hit = self._cassette.lookup(fingerprint)
            if hit is not None:
                with self._counter_lock:
                    self.cassette_hits += 1
                return self._checked(hit)
        if self.mode == "replay":
            raise ReplayMiss(fingerprint)
        response = self._call_with_retry(request)
        if self.mode == "record":
            self._cassette.record(fingerprint, request, response)
        return response

    def _call_with_retry(self, request: ChatRequest) -> str:
        last: RequestTimeout | None = None
        for attempt in range(self._retry_attempts):
            if attempt:
                self._sleep(self._backoff_base * (2 ** (attempt - 1)))
            try:
                with self._semaphore:
                    with self._counter_lock:
                        self.network_calls += 1
                    return self._checked(self._transport(request))
            except RequestTimeout as exc:
                last = exc
        raise last

    @staticmethod
    def _checked(text: str) -> str:
        if not text:
            raise LLMError("provider returned an empty response")
        return text
