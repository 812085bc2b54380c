"""Text-generation backends: a fixture-driven mock and an HTTP completion client."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import httpx

log = logging.getLogger(__name__)


class BackendError(RuntimeError):
    """The backend could not produce a completion."""


class FixtureError(BackendError, KeyError):
    """No mock fixture matches the prompt."""

    def __str__(self) -> str:  # KeyError would repr-quote the message
        return self.args[0] if self.args else ""


class Backend(Protocol):
    def generate(self, prompt: str, *, max_tokens: int, stop: Sequence[str] | None,
                 temperature: float) -> str: ...


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class MockBackend:
    """Exact-match prompt -> response table, keyed by SHA-256 of the prompt."""

    def __init__(self, responses: Mapping[str, str] | None = None):
        self._table: dict[str, str] = dict(responses or {})
        self.calls = 0

    @classmethod
    def from_entries(cls, entries: Iterable[Mapping]) -> "MockBackend":
        mock = cls()
        for entry in entries:
            mock.add(entry["response"], prompt=entry.get("prompt"),
                     digest=entry.get("prompt_sha256"))
        return mock

    @classmethod
    def from_dir(cls, path: str | Path) -> "MockBackend":
        path = Path(path)
        files = sorted(path.glob("*.json")) if path.is_dir() else [path]
        if not files:
            raise FixtureError(f"no fixture files under {path}")
        entries: list[Mapping] = []
        for f in files:
            data = json.loads(f.read_text(encoding="utf-8"))
            if isinstance(data, Mapping):
                data = data.get("entries", [data])
            entries.extend(data)
        return cls.from_entries(entries)

    def add(self, response: str, *, prompt: str | None = None, digest: str | None = None) -> None:
        if digest is None:
            if prompt is None:
                raise ValueError("fixture needs a prompt or a prompt_sha256")
            digest = prompt_hash(prompt)
        self._table[digest] = response

    def __len__(self) -> int:
        return len(self._table)

    def generate(self, prompt: str, *, max_tokens: int = 256, stop=None, temperature: float = 0.0) -> str:
        self.calls += 1
        digest = prompt_hash(prompt)
        try:
            return self._table[digest]
        except KeyError:
            first = prompt.strip().splitlines()[0][:60] if prompt.strip() else ""
            raise FixtureError(f"no fixture for prompt {digest[:12]} ({first!r})") from None


RETRY_STATUS = {408, 429, 500, 502, 503, 504}


class HttpBackend:
    """OpenAI-style text completion endpoint."""

    def __init__(
        self,
        url: str,
        model: str = "default",
        api_key: str | None = None,
        *,
        timeout: float = 60.0,
        retries: int = 3,
        backoff: float = 0.5,
        transport: httpx.BaseTransport | None = None,
    ):
        if not url:
            raise BackendError("live backend needs a URL (ENGINE_BACKEND_URL)")
        self.url = url
        self.model = model
        self.retries = max(1, retries)
        self.backoff = backoff
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    @classmethod
    def from_env(cls, **overrides) -> "HttpBackend":
        kwargs = {
            "url": os.environ.get("ENGINE_BACKEND_URL", ""),
            "model": os.environ.get("ENGINE_BACKEND_MODEL", "default"),
            "api_key": os.environ.get("ENGINE_BACKEND_KEY"),
        }
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kwargs)

    def generate(self, prompt: str, *, max_tokens: int = 256, stop: Sequence[str] | None = None,
                 temperature: float = 0.0) -> str:
        body = {"model": self.model, "prompt": prompt, "max_tokens": max_tokens,
                "temperature": temperature, "stop": list(stop) if stop else None}
        last: Exception | None = None
        for attempt in range(1, self.retries + 1):
            try:
                resp = self._client.post(self.url, json=body)
            except httpx.TransportError as exc:
                last = exc
            else:
                if resp.status_code == 200:
                    return self._text(resp)
                if resp.status_code not in RETRY_STATUS:
                    raise BackendError(f"backend returned HTTP {resp.status_code}: {resp.text[:200]}")
                last = BackendError(f"HTTP {resp.status_code}")
            log.warning("backend attempt %d/%d failed: %s", attempt, self.retries, last)
            if attempt < self.retries and self.backoff:
                time.sleep(self.backoff * 2 ** (attempt - 1))
        raise BackendError(f"backend failed after {self.retries} attempts: {last}")

    @staticmethod
    def _text(resp: httpx.Response) -> str:
        try:
            return resp.json()["choices"][0]["text"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed completion response: {exc}") from None

    def close(self) -> None:
        self._client.close()
