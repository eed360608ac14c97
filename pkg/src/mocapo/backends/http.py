"""OpenAI-compatible chat-completions client with token usage accounting.

Auth and endpoint come from MOCAPO_API_KEY / MOCAPO_BASE_URL unless passed
explicitly. Transport failures and 429/5xx responses are retried with capped
exponential backoff, then surfaced as BackendError. Missing usage fields fall
back to whitespace token counts and flag the response.

A JSON-lines fixture store (one {"request_hash", "response"} object per line)
supports recording live traffic and replaying it deterministically.
"""

from __future__ import annotations

import json
import logging
import os
import time
from pathlib import Path

import httpx

from ..types import content_hash
from .base import BackendError, ChatRequest, ChatResponse, whitespace_tokens

logger = logging.getLogger(__name__)

API_KEY_ENV = "MOCAPO_API_KEY"
BASE_URL_ENV = "MOCAPO_BASE_URL"

_RETRYABLE_STATUS = {429, 500, 502, 503, 504}


def request_fingerprint(request: ChatRequest) -> str:
    return content_hash(
        request.model,
        [list(m) for m in request.messages],
        request.max_output_tokens,
        request.temperature,
        request.seed,
    )


class HttpChatBackend:
    """Client for POST {base_url}/v1/chat/completions with bearer-token auth."""

    def __init__(
        self,
        model: str = "",
        base_url: str | None = None,
        api_key: str | None = None,
        timeout: float = 60.0,
        max_retries: int = 5,
        backoff_base: float = 0.5,
        backoff_cap: float = 8.0,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        base_url = base_url or os.environ.get(BASE_URL_ENV)
        if not base_url:
            raise BackendError(
                f"no base URL configured; pass base_url or set {BASE_URL_ENV}"
            )
        self.model = model
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        headers = {}
        api_key = api_key or os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(
            base_url=base_url.rstrip("/"),
            headers=headers,
            timeout=timeout,
            transport=transport,
        )

    def complete(self, request: ChatRequest) -> ChatResponse:
        payload = {
            "model": request.model or self.model,
            "messages": [{"role": r, "content": c} for r, c in request.messages],
            "max_tokens": request.max_output_tokens,
            "temperature": request.temperature,
            "seed": request.seed,
        }
        data = self._post_with_retries(payload)
        return self._parse(request, data)

    def _post_with_retries(self, payload: dict) -> dict:
        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            if attempt > 0:
                delay = min(self.backoff_cap, self.backoff_base * 2 ** (attempt - 1))
                time.sleep(delay)
            try:
                response = self._client.post("/v1/chat/completions", json=payload)
            except httpx.TransportError as exc:
                last_error = exc
                logger.warning("transport error (attempt %d): %s", attempt + 1, exc)
                continue
            if response.status_code in _RETRYABLE_STATUS:
                last_error = BackendError(
                    f"provider returned HTTP {response.status_code}"
                )
                logger.warning(
                    "retryable HTTP %d (attempt %d)", response.status_code, attempt + 1
                )
                continue
            if response.status_code != 200:
                raise BackendError(
                    f"provider returned HTTP {response.status_code}: {response.text[:200]}"
                )
            try:
                return response.json()
            except json.JSONDecodeError as exc:
                raise BackendError(f"provider payload is not JSON: {exc}") from exc
        raise BackendError(f"request failed after {self.max_retries} attempts: {last_error}")

    def _parse(self, request: ChatRequest, data: dict) -> ChatResponse:
        try:
            text = data["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed provider payload: {data!r:.200}") from exc
        usage = data.get("usage") or {}
        tok_in = usage.get("prompt_tokens")
        tok_out = usage.get("completion_tokens")
        estimated = tok_in is None or tok_out is None
        if estimated:
            logger.warning("usage fields missing; falling back to whitespace counts")
            if tok_in is None:
                tok_in = whitespace_tokens(request.content)
            if tok_out is None:
                tok_out = whitespace_tokens(text)
        return ChatResponse(
            text=text,
            tok_in=int(tok_in),
            tok_out=int(tok_out),
            tok_estimated=estimated,
        )


class FixtureRecorder:
    """Wraps a backend and appends each exchange to a JSON-lines fixture file."""

    def __init__(self, inner, path: str | Path) -> None:
        self.inner = inner
        self.path = Path(path)

    def complete(self, request: ChatRequest) -> ChatResponse:
        response = self.inner.complete(request)
        row = {
            "request_hash": request_fingerprint(request),
            "response": {
                "text": response.text,
                "tok_in": response.tok_in,
                "tok_out": response.tok_out,
                "tok_estimated": response.tok_estimated,
            },
        }
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")
        return response


class FixtureReplayBackend:
    """Serves completions from a recorded fixture; unknown requests error."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._responses: dict[str, ChatResponse] = {}
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                resp = row["response"]
                self._responses[row["request_hash"]] = ChatResponse(
                    text=resp["text"],
                    tok_in=int(resp["tok_in"]),
                    tok_out=int(resp["tok_out"]),
                    tok_estimated=bool(resp.get("tok_estimated", False)),
                )

    def complete(self, request: ChatRequest) -> ChatResponse:
        key = request_fingerprint(request)
        if key not in self._responses:
            raise BackendError(f"no recorded response for request hash {key}")
        return self._responses[key]
