"""Uniform access to a chat-completion LLM.

Provides greedy and temperature-sampled decoding behind one gateway with
retry, a per-attempt call log, and an in-flight cap.  Two backends ship:
an OpenAI-compatible HTTP backend and a scripted backend replaying a
canned playbook keyed by a digest of (decode kind, prompt), for
byte-deterministic runs without any model.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

logger = logging.getLogger(__name__)

GREEDY = "greedy"
SAMPLE = "sample"

ENV_ENDPOINT = "DUAT_LLM_ENDPOINT"
ENV_API_KEY = "DUAT_LLM_API_KEY"
ENV_MODEL = "DUAT_LLM_MODEL"


class GatewayError(RuntimeError):
    """A completion failed after exhausting the retry budget."""

    def __init__(self, message: str, attempts: int = 0):
        super().__init__(message)
        self.attempts = attempts


class ContextOverflowError(GatewayError):
    """Prompt exceeds the backend's declared context budget."""


class TransportError(RuntimeError):
    """Retryable backend failure (connection, 5xx)."""


class BackendRequestError(RuntimeError):
    """Non-retryable backend failure (4xx-class)."""


@dataclass(frozen=True)
class LlmRequest:
    """One completion request; greedy requests carry no temperature."""

    prompt: str
    decode: str = GREEDY
    temperature: float | None = None
    draw_index: int | None = None
    max_tokens: int = 1024
    model: str = "default"
    tag: str = ""

    def __post_init__(self) -> None:
        if self.decode not in (GREEDY, SAMPLE):
            raise ValueError(f"unknown decode {self.decode!r}")
        if self.decode == GREEDY and self.temperature is not None:
            raise ValueError("greedy requests carry no temperature")
        if self.decode == SAMPLE:
            if self.temperature is None or not 0.0 < self.temperature <= 2.0:
                raise ValueError("sample temperature must lie in (0, 2]")


@dataclass
class CallRecord:
    """One network attempt, for cost accounting."""

    tag: str
    digest: str
    decode: str
    draw_index: int | None
    attempt: int
    ok: bool
    latency_s: float
    prompt_chars: int
    reply_chars: int
    # Whitespace-token estimate unless the backend reports real usage.
    prompt_tokens: int = 0
    reply_tokens: int = 0


def playbook_digest(prompt: str, decode: str) -> str:
    """Stable lookup key for scripted replies."""
    return hashlib.sha256(f"{decode}\n{prompt}".encode("utf-8")).hexdigest()


class ScriptedBackend:
    """Deterministic backend replaying canned replies from a playbook.

    Playbook rows are ``{"digest": hex, "k": int, "reply": str}``.  Greedy
    lookups use k=0.  A sampled draw k with m < k+1 canned variants wraps
    around to variant ``k mod m``.
    """

    supports_sampling = True

    def __init__(self, max_context_chars: int = 200_000) -> None:
        self.max_context_chars = max_context_chars
        self._replies: dict[str, dict[int, str]] = {}

    @classmethod
    def from_playbook(cls, path: str | Path, max_context_chars: int = 200_000) -> "ScriptedBackend":
        backend = cls(max_context_chars=max_context_chars)
        with Path(path).open(encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                row = json.loads(line)
                try:
                    backend.add_digest(row["digest"], int(row["k"]), row["reply"])
                except KeyError as exc:
                    raise ValueError(f"playbook line {lineno}: missing {exc}") from exc
        return backend

    def add(self, prompt: str, reply: str, decode: str = GREEDY, k: int = 0) -> None:
        self.add_digest(playbook_digest(prompt, decode), k, reply)

    def add_digest(self, digest: str, k: int, reply: str) -> None:
        self._replies.setdefault(digest, {})[k] = reply

    def rows(self) -> list[dict]:
        out = []
        for digest in sorted(self._replies):
            for k in sorted(self._replies[digest]):
                out.append({"digest": digest, "k": k, "reply": self._replies[digest][k]})
        return out

    def complete(self, req: LlmRequest) -> str:
        digest = playbook_digest(req.prompt, req.decode)
        variants = self._replies.get(digest)
        if not variants:
            raise BackendRequestError(
                f"no scripted reply for digest {digest[:12]}... (decode={req.decode})"
            )
        k = 0 if req.decode == GREEDY else (req.draw_index or 0)
        if k in variants:
            return variants[k]
        ordered = [variants[i] for i in sorted(variants)]
        return ordered[k % len(ordered)]


class OpenAICompatBackend:
    """Chat-completions backend for any OpenAI-style endpoint.

    Endpoint and key come from configuration or the DUAT_LLM_* environment
    variables, never from code.  Greedy decoding is realized as
    temperature 0.
    """

    supports_sampling = True

    def __init__(
        self,
        endpoint: str | None = None,
        api_key: str | None = None,
        model: str | None = None,
        max_context_chars: int = 48_000,
        session: requests.Session | None = None,
    ) -> None:
        self.endpoint = (endpoint or os.environ.get(ENV_ENDPOINT, "")).rstrip("/")
        if not self.endpoint:
            raise ValueError(f"no LLM endpoint configured (flag or {ENV_ENDPOINT})")
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY, "")
        self.model = model or os.environ.get(ENV_MODEL, "gpt-3.5-turbo")
        self.max_context_chars = max_context_chars
        self.session = session or requests.Session()

    def complete(self, req: LlmRequest) -> str:
        body = {
            "model": self.model if req.model == "default" else req.model,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": 0.0 if req.decode == GREEDY else req.temperature,
            "max_tokens": req.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = self.session.post(
                self.endpoint + "/chat/completions", json=body, headers=headers, timeout=120
            )
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code >= 500:
            raise TransportError(f"server error {resp.status_code}: {resp.text[:200]}")
        if resp.status_code >= 400:
            raise BackendRequestError(f"request rejected ({resp.status_code}): {resp.text[:200]}")
        payload = resp.json()
        try:
            choice = payload["choices"][0]
            text = choice["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendRequestError(f"unexpected response shape: {payload!r}") from exc
        if choice.get("finish_reason") == "length":
            logger.warning("completion truncated at max_tokens=%d", req.max_tokens)
        return text


class LlmGateway:
    """Retry, call accounting, and concurrency capping around a backend."""

    def __init__(
        self,
        backend,
        max_retries: int = 2,
        backoff_s: float = 0.1,
        max_inflight: int = 8,
    ) -> None:
        self.backend = backend
        self.max_retries = max_retries
        self.backoff_s = backoff_s
        self.call_log: list[CallRecord] = []
        self._log_lock = threading.Lock()
        self._inflight = threading.Semaphore(max_inflight)

    def complete(self, req: LlmRequest) -> str:
        if not req.prompt:
            raise GatewayError("prompt must be non-empty")
        budget = getattr(self.backend, "max_context_chars", None)
        if budget is not None and len(req.prompt) > budget:
            # Local failure: no network attempt is made or logged.
            raise ContextOverflowError(
                f"prompt of {len(req.prompt)} chars exceeds context budget of {budget}"
            )
        digest = playbook_digest(req.prompt, req.decode)
        last_error: Exception | None = None
        for attempt in range(1, self.max_retries + 2):
            start = time.monotonic()
            try:
                with self._inflight:
                    reply = self.backend.complete(req)
            except TransportError as exc:
                self._record(req, digest, attempt, ok=False, latency=time.monotonic() - start, reply="")
                last_error = exc
                if attempt <= self.max_retries:
                    time.sleep(self.backoff_s * (2 ** (attempt - 1)))
                continue
            except BackendRequestError as exc:
                self._record(req, digest, attempt, ok=False, latency=time.monotonic() - start, reply="")
                raise GatewayError(f"non-retryable backend error: {exc}", attempts=attempt) from exc
            self._record(req, digest, attempt, ok=True, latency=time.monotonic() - start, reply=reply)
            return reply
        raise GatewayError(
            f"backend failed after {self.max_retries + 1} attempts: {last_error}",
            attempts=self.max_retries + 1,
        ) from last_error

    def sample_k(self, req: LlmRequest, k: int, temperature: float) -> list[str]:
        """K sampled completions in draw-index order."""
        if k < 1:
            raise ValueError("sample count must be >= 1")
        replies: list[str] = []
        failed: list[int] = []
        last_error: Exception | None = None
        for draw in range(k):
            draw_req = LlmRequest(
                prompt=req.prompt,
                decode=SAMPLE,
                temperature=temperature,
                draw_index=draw,
                max_tokens=req.max_tokens,
                model=req.model,
                tag=req.tag,
            )
            try:
                replies.append(self.complete(draw_req))
            except GatewayError as exc:
                failed.append(draw)
                last_error = exc
        if failed:
            raise GatewayError(
                f"sampling failed for draw indices {failed}: {last_error}",
                attempts=getattr(last_error, "attempts", 0),
            ) from last_error
        return replies

    def calls_tagged(self, tag: str, ok_only: bool = True) -> int:
        with self._log_lock:
            return sum(
                1 for rec in self.call_log if rec.tag == tag and (rec.ok or not ok_only)
            )

    def _record(self, req: LlmRequest, digest: str, attempt: int, ok: bool, latency: float, reply: str) -> None:
        record = CallRecord(
            tag=req.tag,
            digest=digest,
            decode=req.decode,
            draw_index=req.draw_index,
            attempt=attempt,
            ok=ok,
            latency_s=latency,
            prompt_chars=len(req.prompt),
            reply_chars=len(reply),
            prompt_tokens=len(req.prompt.split()),
            reply_tokens=len(reply.split()),
        )
        with self._log_lock:
            self.call_log.append(record)
