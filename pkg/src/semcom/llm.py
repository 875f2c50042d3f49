"""Chat clients behind one narrow interface: a deterministic scripted mock
for offline runs and a chat-completions HTTP client, plus a per-call
transcript log. API keys come from the environment and never appear in
requests' reprs or in transcripts."""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass

import requests

logger = logging.getLogger(__name__)


class LlmError(RuntimeError):
    pass


class LlmTransportError(LlmError):
    """The service could not be reached or kept failing after retries."""


@dataclass(frozen=True)
class LlmRequest:
    system: str
    user: str
    model: str = "mock"
    temperature: float = 0.0


@dataclass(frozen=True)
class LlmResponse:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0


def prompt_hash(request: LlmRequest) -> str:
    digest = hashlib.sha256()
    digest.update(request.system.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(request.user.encode("utf-8"))
    return digest.hexdigest()


class MockLlm:
    """Scripted replies keyed by prompt hash; unscripted prompts echo the
    user content, which keeps offline runs deterministic end to end."""

    def __init__(self, script: dict | None = None):
        self.script = dict(script or {})
        self.calls = 0

    @classmethod
    def from_script_file(cls, path) -> "MockLlm":
        with open(path, encoding="utf-8") as handle:
            return cls(json.load(handle))

    def complete(self, request: LlmRequest) -> LlmResponse:
        self.calls += 1
        reply = self.script.get(prompt_hash(request), request.user)
        return LlmResponse(reply, prompt_tokens=len(request.user.split()), completion_tokens=len(reply.split()))


class HttpLlm:
    """Chat-completions client. The key is read once from the environment
    by the caller and held only for the Authorization header."""

    def __init__(self, endpoint: str, model: str, api_key: str | None = None,
                 timeout: float = 30.0, max_retries: int = 2, retry_wait: float = 1.0):
        self.endpoint = endpoint
        self.model = model
        self._api_key = api_key
        self.timeout = timeout
        self.max_retries = max_retries
        self.retry_wait = retry_wait

    def complete(self, request: LlmRequest) -> LlmResponse:
        payload = {
            "model": self.model,
            "temperature": request.temperature,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
        }
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                response = requests.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
                response.raise_for_status()
                body = response.json()
                choice = body["choices"][0]["message"]["content"]
                usage = body.get("usage", {})
                return LlmResponse(choice,
                                   prompt_tokens=int(usage.get("prompt_tokens", 0)),
                                   completion_tokens=int(usage.get("completion_tokens", 0)))
            except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
                last_error = exc
                if attempt < self.max_retries:
                    logger.warning("chat request failed (attempt %d): %s", attempt + 1, exc)
                    time.sleep(self.retry_wait)
        raise LlmTransportError(f"chat request failed after {self.max_retries + 1} attempts: {last_error}")


class TranscriptLog:
    """Appends one JSON record per call for audit; credentials never enter."""

    def __init__(self, path):
        self.path = path

    def record(self, request: LlmRequest, response: LlmResponse) -> None:
        entry = {
            "model": request.model,
            "system": request.system,
            "user": request.user,
            "prompt_hash": prompt_hash(request),
            "reply": response.text,
        }
        with open(self.path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(entry, sort_keys=True) + "\n")


def answer(request: LlmRequest, client, transcript: TranscriptLog | None = None) -> str:
    """Run one completion and optionally log it; returns the reply text."""
    response = client.complete(request)
    if transcript is not None:
        transcript.record(request, response)
    return response.text
