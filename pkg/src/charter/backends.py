"""Completion backends: remote chat endpoint, scripted replay, and recording.

The scripted backend is a pure lookup keyed by (layer, role, task); it is what
makes whole runs bit-reproducible offline. The recording backend wraps the
remote one and appends every exchange to a transcript file so a live run can
later be replayed as a fixture.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from .agents import PromptBundle

logger = logging.getLogger(__name__)

API_KEY_ENV_VARS = ("CHARTER_API_KEY", "OPENAI_API_KEY")


class BackendError(Exception):
    pass


class MissingTranscriptEntry(BackendError):
    pass


@dataclass(frozen=True)
class CompletionRequest:
    layer: int
    role: str
    task_id: str
    bundle: PromptBundle

    def key(self) -> tuple[int, str, str]:
        return (self.layer, self.role, self.task_id)

    def sha256(self) -> str:
        return hashlib.sha256(self.bundle.text.encode("utf-8")).hexdigest()


def transcript_record(request: CompletionRequest, response: str) -> dict:
    return {
        "layer": request.layer,
        "role": request.role,
        "task": request.task_id,
        "request_sha256": request.sha256(),
        "response": response,
    }


class ScriptedBackend:
    """Replays a recorded transcript; thread-safe pure lookup."""

    def __init__(self, records: list[dict]):
        self._responses: dict[tuple[int, str, str], str] = {}
        for record in records:
            key = (int(record["layer"]), str(record["role"]), str(record.get("task", "")))
            self._responses[key] = str(record["response"])

    @classmethod
    def from_file(cls, path) -> "ScriptedBackend":
        records = []
        with open(path, "r", encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
        return cls(records)

    def complete(self, request: CompletionRequest) -> str:
        try:
            return self._responses[request.key()]
        except KeyError:
            raise MissingTranscriptEntry(
                f"no transcript entry for layer={request.layer} "
                f"role={request.role} task={request.task_id!r}"
            ) from None


class RemoteBackend:
    """Chat-completion client with bounded retries.

    The endpoint key comes from the environment only; it is never accepted as
    a flag or stored in config files.
    """

    def __init__(
        self,
        base_url: str = "https://api.openai.com/v1",
        model: str = "gpt-4o-2024-11-20",
        temperature: float = 0.0,
        retries: int = 2,
        timeout: float = 120.0,
        backoff: float = 1.0,
        session=None,
    ):
        import requests

        self.base_url = base_url.rstrip("/")
        self.model = model
        self.temperature = temperature
        self.retries = retries
        self.timeout = timeout
        self.backoff = backoff
        self.session = session or requests.Session()

    def _api_key(self) -> str:
        for name in API_KEY_ENV_VARS:
            value = os.environ.get(name)
            if value:
                return value
        raise BackendError(
            f"no API key found; set one of {', '.join(API_KEY_ENV_VARS)}"
        )

    def complete(self, request: CompletionRequest) -> str:
        url = f"{self.base_url}/chat/completions"
        payload = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": request.bundle.text}],
        }
        headers = {"Authorization": f"Bearer {self._api_key()}"}
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = self.session.post(url, json=payload, headers=headers, timeout=self.timeout)
                if resp.status_code >= 500:
                    last_error = BackendError(f"server error {resp.status_code}")
                elif resp.status_code >= 400:
                    raise BackendError(f"request failed with {resp.status_code}: {resp.text[:200]}")
                else:
                    data = resp.json()
                    return data["choices"][0]["message"]["content"]
            except BackendError as exc:
                if "request failed" in str(exc):
                    raise
                last_error = exc
            except Exception as exc:  # connection errors, malformed payloads
                last_error = exc
            if attempt < self.retries:
                time.sleep(self.backoff * (attempt + 1))
        raise BackendError(f"backend failed after {self.retries} retries: {last_error}")


class RecordingBackend:
    """Wraps a live backend and appends every exchange to a transcript file."""

    def __init__(self, inner, transcript_path):
        self.inner = inner
        self.transcript_path = Path(transcript_path)
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> str:
        response = self.inner.complete(request)
        record = transcript_record(request, response)
        with self._lock:
            with open(self.transcript_path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(record, sort_keys=True) + "\n")
        return response
