"""Completion clients: live HTTP, plus record/replay for determinism.

Every query carries its full sampling parameters. A recording client
persists (query, response) pairs to a JSON-lines cassette; a replay client
serves them back keyed by the query fingerprint, consuming stochastic
(temperature > 0) entries in recorded order. Replays of a recorded run are
therefore bit-for-bit deterministic and never touch the network.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Protocol

import httpx


class ClientError(Exception):
    """Base class for completion-client failures."""


class ClientTimeout(ClientError):
    pass


class RateLimited(ClientError):
    def __init__(self, retry_after: float | None):
        super().__init__(
            "rate limited" + (f", retry after {retry_after}s" if retry_after else "")
        )
        self.retry_after = retry_after


class ProtocolError(ClientError):
    pass


class MismatchError(ClientError):
    """A replayed query has no matching cassette entry."""


@dataclass(frozen=True)
class LlmQuery:
    """One completion request."""

    prompt: str
    temperature: float
    max_tokens: int
    want_top_alternatives: bool = False

    def fingerprint(self) -> tuple[str, float, int, bool]:
        digest = hashlib.sha256(self.prompt.encode("utf-8")).hexdigest()
        return (digest, self.temperature, self.max_tokens, self.want_top_alternatives)

    def prompt_sha256(self) -> str:
        return hashlib.sha256(self.prompt.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class LlmResponse:
    """One completion: text, per-token log probabilities, and (for
    single-token queries) the top alternatives considered."""

    text: str
    tokens: tuple[tuple[str, float], ...]
    temperature: float
    alternatives: tuple[tuple[str, float], ...] = ()

    @property
    def mean_logprob(self) -> float:
        """Arithmetic mean of per-token log probabilities."""
        if not self.tokens:
            return float("-inf")
        return sum(lp for _, lp in self.tokens) / len(self.tokens)

    @property
    def display_prob(self) -> float:
        """exp(mean log probability), the number shown next to candidates."""
        return math.exp(self.mean_logprob)


class CompletionClient(Protocol):
    def send(self, query: LlmQuery) -> LlmResponse: ...


@dataclass
class Cassette:
    """An ordered list of recorded (query, response) pairs."""

    entries: list[dict] = field(default_factory=list)

    @staticmethod
    def entry(query: LlmQuery, response: LlmResponse) -> dict:
        return {
            "prompt": query.prompt,
            "temperature": query.temperature,
            "max_tokens": query.max_tokens,
            "single_token": query.want_top_alternatives,
            "text": response.text,
            "tokens": [[t, lp] for t, lp in response.tokens],
            "alternatives": [[w, lp] for w, lp in response.alternatives],
        }

    def append(self, query: LlmQuery, response: LlmResponse) -> None:
        self.entries.append(self.entry(query, response))

    def save(self, path: str | Path) -> None:
        lines = [json.dumps(e, sort_keys=True) for e in self.entries]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))

    @classmethod
    def load(cls, path: str | Path) -> "Cassette":
        entries = []
        for i, line in enumerate(Path(path).read_text().splitlines()):
            line = line.strip()
            if not line:
                continue
            try:
                entries.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ClientError(f"{path}:{i + 1}: invalid cassette line: {exc}") from exc
        return cls(entries)


def _entry_fingerprint(entry: dict) -> tuple[str, float, int, bool]:
    digest = hashlib.sha256(entry["prompt"].encode("utf-8")).hexdigest()
    return (
        digest,
        float(entry["temperature"]),
        int(entry["max_tokens"]),
        bool(entry.get("single_token", False)),
    )


def _entry_response(entry: dict) -> LlmResponse:
    return LlmResponse(
        text=entry["text"],
        tokens=tuple((t, float(lp)) for t, lp in entry.get("tokens", [])),
        temperature=float(entry["temperature"]),
        alternatives=tuple(
            (w, float(lp)) for w, lp in entry.get("alternatives", [])
        ),
    )


class ReplayClient:
    """Serves recorded responses; raises MismatchError off-script.

    Queries are matched by fingerprint (prompt hash, temperature,
    max_tokens, single-token flag). Entries sharing a fingerprint are
    served in recorded order; deterministic (temperature 0) queries may
    repeat their last entry once the bucket drains.
    """

    def __init__(self, cassette: Cassette):
        self._buckets: dict[tuple, deque[dict]] = {}
        self._last: dict[tuple, dict] = {}
        self._by_prompt: dict[str, list[dict]] = {}
        for entry in cassette.entries:
            fp = _entry_fingerprint(entry)
            self._buckets.setdefault(fp, deque()).append(entry)
            self._by_prompt.setdefault(fp[0], []).append(entry)

    def send(self, query: LlmQuery) -> LlmResponse:
        fp = query.fingerprint()
        bucket = self._buckets.get(fp)
        if bucket:
            entry = bucket.popleft()
            self._last[fp] = entry
            return _entry_response(entry)
        if query.temperature == 0.0 and fp in self._last:
            return _entry_response(self._last[fp])
        raise MismatchError(self._describe_mismatch(query))

    def _describe_mismatch(self, query: LlmQuery) -> str:
        sha = query.prompt_sha256()
        head = query.prompt[:60].replace("\n", "\\n")
        tail = query.prompt[-60:].replace("\n", "\\n")
        same_prompt = self._by_prompt.get(sha, [])
        if same_prompt:
            seen = sorted(
                {
                    (e["temperature"], e["max_tokens"], bool(e.get("single_token")))
                    for e in same_prompt
                }
            )
            detail = (
                f"prompt is recorded but no entry remains for "
                f"temperature={query.temperature}, max_tokens={query.max_tokens}, "
                f"single_token={query.want_top_alternatives}; recorded variants: {seen}"
            )
        else:
            detail = "prompt was never recorded"
        return (
            f"no cassette entry for query (sha256={sha[:12]}..., "
            f"head={head!r}, tail={tail!r}): {detail}"
        )


class RecordingClient:
    """Wraps another client and records every exchange into a cassette."""

    def __init__(self, inner: CompletionClient, cassette: Cassette | None = None):
        self.inner = inner
        self.cassette = cassette if cassette is not None else Cassette()

    def send(self, query: LlmQuery) -> LlmResponse:
        response = self.inner.send(query)
        self.cassette.append(query, response)
        return response


@dataclass(frozen=True)
class LiveConfig:
    """Connection settings for an OpenAI-style completions endpoint."""

    endpoint: str
    model: str
    api_key_env: str = "TIDYAGENT_API_KEY"
    timeout_s: float = 30.0
    stop: tuple[str, ...] = ("(END RESULT)", "(END TASK)")

    @classmethod
    def load(cls, path: str | Path | None = None) -> "LiveConfig":
        """Read settings from a JSON file, then apply environment overrides
        (TIDYAGENT_ENDPOINT, TIDYAGENT_MODEL, TIDYAGENT_API_KEY_ENV)."""
        raw: dict = {}
        if path is not None:
            raw = json.loads(Path(path).read_text())
        endpoint = os.environ.get("TIDYAGENT_ENDPOINT", raw.get("endpoint"))
        model = os.environ.get("TIDYAGENT_MODEL", raw.get("model"))
        if not endpoint or not model:
            raise ClientError(
                "live client needs an endpoint and model (config file or "
                "TIDYAGENT_ENDPOINT / TIDYAGENT_MODEL)"
            )
        return cls(
            endpoint=endpoint,
            model=model,
            api_key_env=os.environ.get(
                "TIDYAGENT_API_KEY_ENV", raw.get("api_key_env", "TIDYAGENT_API_KEY")
            ),
            timeout_s=float(raw.get("timeout_s", 30.0)),
            stop=tuple(raw.get("stop", ("(END RESULT)", "(END TASK)"))),
        )


class LiveClient:
    """Talks to a completions endpoint with log probabilities enabled.

    Requests always pin top_p to 1 so temperature is the only sampling
    knob, and ask for the top-5 alternatives on single-token queries.
    """

    def __init__(self, config: LiveConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        self._http = httpx.Client(
            timeout=config.timeout_s, transport=transport
        )

    def _api_key(self) -> str:
        key = os.environ.get(self.config.api_key_env, "")
        if not key:
            raise ClientError(
                f"missing API key: set the {self.config.api_key_env} environment variable"
            )
        return key

    def build_request_body(self, query: LlmQuery) -> dict:
        return {
            "model": self.config.model,
            "prompt": query.prompt,
            "temperature": query.temperature,
            "max_tokens": query.max_tokens,
            "top_p": 1,
            "logprobs": 5 if query.want_top_alternatives else 1,
            "stop": list(self.config.stop),
        }

    def send(self, query: LlmQuery) -> LlmResponse:
        url = self.config.endpoint.rstrip("/") + "/completions"
        try:
            resp = self._http.post(
                url,
                json=self.build_request_body(query),
                headers={"Authorization": f"Bearer {self._api_key()}"},
            )
        except httpx.TimeoutException as exc:
            raise ClientTimeout(f"completion request timed out: {exc}") from exc
        except httpx.HTTPError as exc:
            raise ProtocolError(f"transport failure: {exc}") from exc
        if resp.status_code == 429:
            retry_after = resp.headers.get("retry-after")
            raise RateLimited(float(retry_after) if retry_after else None)
        if resp.status_code >= 400:
            raise ProtocolError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            payload = resp.json()
            choice = payload["choices"][0]
            text = choice["text"]
            logprobs = choice.get("logprobs") or {}
            tokens = tuple(
                zip(
                    logprobs.get("tokens", []),
                    (float(x) for x in logprobs.get("token_logprobs", [])),
                )
            )
            alternatives: tuple[tuple[str, float], ...] = ()
            if query.want_top_alternatives:
                top = (logprobs.get("top_logprobs") or [{}])[0]
                alternatives = tuple(
                    sorted(
                        ((w.strip(), float(lp)) for w, lp in top.items()),
                        key=lambda pair: -pair[1],
                    )
                )
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed completion payload: {exc}") from exc
        return LlmResponse(
            text=text,
            tokens=tokens,
            temperature=query.temperature,
            alternatives=alternatives,
        )
