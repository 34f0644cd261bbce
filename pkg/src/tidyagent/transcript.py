"""Session transcripts: a typed, append-only event log.

The transcript is the single source of truth for the experiment measures.
Counters are always recomputed from events, never cached, and events carry
no timestamps so that replayed sessions serialize byte-for-byte identically.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Callable, Iterable

from .language import word_count

SCHEMA_VERSION = 1

# kind → required payload fields (every event also has "seq" and "kind").
EVENT_FIELDS: dict[str, tuple[str, ...]] = {
    "llm_query": (
        "object_id",
        "purpose",  # goal | word | action
        "attempt",
        "temperature",
        "max_tokens",
        "prompt_sha256",
        "text",
    ),
    "llm_candidate_shown": ("object_id", "purpose", "rank", "text", "display_prob"),
    "instructor_yesno": (
        "object_id",
        "purpose",
        "question",
        "candidate",
        "rank",
        "answer",
        "llm_sourced",
    ),
    "instructor_utterance": ("object_id", "question", "text", "word_count"),
    "action_executed": ("object_id", "verb", "args", "rendered", "source", "ok"),
    "goal_outcome": ("object_id", "category", "subtask", "achieved"),
}

# optional extras per kind
EVENT_OPTIONAL: dict[str, tuple[str, ...]] = {
    "action_executed": ("error",),
    "goal_outcome": ("reason",),
}


class TranscriptError(Exception):
    pass


class EpisodeTranscript:
    """Ordered event log plus free-form run metadata."""

    def __init__(self, meta: dict | None = None):
        self.meta: dict = dict(meta or {})
        self.events: list[dict] = []
        self.observers: list[Callable[[dict], None]] = []

    # -- event emission -------------------------------------------------------

    def emit(self, kind: str, **fields) -> dict:
        if kind not in EVENT_FIELDS:
            raise TranscriptError(f"unknown event kind: {kind!r}")
        required = EVENT_FIELDS[kind]
        allowed = set(required) | set(EVENT_OPTIONAL.get(kind, ()))
        missing = [f for f in required if f not in fields]
        extra = [f for f in fields if f not in allowed]
        if missing or extra:
            raise TranscriptError(
                f"{kind}: missing fields {missing}, unexpected fields {extra}"
            )
        event = {"seq": len(self.events), "kind": kind}
        event.update({k: fields[k] for k in sorted(fields)})
        self.events.append(event)
        for observer in list(self.observers):
            observer(event)
        return event

    def by_kind(self, kind: str) -> list[dict]:
        return [e for e in self.events if e["kind"] == kind]

    # -- recomputed counters ----------------------------------------------------

    @property
    def llm_calls(self) -> int:
        return len(self.by_kind("llm_query"))

    @property
    def yesno_count(self) -> int:
        return len(self.by_kind("instructor_yesno"))

    @property
    def yes_count(self) -> int:
        return sum(1 for e in self.by_kind("instructor_yesno") if e["answer"])

    @property
    def utterance_count(self) -> int:
        return len(self.by_kind("instructor_utterance"))

    @property
    def word_total(self) -> int:
        return sum(e["word_count"] for e in self.by_kind("instructor_utterance"))

    @property
    def instruction_count(self) -> int:
        """Instructor interventions: utterances plus yes/no answers."""
        return self.utterance_count + self.yesno_count

    @property
    def outcome_count(self) -> int:
        return len(self.by_kind("goal_outcome"))

    @property
    def achieved_count(self) -> int:
        return sum(1 for e in self.by_kind("goal_outcome") if e["achieved"])

    @property
    def planner_calls(self) -> int:
        return int(self.meta.get("planner_calls", 0))

    def stats(self) -> dict:
        return {
            "llm_calls": self.llm_calls,
            "planner_calls": self.planner_calls,
            "yesno": self.yesno_count,
            "yes": self.yes_count,
            "utterances": self.utterance_count,
            "words": self.word_total,
            "instructions": self.instruction_count,
            "outcomes": self.outcome_count,
            "achieved": self.achieved_count,
        }

    # -- serialization ------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "meta": self.meta,
            "stats": self.stats(),
            "events": self.events,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def from_dict(cls, raw: dict) -> "EpisodeTranscript":
        if raw.get("schema_version") != SCHEMA_VERSION:
            raise TranscriptError(
                f"unsupported transcript schema_version: {raw.get('schema_version')!r}"
            )
        transcript = cls(meta=raw.get("meta", {}))
        for event in raw.get("events", []):
            kind = event.get("kind")
            payload = {
                k: v for k, v in event.items() if k not in ("seq", "kind")
            }
            transcript.emit(kind, **payload)
        return transcript

    @classmethod
    def load(cls, path: str | Path) -> "EpisodeTranscript":
        return cls.from_dict(json.loads(Path(path).read_text()))


def dialogue_view(events: Iterable[dict]) -> list[str]:
    """Human-readable dialogue lines (questions, answers, typed utterances),
    with [LM]-sourced questions tagged the way the instructor saw them."""
    lines = []
    for event in events:
        if event["kind"] == "instructor_yesno":
            tag = "[LM] " if event["llm_sourced"] else ""
            lines.append(f"Agent: {tag}{event['question']}")
            lines.append(f"Instructor: {'yes' if event['answer'] else 'no'}.")
        elif event["kind"] == "instructor_utterance":
            if event["question"]:
                lines.append(f"Agent: {event['question']}")
            lines.append(f"Instructor: {event['text']}")
    return lines


__all__ = [
    "EVENT_FIELDS",
    "EpisodeTranscript",
    "SCHEMA_VERSION",
    "TranscriptError",
    "dialogue_view",
    "word_count",
]
