"""Instructor abstractions: scripted answer keys and a common dialogue shape.

The agent talks to an instructor through two blocking calls: ask_yesno for
candidate confirmation and ask_open for free-text fallback. The scripted
instructor answers from a closed-world key file so experiment runs are
deterministic; the live session server implements the same interface.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

SCRIPT_VERSION = 1


class ScriptGap(Exception):
    """The scripted instructor has no answer for a key the agent needs."""

    def __init__(self, key: str, detail: str = ""):
        super().__init__(f"no scripted answer for {key}" + (f": {detail}" if detail else ""))
        self.key = key


@dataclass(frozen=True)
class DialogueTurn:
    """One agent-side question.

    ``purpose`` is "goal" or "action"; ``llm_sourced`` marks questions whose
    content came from the language model (rendered to a human with an [LM]
    tag). ``candidate`` carries the machine-readable candidate text for
    yes/no questions; ``step`` is the per-object action index; ``rank`` the
    candidate's position in the ranked list.
    """

    purpose: str
    subtask: str
    category: str
    text: str
    candidate: str = ""
    step: int = 0
    rank: int = 0
    llm_sourced: bool = False

    def render(self) -> str:
        return ("[LM] " if self.llm_sourced else "") + self.text


class Instructor(Protocol):
    def task_intro(self) -> list[str]: ...

    def ask_yesno(self, turn: DialogueTurn) -> bool: ...

    def ask_open(self, turn: DialogueTurn) -> str: ...


def goal_key(subtask: str, category: str) -> str:
    return f"{subtask}|{category}"


def action_key(subtask: str, category: str, step: int) -> str:
    return f"{subtask}|{category}|{step}"


@dataclass
class InstructorScript:
    """Closed-world answer key.

    ``goals`` maps "subtask|category" to an entry; ``actions`` maps
    "subtask|category|step". An entry may contain:
      accept:    list of candidate texts answered "yes" (anything else "no")
      decisions: list of booleans indexed by candidate rank (overrides accept)
      fallback:  the utterance typed when asked the open question
    """

    task_intro: list[str] = field(default_factory=list)
    goals: dict[str, dict] = field(default_factory=dict)
    actions: dict[str, dict] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "InstructorScript":
        if raw.get("schema_version") != SCRIPT_VERSION:
            raise ValueError(
                f"unsupported script schema_version: {raw.get('schema_version')!r}"
            )
        return cls(
            task_intro=list(raw.get("task_intro", [])),
            goals=dict(raw.get("goals", {})),
            actions=dict(raw.get("actions", {})),
        )

    @classmethod
    def load(cls, path: str | Path) -> "InstructorScript":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "schema_version": SCRIPT_VERSION,
            "task_intro": self.task_intro,
            "goals": self.goals,
            "actions": self.actions,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


class ScriptedInstructor:
    """Answers every question from an InstructorScript, or raises ScriptGap."""

    def __init__(self, script: InstructorScript):
        self.script = script

    def task_intro(self) -> list[str]:
        if not self.script.task_intro:
            raise ScriptGap("task_intro")
        return list(self.script.task_intro)

    def _entry(self, turn: DialogueTurn) -> tuple[str, dict]:
        if turn.purpose == "goal":
            key = goal_key(turn.subtask, turn.category)
            entry = self.script.goals.get(key)
        elif turn.purpose == "action":
            key = action_key(turn.subtask, turn.category, turn.step)
            entry = self.script.actions.get(key)
        else:
            raise ScriptGap(turn.purpose, "unknown question purpose")
        if entry is None:
            raise ScriptGap(key)
        return key, entry

    def ask_yesno(self, turn: DialogueTurn) -> bool:
        key, entry = self._entry(turn)
        decisions = entry.get("decisions")
        if decisions is not None:
            if turn.rank >= len(decisions):
                raise ScriptGap(key, f"no decision for rank {turn.rank}")
            return bool(decisions[turn.rank])
        if "accept" in entry:
            return turn.candidate in entry["accept"]
        raise ScriptGap(key, "entry has neither decisions nor accept")

    def ask_open(self, turn: DialogueTurn) -> str:
        key, entry = self._entry(turn)
        fallback = entry.get("fallback", "")
        if not fallback:
            raise ScriptGap(key, "no fallback utterance")
        return fallback


__all__ = [
    "DialogueTurn",
    "Instructor",
    "InstructorScript",
    "SCRIPT_VERSION",
    "ScriptGap",
    "ScriptedInstructor",
    "action_key",
    "goal_key",
]
