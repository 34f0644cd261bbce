"""Prompt construction for goal and action retrieval.

Prompts are few-shot: a fixed block of worked examples, then the current
task. Instantiation is byte-exact; golden tests freeze the output. Goal
prompts end right after "(RESULT)" so the completion is the goal sentence;
action prompts embed the goal and end after the next step number
(optionally followed by a partial word whose completion is requested).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence


class MissingSlot(Exception):
    """A required template slot was empty."""


@dataclass(frozen=True)
class PromptTemplate:
    kind: str  # "goal" | "action"
    example_blocks: tuple[str, ...]


def load_templates(source: str | Path | dict) -> dict[str, PromptTemplate]:
    if isinstance(source, (str, Path)):
        raw = json.loads(Path(source).read_text())
    else:
        raw = source
    if raw.get("schema_version") != 1:
        raise ValueError(
            f"unsupported template schema_version: {raw.get('schema_version')!r}"
        )
    blocks = tuple(raw["example_blocks"])
    return {
        "goal": PromptTemplate("goal", blocks),
        "action": PromptTemplate("action", blocks),
    }


def _require(name: str, value: str | None) -> str:
    if not value:
        raise MissingSlot(name)
    return value


def instantiate(
    template: PromptTemplate,
    *,
    task: str,
    agent_location: str,
    object_description: str,
    object_location: str,
    goal_text: str | None = None,
    prior_steps: Sequence[str] = (),
    partial_word: str | None = None,
) -> str:
    """Build the full prompt text for one query.

    ``task`` and locations are display strings ("tidy kitchen", "kitchen");
    ``object_location`` is a phrase like "on table". For action prompts,
    ``goal_text`` is the goal sentence to embed (with its punctuation) and
    ``prior_steps`` are the step texts already taken, in order.
    """
    task = _require("task", task)
    agent_location = _require("agent_location", agent_location)
    object_description = _require("object_description", object_description)
    object_location = _require("object_location", object_location)

    parts = ["(EXAMPLES)"]
    parts.append("\n".join(template.example_blocks))
    parts.append("\n(END EXAMPLES)\n")
    parts.append(
        f"(TASK) Task name: {task}. Task context: I am in {agent_location}. "
        f"Aware of {object_description} {object_location}."
    )
    if template.kind == "goal":
        if goal_text is not None or prior_steps or partial_word is not None:
            raise ValueError("goal prompts take no goal_text, prior_steps, or partial_word")
        parts.append("\n(RESULT)")
        return "".join(parts)

    goal_text = _require("goal_text", goal_text)
    parts.append(f"\n(RESULT){goal_text}(END RESULT)\nSteps:\n")
    for i, step in enumerate(prior_steps, start=1):
        parts.append(f"{i}. {step}\n")
    parts.append(f"{len(prior_steps) + 1}.")
    if partial_word:
        parts.append(f" {partial_word}")
    return "".join(parts)
