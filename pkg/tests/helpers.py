"""Shared builders: test worlds, a scripted LLM stub, and the plate episode."""

from __future__ import annotations

import json
import math
from pathlib import Path

from tidyagent.agent import SessionConfig, learn_task
from tidyagent.instructor import InstructorScript, ScriptedInstructor
from tidyagent.knowledge import KnowledgeStore
from tidyagent.llm.client import LlmQuery, LlmResponse, RecordingClient
from tidyagent.world import WorldState, load_world


def kitchen_fixture() -> dict:
    """A small kitchen: one plate on the table, two closable cabinets."""
    return {
        "schema_version": 1,
        "room": {"id": "kitchen", "category": "kitchen"},
        "robot_location": "kitchen",
        "locations": [
            {"id": "table", "category": "table", "affordances": ["receptacle"]},
            {"id": "sink", "category": "sink", "affordances": ["receptacle"]},
            {
                "id": "cupboard",
                "category": "cupboard",
                "affordances": ["receptacle", "openable", "closeable"],
                "properties": ["closed"],
            },
            {
                "id": "dishwasher",
                "category": "dishwasher",
                "affordances": ["receptacle", "openable", "closeable"],
                "properties": ["closed"],
            },
        ],
        "objects": [
            {
                "id": "plate-1",
                "category": "ceramic-plate",
                "properties": ["not_grabbed"],
                "affordances": ["grabbable"],
                "location": "table",
            },
        ],
    }


def kitchen_state() -> WorldState:
    return load_world(kitchen_fixture())


INTRO = [
    "The task is to tidy the kitchen.",
    "Clear all the objects on the table.",
]

PLATE_GOAL_SENTENCE = (
    "If the object is a ceramic-plate then the goal is that the object is in "
    "the dishwasher and the dishwasher is closed."
)
FORK_GOAL_SENTENCE = (
    "If the object is a metal-fork then the goal is that the object is in "
    "the dishwasher and the dishwasher is closed."
)

GOAL_CANDIDATES = [
    ("The goal is that the ceramic-plate is in the cupboard.", 0.915),
    ("The goal is that the dishwasher is turned-on.", 0.901),
    ("The goal is that the sink is full-of-water.", 0.866),
]
# First action choice: two verbs survive the thresholds, three words do not.
WORDS_STEP_1 = [
    ("Open", 0.549),
    ("Pick", 0.206),
    ("Check", 0.067),
    ("Go", 0.065),
    ("If", 0.027),
]
# Second action choice: only "Pick" survives.
WORDS_STEP_2 = [
    ("Pick", 0.907),
    ("Go", 0.040),
    ("Open", 0.030),
    ("Close", 0.020),
    ("The", 0.010),
]
COMPLETIONS = {"Open": ("dishwasher", 0.999), "Pick": ("up ceramic-plate", 0.990)}


def single_token_response(text: str, prob: float, temperature: float) -> LlmResponse:
    return LlmResponse(
        text=text, tokens=((text, math.log(prob)),), temperature=temperature
    )


class StubClient:
    """Scripted completions keyed by prompt shape.

    Goal prompts (ending in "(RESULT)") rotate through ``goals``; single-token
    word queries consume ``words`` lists in order; per-word completion prompts
    answer from ``completions`` using the partial word the prompt ends with.
    """

    def __init__(self, goals=(), words=(), completions=None):
        self.goals = list(goals)
        self.words = [list(w) for w in words]
        self.completions = dict(completions or {})
        self.queries: list[LlmQuery] = []
        self._goal_calls = 0

    def send(self, query: LlmQuery) -> LlmResponse:
        self.queries.append(query)
        if query.want_top_alternatives:
            alternatives = tuple(
                (word, math.log(prob)) for word, prob in self.words.pop(0)
            )
            word, logprob = alternatives[0]
            return LlmResponse(
                text=word,
                tokens=((word, logprob),),
                temperature=query.temperature,
                alternatives=alternatives,
            )
        if query.prompt.endswith("(RESULT)"):
            text, prob = self.goals[self._goal_calls % len(self.goals)]
            self._goal_calls += 1
            return single_token_response(text, prob, query.temperature)
        partial_word = query.prompt.rsplit(" ", 1)[-1]
        text, prob = self.completions[partial_word]
        return single_token_response(text, prob, query.temperature)


def golden_client() -> StubClient:
    return StubClient(
        goals=GOAL_CANDIDATES,
        words=[WORDS_STEP_1, WORDS_STEP_2],
        completions=COMPLETIONS,
    )


def plate_script() -> InstructorScript:
    """One answer key that serves every condition on the plate world.

    Rejection decisions cover the LLM goal candidates; numbered action
    fallbacks cover conditions that must teach each step by hand; accepted
    steps 0 and 1 cover the two LLM-proposed actions.
    """
    return InstructorScript(
        task_intro=list(INTRO),
        goals={
            "clear|ceramic-plate": {
                "decisions": [False, False, False],
                "fallback": PLATE_GOAL_SENTENCE,
            }
        },
        actions={
            "clear|ceramic-plate|0": {
                "decisions": [True],
                "fallback": "Open the dishwasher",
            },
            "clear|ceramic-plate|1": {
                "decisions": [True],
                "fallback": "Pick up the ceramic-plate",
            },
            "clear|ceramic-plate|2": {
                "fallback": "Put the ceramic-plate in the dishwasher"
            },
            "clear|ceramic-plate|3": {"fallback": "Close the dishwasher"},
        },
    )


def plate_world_fixture() -> dict:
    """Plate world plus ground-truth assertions for outcome judging."""
    fixture = kitchen_fixture()
    fixture["truth"] = {
        "objects": {"plate-1": {"in": "dishwasher"}},
        "closures": ["cupboard", "dishwasher"],
    }
    return fixture


def record_plate_cassette(condition: str, path: Path) -> None:
    """Record the plate episode's LLM traffic under ``condition`` to a file."""
    client = RecordingClient(golden_client())
    learn_task(
        kitchen_state(),
        SessionConfig.from_condition(condition),
        ScriptedInstructor(plate_script()),
        client,
        KnowledgeStore(),
    )
    client.cassette.save(path)


def write_plate_bundle(directory: Path) -> tuple[Path, Path, dict[str, Path]]:
    """Materialize world/script/cassette files for file-driven runs.

    Returns (world_path, script_path, cassettes) where cassettes maps the two
    LLM-bearing plate conditions to recorded replay files.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    world_path = directory / "plate.json"
    world_path.write_text(json.dumps(plate_world_fixture(), indent=2) + "\n")
    script_path = directory / "plate_script.json"
    plate_script().save(script_path)
    cassettes: dict[str, Path] = {}
    for condition in ("instruction+search2+llm", "search+llm"):
        slug = condition.replace("+", "_")
        cassette_path = directory / f"plate_{slug}.jsonl"
        record_plate_cassette(condition, cassette_path)
        cassettes[condition] = cassette_path
    return world_path, script_path, cassettes


def bigger_kitchen_fixture() -> dict:
    """Kitchen with several movables for walk-based property tests."""
    fixture = kitchen_fixture()
    fixture["objects"].extend(
        [
            {
                "id": "fork-1",
                "category": "metal-fork",
                "properties": ["not_grabbed"],
                "affordances": ["grabbable"],
                "location": "table",
            },
            {
                "id": "bottle-1",
                "category": "plastic-bottle",
                "properties": ["not_grabbed"],
                "affordances": ["grabbable"],
                "location": "sink",
            },
            {
                "id": "mug-1",
                "category": "coffee-mug",
                "properties": ["not_grabbed"],
                "affordances": ["grabbable"],
                "location": "cupboard",
            },
        ]
    )
    return fixture
