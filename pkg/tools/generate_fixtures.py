"""Generate the shipped data fixtures: worlds, scripts, cassettes, goldens.

Run from the repo root:

    python3 tools/generate_fixtures.py

Writes into src/tidyagent/data/:

    worlds/kitchen.json     30-object kitchen with ground-truth assertions
    worlds/plate.json       one-plate kitchen used by the golden episode
    scripts/kitchen.json    one instructor answer key for every condition
    scripts/plate.json      answer key for the plate episode
    cassettes/*.jsonl       recorded LLM traffic per LLM-bearing condition
    golden/plate_transcript.json

then re-runs every condition from the written files and checks the measures
against the expected tallies before printing the summary table.

The synthetic LLM serves per-category catalogs. Catalog sizes drive the
instructor tallies: a category with three unique candidate goals costs three
yes/no questions when all are rejected, two uniques cost two (the sampler
keeps repeating itself until the attempt budget runs out), one unique costs
one. Accepted categories put the correct goal at the wanted rank.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from helpers import (  # noqa: E402
    plate_script,
    plate_world_fixture,
    record_plate_cassette,
)
from tidyagent.agent import SessionConfig, learn_task  # noqa: E402
from tidyagent.harness import run_condition, report_table  # noqa: E402
from tidyagent.instructor import InstructorScript, ScriptedInstructor  # noqa: E402
from tidyagent.knowledge import KnowledgeStore  # noqa: E402
from tidyagent.llm.client import LlmQuery, LlmResponse, RecordingClient  # noqa: E402
from tidyagent.world import load_world  # noqa: E402

DATA = ROOT / "src" / "tidyagent" / "data"

# --- the canonical kitchen ----------------------------------------------------------

# (category, destination) per subtask; list order is episode order.
CLEAR = [
    ("ceramic-plate", "dishwasher"),
    ("coffee-mug", "dishwasher"),
    ("metal-fork", "dishwasher"),
    ("steel-knife", "dishwasher"),
    ("soup-bowl", "dishwasher"),
    ("drinking-glass", "dishwasher"),
    ("ketchup", "refrigerator"),
    ("mustard", "refrigerator"),
    ("milk-carton", "refrigerator"),
    ("plastic-bottle", "recycling-bin"),
    ("soda-can", "recycling-bin"),
    ("paper-plate", "trash"),
]
STORE = [
    ("cereal-box", "pantry"),
    ("bread-loaf", "pantry"),
    ("peanut-butter", "pantry"),
    ("coffee-tin", "pantry"),
    ("sugar-jar", "pantry"),
    ("empty-can", "recycling-bin"),
    ("dish-towel", "drawer"),
    ("serving-spoon", "drawer"),
    ("spatula", "drawer"),
]
UNLOAD = [
    ("dinner-plate", "cupboard"),
    ("salad-bowl", "cupboard"),
    ("tea-cup", "cupboard"),
    ("saucer", "cupboard"),
    ("wine-glass", "cupboard"),
    ("mixing-bowl", "cupboard"),
    ("water-pitcher", "cupboard"),
    ("metal-spoon", "drawer"),
    ("butter-knife", "drawer"),
]

SUBTASKS = [
    ("clear", "table", CLEAR),
    ("store", "counter", STORE),
    ("unload", "dish-rack", UNLOAD),
]

CLOSABLE = ("cupboard", "dishwasher", "drawer", "pantry", "refrigerator")
OPEN_RECEPTACLES = ("table", "counter", "dish-rack", "sink", "recycling-bin", "trash")

KITCHEN_INTRO = [
    "The task is to tidy the kitchen.",
    "Clear all the objects on the table.",
    "Store all the objects on the counter.",
    "Unload all the objects on the dish-rack.",
]


def kitchen_world() -> dict:
    locations = [
        {"id": loc, "category": loc, "affordances": ["receptacle"]}
        for loc in OPEN_RECEPTACLES
    ]
    locations += [
        {
            "id": loc,
            "category": loc,
            "affordances": ["receptacle", "openable", "closeable"],
            "properties": ["closed"],
        }
        for loc in CLOSABLE
    ]
    objects = []
    truth_objects = {}
    for _, start, catalog in SUBTASKS:
        for category, dest in catalog:
            object_id = f"{category}-1"
            objects.append(
                {
                    "id": object_id,
                    "category": category,
                    "properties": ["not_grabbed"],
                    "affordances": ["grabbable"],
                    "location": start,
                }
            )
            truth_objects[object_id] = {"in": dest}
    return {
        "schema_version": 1,
        "room": {"id": "kitchen", "category": "kitchen"},
        "robot_location": "kitchen",
        "locations": locations,
        "objects": objects,
        "truth": {"objects": truth_objects, "closures": list(CLOSABLE)},
    }


# --- sentences ----------------------------------------------------------------------


def article(noun: str) -> str:
    return "an" if noun[:1].lower() in "aeiou" else "a"


def bare_goal(category: str, dest: str) -> str:
    """The accept-list / candidate form of the correct goal (no period)."""
    text = f"The goal is that the {category} is in the {dest}"
    if dest in CLOSABLE:
        text += f" and the {dest} is closed"
    return text


def conditional_goal(category: str, dest: str) -> str:
    """The instructor's typed goal sentence."""
    text = (
        f"If the object is {article(category)} {category} then the goal is "
        f"that the object is in the {dest}"
    )
    if dest in CLOSABLE:
        text += f" and the {dest} is closed"
    return text + "."


def instructed_steps(category: str, dest: str) -> list[str]:
    """Numbered steps as the instructor would type them."""
    if dest in CLOSABLE:
        return [
            f"Open the {dest}",
            f"Pick up the {category}",
            f"Put the {category} in the {dest}",
            f"Close the {dest}",
        ]
    return [f"Pick up the {category}", f"Put the {category} in the {dest}"]


def llm_steps(category: str, dest: str) -> list[tuple[str, str]]:
    """(leading word, completion) pairs producing the LLM's phrasing."""
    if dest in CLOSABLE:
        return [
            ("Open", dest),
            ("Pick", f"up {category}"),
            ("Put", f"{category} into {dest}"),
            ("Close", dest),
        ]
    return [("Pick", f"up {category}"), ("Put", f"{category} into {dest}")]


def kitchen_script() -> InstructorScript:
    """One answer key serving every condition.

    Accept lists hold both phrasings of each correct answer (the LLM's and
    the instructor's own); fallbacks are what the instructor types when
    asked openly. Entries that a given condition never consults are inert.
    """
    goals: dict[str, dict] = {}
    actions: dict[str, dict] = {}
    for subtask, _, catalog in SUBTASKS:
        for category, dest in catalog:
            goals[f"{subtask}|{category}"] = {
                "accept": [bare_goal(category, dest)],
                "fallback": conditional_goal(category, dest),
            }
            typed = instructed_steps(category, dest)
            spoken = [f"{word} {rest}" for word, rest in llm_steps(category, dest)]
            for step, (instructed, llm_form) in enumerate(zip(typed, spoken)):
                actions[f"{subtask}|{category}|{step}"] = {
                    "accept": [llm_form, instructed],
                    "fallback": instructed,
                }
    return InstructorScript(task_intro=list(KITCHEN_INTRO), goals=goals, actions=actions)


# --- synthetic LLM ------------------------------------------------------------------

_CATEGORY_RE = re.compile(r"Aware of (?P<cat>\S+) (?:in|on) ")
_WORD_STEP_RE = re.compile(r"(\d+)\.$")
_COMPLETION_RE = re.compile(r"(\d+)\. (\S+)$")


def _single(text: str, prob: float, temperature: float) -> LlmResponse:
    return LlmResponse(
        text=text, tokens=((text, math.log(prob)),), temperature=temperature
    )


class SyntheticClient:
    """Serves catalog completions keyed by the prompt's category and step.

    Goal prompts consume a per-category list with a sticky tail: once the
    list is exhausted the last entry repeats, imitating a sampler that has
    run out of fresh ideas. Word queries return a fixed top-5; completion
    prompts consume per-(step, word) lists the same sticky way.
    """

    def __init__(
        self,
        goals: dict[str, list[tuple[str, float]]],
        words: dict[tuple[str, int], list[tuple[str, float]]] | None = None,
        completions: dict[tuple[str, int, str], list[tuple[str, float]]] | None = None,
    ):
        self.goals = goals
        self.words = words or {}
        self.completions = completions or {}
        self._served: dict[tuple, int] = {}

    def _next(self, key: tuple, entries: list[tuple[str, float]]) -> tuple[str, float]:
        n = self._served.get(key, 0)
        self._served[key] = n + 1
        return entries[min(n, len(entries) - 1)]

    def send(self, query: LlmQuery) -> LlmResponse:
        match = _CATEGORY_RE.search(query.prompt)
        if not match:
            raise AssertionError(f"prompt names no category: {query.prompt[-80:]!r}")
        category = match.group("cat")
        if query.want_top_alternatives:
            step = int(_WORD_STEP_RE.search(query.prompt).group(1))
            alternatives = self.words[(category, step)]
            word, prob = alternatives[0]
            return LlmResponse(
                text=word,
                tokens=((word, math.log(prob)),),
                temperature=query.temperature,
                alternatives=tuple((w, math.log(p)) for w, p in alternatives),
            )
        if query.prompt.endswith("(RESULT)"):
            text, prob = self._next(("goal", category), self.goals[category])
            return _single(text, prob, query.temperature)
        match = _COMPLETION_RE.search(query.prompt)
        step, word = int(match.group(1)), match.group(2)
        entries = self.completions[(category, step, word)]
        text, prob = self._next(("completion", category, step, word), entries)
        return _single(text, prob, query.temperature)


def _prob(condition: str, category: str, slot: str, base: float) -> float:
    """Deterministic jitter so displayed probabilities look sampled."""
    digest = hashlib.sha256(f"{condition}|{category}|{slot}".encode()).hexdigest()
    return round(base - (int(digest[:8], 16) % 1000) / 10000, 4)


# --- per-condition goal catalogs -----------------------------------------------------

# How each category's goal elicitation should play out, per condition.
RANK1 = "rank1"  # correct goal offered first and accepted
RANK2 = "rank2"  # correct goal offered second
REJECT3 = "reject3"  # three unique wrong goals, all rejected
REJECT2 = "reject2"  # two unique wrong goals (sampler repeats itself)
REJECT1 = "reject1"  # one unique wrong goal

GOAL_PLANS: dict[str, dict[str, str]] = {
    "instruction+search4+llm": {
        # 13 accepted at rank 1  -> 13 yes
        "ceramic-plate": RANK1, "coffee-mug": RANK1, "metal-fork": RANK1,
        "drinking-glass": RANK1, "ketchup": RANK1, "mustard": RANK1,
        "milk-carton": RANK1, "plastic-bottle": RANK1, "cereal-box": RANK1,
        "peanut-butter": RANK1, "dinner-plate": RANK1, "salad-bowl": RANK1,
        "metal-spoon": RANK1,
        # rejected: 4x3 + 5x2 + 8x1 uniques -> 30 no
        "steel-knife": REJECT3, "soup-bowl": REJECT3, "soda-can": REJECT3,
        "bread-loaf": REJECT3,
        "paper-plate": REJECT2, "coffee-tin": REJECT2, "sugar-jar": REJECT2,
        "empty-can": REJECT2, "dish-towel": REJECT2,
        "serving-spoon": REJECT1, "spatula": REJECT1, "tea-cup": REJECT1,
        "saucer": REJECT1, "wine-glass": REJECT1, "mixing-bowl": REJECT1,
        "water-pitcher": REJECT1, "butter-knife": REJECT1,
    },
    "instruction+search2+llm": {
        # 15 accepted at rank 1 -> 15 yes
        "ceramic-plate": RANK1, "coffee-mug": RANK1, "metal-fork": RANK1,
        "drinking-glass": RANK1, "ketchup": RANK1, "mustard": RANK1,
        "milk-carton": RANK1, "plastic-bottle": RANK1, "soda-can": RANK1,
        "cereal-box": RANK1, "peanut-butter": RANK1, "serving-spoon": RANK1,
        "dinner-plate": RANK1, "salad-bowl": RANK1, "metal-spoon": RANK1,
        # rejected: 10x3 + 5x2 uniques -> 40 no
        "steel-knife": REJECT3, "soup-bowl": REJECT3, "paper-plate": REJECT3,
        "bread-loaf": REJECT3, "coffee-tin": REJECT3, "sugar-jar": REJECT3,
        "empty-can": REJECT3, "tea-cup": REJECT3, "saucer": REJECT3,
        "wine-glass": REJECT3,
        "dish-towel": REJECT2, "spatula": REJECT2, "mixing-bowl": REJECT2,
        "water-pitcher": REJECT2, "butter-knife": REJECT2,
    },
    "instruction+llm": {
        # 11 accepted at rank 1, 11 at rank 2 -> 22 yes over 33 questions
        "ceramic-plate": RANK1, "coffee-mug": RANK1, "metal-fork": RANK1,
        "ketchup": RANK1, "mustard": RANK1, "plastic-bottle": RANK1,
        "cereal-box": RANK1, "peanut-butter": RANK1, "dinner-plate": RANK1,
        "salad-bowl": RANK1, "metal-spoon": RANK1,
        "drinking-glass": RANK2, "milk-carton": RANK2, "soda-can": RANK2,
        "paper-plate": RANK2, "bread-loaf": RANK2, "coffee-tin": RANK2,
        "sugar-jar": RANK2, "empty-can": RANK2, "serving-spoon": RANK2,
        "tea-cup": RANK2, "saucer": RANK2,
        # rejected: 8x3 uniques -> 24 no
        "steel-knife": REJECT3, "soup-bowl": REJECT3, "dish-towel": REJECT3,
        "spatula": REJECT3, "wine-glass": REJECT3, "mixing-bowl": REJECT3,
        "water-pitcher": REJECT3, "butter-knife": REJECT3,
    },
}

# What the unsupervised run believes each goal is (search+llm top candidates).
CORRECT = "correct"
SEARCH_TOPS: dict[str, str] = {
    # 14 objects whose top goal is right
    "ceramic-plate": CORRECT, "coffee-mug": CORRECT, "metal-fork": CORRECT,
    "drinking-glass": CORRECT, "ketchup": CORRECT, "mustard": CORRECT,
    "milk-carton": CORRECT, "peanut-butter": CORRECT, "serving-spoon": CORRECT,
    "spatula": CORRECT, "dinner-plate": CORRECT, "salad-bowl": CORRECT,
    "metal-spoon": CORRECT, "butter-knife": CORRECT,
    # empties filed in the refrigerator instead of the recycling
    "plastic-bottle": "refrigerator", "soda-can": "refrigerator",
    "empty-can": "refrigerator",
    # lidless bins imagined closed: unachievable, no action source
    "paper-plate": "trash+closed", "coffee-tin": "recycling-bin+closed",
    "sugar-jar": "recycling-bin+closed",
    # dry goods shelved in the cupboard instead of the pantry
    "cereal-box": "cupboard", "bread-loaf": "cupboard",
    # washables dropped in the sink or re-washed instead of put away
    "steel-knife": "sink", "soup-bowl": "sink", "wine-glass": "sink",
    "tea-cup": "dishwasher", "saucer": "dishwasher",
    # free-form answers the grammar cannot use
    "dish-towel": "uninterpretable", "mixing-bowl": "uninterpretable",
    "water-pitcher": "uninterpretable",
}

UNPARSEABLE = {
    "dish-towel": "The dish-towel needs to be folded and hung up to dry.",
    "mixing-bowl": "The goal is that the mixing-bowl is stacked away neatly.",
    "water-pitcher": "The goal is that the water-pitcher is emptied and rinsed.",
}


def wrong_goals(category: str, dest: str) -> list[str]:
    """Plausible-but-wrong candidate goals for one category (never accepted)."""
    pool = [
        f"The goal is that the {category} is in the sink.",
        f"The goal is that the {category} is clean and dry.",
        f"The goal is that the kitchen is tidy.",
        f"The goal is that the {category} is on the counter.",
    ]
    if dest == "sink":
        pool[0] = f"The goal is that the {category} is in the dishwasher."
    return pool


def goal_catalog(condition: str) -> dict[str, list[tuple[str, float]]]:
    plan = GOAL_PLANS[condition]
    catalog: dict[str, list[tuple[str, float]]] = {}
    for subtask, _, objects in SUBTASKS:
        for category, dest in objects:
            correct = bare_goal(category, dest) + "."
            wrongs = wrong_goals(category, dest)
            kind = plan[category]
            if kind == RANK1:
                texts = [correct, wrongs[0], wrongs[1]]
            elif kind == RANK2:
                texts = [wrongs[0], correct, wrongs[1]]
            elif kind == REJECT3:
                texts = [wrongs[0], wrongs[1], wrongs[2]]
            elif kind == REJECT2:
                texts = [wrongs[0], wrongs[1]]
            else:  # REJECT1
                texts = [wrongs[0]]
            bases = [0.93, 0.80, 0.65]
            catalog[category] = [
                (text, _prob(condition, category, f"goal{i}", bases[i]))
                for i, text in enumerate(texts)
            ]
    return catalog


def search_goal_catalog() -> dict[str, list[tuple[str, float]]]:
    condition = "search+llm"
    catalog: dict[str, list[tuple[str, float]]] = {}
    for subtask, _, objects in SUBTASKS:
        for category, dest in objects:
            top_kind = SEARCH_TOPS[category]
            if top_kind == CORRECT:
                top = bare_goal(category, dest) + "."
            elif top_kind == "uninterpretable":
                top = UNPARSEABLE[category]
            elif top_kind.endswith("+closed"):
                bin_dest = top_kind.removesuffix("+closed")
                top = (
                    f"The goal is that the {category} is in the {bin_dest} "
                    f"and the {bin_dest} is closed."
                )
            else:
                top = bare_goal(category, top_kind) + "."
            wrongs = [w for w in wrong_goals(category, dest) if w != top]
            texts = [top, wrongs[0], wrongs[1]]
            bases = [0.93, 0.80, 0.65]
            catalog[category] = [
                (text, _prob(condition, category, f"goal{i}", bases[i]))
                for i, text in enumerate(texts)
            ]
    return catalog


# --- per-condition action catalogs ---------------------------------------------------

# Distractor alternatives for the single-word step query. Every distractor
# sits below its threshold: known verbs need 0.09, unknown words 0.5.
WORD_TABLES = {
    "Open": [0.57, ("Go", 0.07), ("Check", 0.05), ("First", 0.03), ("The", 0.02)],
    "Pick": [0.72, ("Grab", 0.08), ("Take", 0.06), ("Go", 0.04), ("Then", 0.02)],
    "Put": [0.81, ("Place", 0.07), ("Set", 0.05), ("Drop", 0.03), ("The", 0.02)],
    "Close": [0.77, ("Shut", 0.08), ("Go", 0.04), ("Then", 0.03), ("The", 0.02)],
}

ALT_COMPLETIONS = {
    "Open": lambda category, dest: f"the {dest} door",
    "Pick": lambda category, dest: f"up the {category} carefully",
    "Put": lambda category, dest: f"{category} away",
    "Close": lambda category, dest: f"the {dest} door",
}


def teachers() -> list[tuple[str, str, str]]:
    """(subtask, category, dest) of the first object per (subtask, dest)."""
    rows = []
    for subtask, _, objects in SUBTASKS:
        seen: set[str] = set()
        for category, dest in objects:
            if dest not in seen:
                seen.add(dest)
                rows.append((subtask, category, dest))
    return rows


def action_catalogs(
    condition: str, llm_step_limit: int | None
) -> tuple[dict, dict]:
    """Word and completion catalogs for the steps the LLM will be asked.

    llm_step_limit caps how many leading steps of each teaching episode go
    through the LLM (2 when depth-2 search finishes the tail, None for all).
    In instruction+llm exactly one step is answered wrong-first, so one
    proposal lands at rank 2.
    """
    words: dict[tuple[str, int], list[tuple[str, float]]] = {}
    completions: dict[tuple[str, int, str], list[tuple[str, float]]] = {}
    for subtask, category, dest in teachers():
        steps = llm_steps(category, dest)
        if llm_step_limit is not None:
            if len(steps) <= llm_step_limit:
                continue  # search alone covers short episodes
            steps = steps[:llm_step_limit]
        for index, (word, rest) in enumerate(steps):
            step_number = index + 1
            top_prob, *distractors = WORD_TABLES[word]
            words[(category, step_number)] = [
                (word, _prob(condition, category, f"word{step_number}", top_prob))
            ] + list(distractors)
            alt = ALT_COMPLETIONS[word](category, dest)
            wrong_first = (
                condition == "instruction+llm"
                and category == "dish-towel"
                and step_number == 1
            )
            # Candidates are offered to the instructor in probability order,
            # so an overconfident wrong completion lands at rank 0 and costs
            # one rejection before the right one is accepted.
            correct_base, alt_base = (0.55, 0.70) if wrong_first else (0.98, 0.60)
            correct = (rest, _prob(condition, category, f"do{step_number}", correct_base))
            other = (alt, _prob(condition, category, f"alt{step_number}", alt_base))
            completions[(category, step_number, word)] = [correct, other]
    return words, completions


def synthetic_client(condition: str) -> SyntheticClient:
    if condition == "search+llm":
        return SyntheticClient(search_goal_catalog())
    if condition == "instruction+llm":
        words, completions = action_catalogs(condition, None)
    elif condition == "instruction+search2+llm":
        words, completions = action_catalogs(condition, 2)
    else:  # instruction+search4+llm: depth-4 search plans every episode
        words, completions = {}, {}
    return SyntheticClient(goal_catalog(condition), words, completions)


# --- recording and checking ----------------------------------------------------------

LLM_CONDITIONS = (
    "search+llm",
    "instruction+llm",
    "instruction+search2+llm",
    "instruction+search4+llm",
)

# condition -> (completion achieved/total, yes/yesno or None, instructions)
EXPECTED = {
    "instruction": ((35, 35), None, 64),
    "instruction+search": ((35, 35), None, 34),
    "search+llm": ((19, 35), None, 4),
    "instruction+llm": ((35, 35), (52, 88), 100),
    "instruction+search2+llm": ((35, 35), (27, 67), 86),
    "instruction+search4+llm": ((35, 35), (13, 43), 64),
}


def record_kitchen_cassette(condition: str, path: Path) -> None:
    client = RecordingClient(synthetic_client(condition))
    world = load_world(kitchen_world())
    learn_task(
        world,
        SessionConfig.from_condition(condition),
        ScriptedInstructor(kitchen_script()),
        client,
        KnowledgeStore(),
    )
    client.cassette.save(path)


def main() -> int:
    for sub in ("worlds", "scripts", "cassettes", "golden"):
        (DATA / sub).mkdir(parents=True, exist_ok=True)

    world_path = DATA / "worlds" / "kitchen.json"
    world_path.write_text(json.dumps(kitchen_world(), indent=2) + "\n")
    script_path = DATA / "scripts" / "kitchen.json"
    kitchen_script().save(script_path)

    for condition in LLM_CONDITIONS:
        slug = condition.replace("+", "_")
        record_kitchen_cassette(condition, DATA / "cassettes" / f"kitchen_{slug}.jsonl")

    plate_world_path = DATA / "worlds" / "plate.json"
    plate_world_path.write_text(json.dumps(plate_world_fixture(), indent=2) + "\n")
    plate_script_path = DATA / "scripts" / "plate.json"
    plate_script().save(plate_script_path)
    for condition in ("instruction+search2+llm", "search+llm"):
        slug = condition.replace("+", "_")
        record_plate_cassette(condition, DATA / "cassettes" / f"plate_{slug}.jsonl")

    golden, _ = run_condition(
        "instruction+search2+llm",
        plate_world_path,
        plate_script_path,
        DATA / "cassettes" / "plate_instruction_search2_llm.jsonl",
    )
    golden.save(DATA / "golden" / "plate_transcript.json")

    # -- check every condition from the files just written --
    failures = []
    results = []
    for condition, (completion, relevance, instructions) in EXPECTED.items():
        cassette = None
        if condition in LLM_CONDITIONS:
            slug = condition.replace("+", "_")
            cassette = DATA / "cassettes" / f"kitchen_{slug}.jsonl"
        transcript, measures = run_condition(
            condition, world_path, script_path, cassette
        )
        results.append(measures)
        achieved, total = completion
        expect_completion = 100.0 * achieved / total
        if abs(measures.completion_rate - expect_completion) > 1e-9:
            failures.append(
                f"{condition}: completion {measures.completion_rate:.4f} != "
                f"{expect_completion:.4f} "
                f"({transcript.achieved_count}/{transcript.outcome_count})"
            )
            for event in transcript.by_kind("goal_outcome"):
                if not event["achieved"]:
                    failures.append(
                        f"    failed: {event['object_id']} "
                        f"({event.get('reason', '?')})"
                    )
        if relevance is None:
            if measures.relevance_pct is not None:
                failures.append(f"{condition}: expected no yes/no questions")
        else:
            yes, yesno = relevance
            if measures.n_yesno != yesno or transcript.yes_count != yes:
                failures.append(
                    f"{condition}: yes/yesno {transcript.yes_count}/"
                    f"{measures.n_yesno} != {yes}/{yesno}"
                )
        if measures.n_instructions != instructions:
            failures.append(
                f"{condition}: n_instructions {measures.n_instructions} != "
                f"{instructions}"
            )

    print(report_table(results), end="")
    if failures:
        print("\nFIXTURE CHECK FAILURES:")
        for failure in failures:
            print(f"  {failure}")
        return 1
    print("\nall condition tallies match the targets")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
