"""Restricted natural-language layer: goals, action imperatives, task intros.

The grammar is deliberately small. Goals are conditional containment
statements ("If the object is a ceramic-plate then the goal is that the
object is in the dishwasher and the dishwasher is closed"); actions are
short imperatives ("Open dishwasher", "Pick up ceramic-plate from table").
Anything outside the grammar raises a typed error so callers can decide
whether to drop a machine-generated candidate or re-ask a human.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .world import GRIPPER, PrimitiveAction, WorldState

# Subject placeholder bound to the object of interest at evaluation time.
VAR = "X"

_ARTICLES = {"the", "a", "an"}
_IN_PREPOSITIONS = {"in", "into", "inside", "on", "onto", "to"}


class LanguageError(Exception):
    """Base class for utterances the agent cannot use."""


class Uninterpretable(LanguageError):
    """The utterance does not fit the goal grammar or names unknown symbols."""


class UnknownVerb(LanguageError):
    def __init__(self, word: str):
        super().__init__(f"unknown verb: {word!r}")
        self.word = word


class UngroundableNounPhrase(LanguageError):
    def __init__(self, phrase: str):
        super().__init__(f"cannot ground noun phrase: {phrase!r}")
        self.phrase = phrase


@dataclass(frozen=True)
class Lexicon:
    """Verb synonyms, goal property vocabulary, and phrasing hints."""

    verbs: dict[str, tuple[str, ...]]
    goal_properties: frozenset[str]
    on_categories: frozenset[str]
    category_synonyms: dict[str, str]

    @property
    def known_words(self) -> frozenset[str]:
        """Single words the agent recognizes as verbs (for word filtering)."""
        words = set()
        for synonyms in self.verbs.values():
            for phrase in synonyms:
                words.add(phrase.split()[0])
        return frozenset(words)

    def verb_synonyms_longest_first(self) -> list[tuple[str, str]]:
        pairs = [
            (syn, verb) for verb, syns in self.verbs.items() for syn in syns
        ]
        return sorted(pairs, key=lambda p: -len(p[0].split()))

    def canonical_category(self, phrase: str) -> str:
        token = "-".join(phrase.lower().split())
        return self.category_synonyms.get(token, token)


def load_lexicon(source: str | Path | dict) -> Lexicon:
    if isinstance(source, (str, Path)):
        raw = json.loads(Path(source).read_text())
    else:
        raw = source
    if raw.get("schema_version") != 1:
        raise ValueError(f"unsupported lexicon schema_version: {raw.get('schema_version')!r}")
    return Lexicon(
        verbs={k: tuple(v) for k, v in raw["verbs"].items()},
        goal_properties=frozenset(raw["goal_properties"]),
        on_categories=frozenset(raw.get("on_categories", [])),
        category_synonyms=dict(raw.get("category_synonyms", {})),
    )


@dataclass(frozen=True)
class GoalPredicate:
    """One conjunct of a goal: containment or a property test.

    ``subject`` is either VAR (the object the goal is about) or a category;
    ``value`` is the container category for ``in`` and the property symbol
    for ``property``.
    """

    kind: str  # "in" | "property"
    subject: str
    value: str


@dataclass(frozen=True)
class ConditionalGoal:
    """A goal that applies to any object of ``condition_category``."""

    condition_category: str
    predicates: tuple[GoalPredicate, ...]
    source: str = "instructor"  # instructor | llm | builtin

    def key_predicates(self) -> frozenset[tuple[str, str, str]]:
        """Order-insensitive canonical form for comparisons."""
        return frozenset((p.kind, p.subject, p.value) for p in self.predicates)


@dataclass(frozen=True)
class ActionStep:
    """A parsed imperative before grounding: verb plus noun phrases."""

    verb: str
    object_phrase: str
    destination_phrase: str | None = None


@dataclass(frozen=True)
class TaskStructure:
    """A task symbol plus subtasks scoped to starting locations."""

    task: str
    subtasks: tuple[tuple[str, str], ...]  # (subtask symbol, location category)

    def subtask_for_location(self, location_category: str) -> str:
        for subtask, loc in self.subtasks:
            if loc == location_category:
                return subtask
        return self.task


def word_count(text: str) -> int:
    """Words = whitespace-separated tokens; punctuation stays attached."""
    return len(text.split())


def _indefinite(noun: str) -> str:
    return "an" if noun[:1].lower() in "aeiou" else "a"


def _normalize_sentence(text: str) -> str:
    text = " ".join(text.split())
    while text.endswith((".", "!", "?")):
        text = text[:-1].rstrip()
    return text


def _strip_articles(tokens: list[str]) -> list[str]:
    return [t for t in tokens if t not in _ARTICLES]


_GOAL_PREFIX_RE = re.compile(
    r"^if the object is (?:a|an) (?P<cat>.+?)[, ]*then (?P<rest>.+)$"
)
_GOAL_BODY_RE = re.compile(r"^the goal is that (?P<body>.+)$")
_IN_CLAUSE_RE = re.compile(r"^the (?P<subj>.+?) is (?:in|on|inside) the (?P<cont>.+)$")
_PROP_CLAUSE_RE = re.compile(r"^the (?P<subj>.+?) is (?P<prop>.+)$")


def parse_goal(
    text: str,
    lexicon: Lexicon,
    *,
    context_category: str | None = None,
    state: WorldState | None = None,
    source: str = "instructor",
) -> ConditionalGoal:
    """Parse a goal utterance into a ConditionalGoal.

    Bare goals ("The goal is that the ceramic-plate is in the cupboard...")
    take their condition category from ``context_category`` when given,
    else from the first containment subject. When ``state`` is supplied,
    container categories must name existing receptacles.

    Raises Uninterpretable when the utterance does not fit the grammar.
    """
    sentence = _normalize_sentence(text).lower()
    if not sentence:
        raise Uninterpretable("empty goal utterance")

    condition: str | None = None
    m = _GOAL_PREFIX_RE.match(sentence)
    if m:
        condition = lexicon.canonical_category(m.group("cat"))
        sentence = m.group("rest").strip()

    m = _GOAL_BODY_RE.match(sentence)
    if not m:
        raise Uninterpretable(f"not a goal statement: {text!r}")
    clauses = [c.strip() for c in m.group("body").split(" and ")]

    if condition is None:
        condition = context_category

    raw_predicates: list[tuple[str, str, str]] = []
    for clause in clauses:
        m = _IN_CLAUSE_RE.match(clause)
        if m:
            subj = lexicon.canonical_category(m.group("subj"))
            cont = lexicon.canonical_category(m.group("cont"))
            raw_predicates.append(("in", subj, cont))
            continue
        m = _PROP_CLAUSE_RE.match(clause)
        if m:
            subj = lexicon.canonical_category(m.group("subj"))
            prop = "_".join(m.group("prop").split())
            if prop not in lexicon.goal_properties:
                raise Uninterpretable(f"unknown property in goal: {m.group('prop')!r}")
            raw_predicates.append(("property", subj, prop))
            continue
        raise Uninterpretable(f"cannot parse goal clause: {clause!r}")

    if condition is None:
        for kind, subj, _ in raw_predicates:
            if kind == "in" and subj != "object":
                condition = subj
                break
    if condition is None:
        raise Uninterpretable("cannot determine which objects the goal applies to")

    predicates = []
    for kind, subj, value in raw_predicates:
        if subj == "object" or subj == condition:
            subj = VAR
        predicates.append(GoalPredicate(kind, subj, value))

    if state is not None:
        for p in predicates:
            targets = (
                [p.value] if p.kind == "in" else ([] if p.subject == VAR else [p.subject])
            )
            for cat in targets:
                found = state.by_category(cat)
                if not found:
                    raise Uninterpretable(f"no such object category: {cat!r}")
                if p.kind == "in" and not any(o.affords("receptacle") for o in found):
                    raise Uninterpretable(f"not a receptacle: {cat!r}")

    return ConditionalGoal(condition, tuple(predicates), source=source)


def render_goal(goal: ConditionalGoal) -> str:
    """Render the canonical conditional sentence (no trailing period)."""
    clauses = []
    for p in goal.predicates:
        subject = "the object" if p.subject == VAR else f"the {p.subject}"
        if p.kind == "in":
            clauses.append(f"{subject} is in the {p.value}")
        else:
            clauses.append(f"{subject} is {p.value.replace('_', ' ')}")
    article = _indefinite(goal.condition_category)
    return (
        f"If the object is {article} {goal.condition_category} "
        f"then the goal is that " + " and ".join(clauses)
    )


def _ground_category(
    state: WorldState, category: str, object_of_interest: str | None
) -> str | None:
    """Resolve a category to an object id: prefer the object of interest,
    otherwise the lowest id. None when nothing matches."""
    candidates = state.by_category(category)
    if not candidates:
        return None
    if object_of_interest is not None:
        for o in candidates:
            if o.id == object_of_interest:
                return o.id
    return candidates[0].id


def satisfied(goal: ConditionalGoal, object_id: str, state: WorldState) -> bool:
    """Evaluate the goal's predicates with VAR bound to ``object_id``.

    Category references ground to the lowest-id instance. A predicate over
    a missing category is simply false, never an error.
    """
    for p in goal.predicates:
        if p.subject == VAR:
            subject_id = object_id
        else:
            subject_id = _ground_category(state, p.subject, None)
            if subject_id is None:
                return False
        subject = state.obj(subject_id)
        if p.kind == "in":
            loc = subject.location
            if loc is None or loc == GRIPPER:
                return False
            if state.obj(loc).category != p.value:
                return False
        else:
            if p.value not in subject.properties:
                return False
    return True


def parse_action_step(text: str, lexicon: Lexicon) -> ActionStep:
    """Split an imperative into verb and noun phrases (no grounding)."""
    sentence = _normalize_sentence(text).lower()
    if not sentence:
        raise Uninterpretable("empty action utterance")
    tokens = sentence.split()

    verb = None
    rest: list[str] = []
    for synonym, canonical in lexicon.verb_synonyms_longest_first():
        syn_tokens = synonym.split()
        if tokens[: len(syn_tokens)] == syn_tokens:
            verb = canonical
            rest = tokens[len(syn_tokens):]
            break
    if verb is None:
        raise UnknownVerb(tokens[0])
    if not rest:
        raise Uninterpretable(f"missing object in action: {text!r}")

    # "pick up X from Y": the source phrase is context, not an argument.
    if verb == "pick-up" and "from" in rest:
        rest = rest[: rest.index("from")]

    if verb == "put-down":
        split_at = None
        for i, tok in enumerate(rest):
            if i > 0 and tok in _IN_PREPOSITIONS:
                split_at = i
                break
        if split_at is None:
            raise Uninterpretable(f"missing destination in action: {text!r}")
        obj_phrase = " ".join(_strip_articles(rest[:split_at]))
        dest_phrase = " ".join(_strip_articles(rest[split_at + 1:]))
        if not obj_phrase or not dest_phrase:
            raise Uninterpretable(f"cannot parse action: {text!r}")
        return ActionStep(verb, obj_phrase, dest_phrase)

    obj_phrase = " ".join(_strip_articles(rest))
    if not obj_phrase:
        raise Uninterpretable(f"missing object in action: {text!r}")
    return ActionStep(verb, obj_phrase)


def parse_action(
    text: str,
    state: WorldState,
    lexicon: Lexicon,
    *,
    object_of_interest: str | None = None,
) -> PrimitiveAction:
    """Parse and ground an imperative to a primitive action.

    Grounding prefers the object of interest when several objects share a
    category, then the lowest object id. Raises UnknownVerb or
    UngroundableNounPhrase when the text cannot be used.
    """
    step = parse_action_step(text, lexicon)
    obj_id = _ground_category(
        state, lexicon.canonical_category(step.object_phrase), object_of_interest
    )
    if obj_id is None:
        raise UngroundableNounPhrase(step.object_phrase)
    if step.verb == "put-down":
        dest_id = _ground_category(
            state, lexicon.canonical_category(step.destination_phrase), None
        )
        if dest_id is None:
            raise UngroundableNounPhrase(step.destination_phrase)
        return PrimitiveAction("put-down", (obj_id, dest_id))
    return PrimitiveAction(step.verb, (obj_id,))


def render_action(action: PrimitiveAction, state: WorldState) -> str:
    """Render an action the way candidates are displayed: category names,
    no articles, no trailing period."""
    if action.verb == "pick-up":
        return f"Pick up {state.obj(action.args[0]).category}"
    if action.verb == "put-down":
        held = state.obj(action.args[0]).category
        dest = state.obj(action.args[1]).category
        return f"Put {held} in {dest}"
    if action.verb == "open":
        return f"Open {state.obj(action.args[0]).category}"
    if action.verb == "close":
        return f"Close {state.obj(action.args[0]).category}"
    return f"Go to {state.obj(action.args[0]).category}"


_TASK_RE = re.compile(r"^the task is (?:to )?(?P<name>.+)$")
_SUBTASK_RE = re.compile(
    r"^(?P<verb>[a-z-]+) all (?:the )?objects (?:in|on) the (?P<loc>.+)$"
)


def parse_task_intro(utterances: list[str], lexicon: Lexicon) -> TaskStructure:
    """Parse the instructor's task naming and subtask descriptions.

    Expected shape: "The task is tidy kitchen." followed by zero or more
    "Clear all objects on the table." style sentences.
    """
    task: str | None = None
    subtasks: list[tuple[str, str]] = []
    for utterance in utterances:
        sentence = _normalize_sentence(utterance).lower()
        m = _TASK_RE.match(sentence)
        if m and task is None:
            task = "-".join(m.group("name").split())
            continue
        m = _SUBTASK_RE.match(sentence)
        if m:
            subtasks.append(
                (m.group("verb"), lexicon.canonical_category(m.group("loc")))
            )
            continue
        raise Uninterpretable(f"cannot parse task introduction: {utterance!r}")
    if task is None:
        raise Uninterpretable("task introduction never named the task")
    return TaskStructure(task, tuple(subtasks))


def task_display(symbol: str) -> str:
    """Render a task symbol for prompts: hyphens become spaces."""
    return symbol.replace("-", " ")


def location_phrase(
    state: WorldState, object_id: str, lexicon: Lexicon, *, spoken: bool = False
) -> str:
    """Describe where an object is: "on table" (prompt style) or
    "on the table" (spoken style)."""
    obj = state.obj(object_id)
    loc = obj.location
    if loc == GRIPPER:
        return "in the gripper" if spoken else "in gripper"
    if loc is None:
        loc_category = obj.category
    else:
        loc_category = state.obj(loc).category
    prep = "on" if loc_category in lexicon.on_categories else "in"
    spaced = loc_category.replace("-", " ")
    return f"{prep} the {spaced}" if spoken else f"{prep} {spaced}"
