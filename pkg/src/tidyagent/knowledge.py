"""Learned task memory: goals, policy rules, and retrospective generalization.

A solved episode is replayed backwards (goal regression): starting from the
goal predicates, each executed action contributes the preconditions that were
causally necessary, and those tests — with object identities replaced by the
variables X (the object being tidied) and D (the destination container) —
become a proposal rule and a selection rule per action. The tidied object's
category is generalized away in action rules; destination categories are kept.
Selection rules additionally test the goal predicates, so the policy only
fires when the current goal matches the one the rules were learned under.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .language import ConditionalGoal, GoalPredicate, TaskStructure, VAR, satisfied
from .world import (
    PrimitiveAction,
    WorldError,
    WorldState,
    apply,
    applicable,
)

SNAPSHOT_VERSION = 1

OBJ = "X"  # the object being tidied
DEST = "D"  # the destination container

GOAL_SELECTION_VERB = "select-next-goal"

# Ordered argument variables for each action verb.
ACTION_BINDINGS = {
    "open": (DEST,),
    "close": (DEST,),
    "pick-up": (OBJ,),
    "put-down": (OBJ, DEST),
}

Condition = tuple[str, ...]


class KnowledgeError(Exception):
    """Base class for knowledge-store failures."""


class InvalidEpisode(KnowledgeError):
    """An episode trace does not replay, or its goal is unsatisfied."""


@dataclass(frozen=True)
class PolicyRule:
    """One learned production.

    ``conditions`` is a set of canonical test tuples:
      ("task", t)                     the current subtask is t
      ("category", v, c)              variable v has category c
      ("property", v, p)              variable v has property p
      ("affordance", v, a)            variable v has affordance a
      ("gripper", "empty")            the gripper holds nothing
      ("in", v, w)                    variable v is located in/on w
      ("not-in", v, w)                variable v is not located in/on w
      ("goal-in", v, w)               the goal requires v in w
      ("goal-property", v, p)         the goal requires property p on v

    Goal tests appear only on selection rules. ``bindings`` lists the
    variables that become the action's arguments, in order.
    """

    name: str
    rule_kind: str  # "proposal" | "selection"
    action_verb: str
    conditions: frozenset[Condition]
    bindings: tuple[str, ...] = ()
    goal_key: tuple[str, str] | None = None  # select-next-goal payload

    def state_tests(self) -> frozenset[Condition]:
        return frozenset(c for c in self.conditions if not c[0].startswith("goal-"))

    def goal_tests(self) -> frozenset[Condition]:
        return frozenset(c for c in self.conditions if c[0].startswith("goal-"))

    def task(self) -> str | None:
        for condition in self.conditions:
            if condition[0] == "task":
                return condition[1]
        return None

    def signature(self) -> tuple:
        """Identity for subsumption: structure, not name."""
        return (self.rule_kind, self.action_verb, self.conditions, self.goal_key)


@dataclass(frozen=True)
class Episode:
    """One solved per-object episode, ready for retrospective analysis."""

    task: str
    object_id: str
    start_state: WorldState
    goal: ConditionalGoal
    trace: tuple[tuple[WorldState, PrimitiveAction], ...]
    end_state: WorldState


def validate_episode(episode: Episode) -> None:
    state = episode.start_state
    for i, (recorded, action) in enumerate(episode.trace):
        if recorded.canonical_key() != state.canonical_key():
            raise InvalidEpisode(f"trace step {i}: recorded state diverges from replay")
        try:
            state = apply(state, action)
        except WorldError as exc:
            raise InvalidEpisode(f"trace step {i}: {action.render()}: {exc}") from exc
    if state.canonical_key() != episode.end_state.canonical_key():
        raise InvalidEpisode("replayed trace does not reach the recorded end state")
    if not satisfied(episode.goal, episode.object_id, episode.end_state):
        raise InvalidEpisode("episode goal is not satisfied in the end state")
    if episode.object_id not in episode.start_state.objects:
        raise InvalidEpisode(f"unknown episode object: {episode.object_id}")


def _destination_id(episode: Episode) -> str | None:
    """The object the goal places X inside, grounded in the end state."""
    for predicate in episode.goal.predicates:
        if predicate.kind == "in" and predicate.subject == VAR:
            for obj in episode.end_state.by_category(predicate.value):
                return obj.id
    return None


def _goal_tests(
    goal: ConditionalGoal, object_category: str, dest_category: str | None
) -> frozenset[Condition]:
    """Goal predicates as canonical tests with X/D substituted."""

    def var_for(symbol: str) -> str:
        if symbol == VAR or symbol == object_category:
            return OBJ
        if dest_category is not None and symbol == dest_category:
            return DEST
        return symbol

    tests = set()
    for predicate in goal.predicates:
        if predicate.kind == "in":
            tests.add(("goal-in", var_for(predicate.subject), var_for(predicate.value)))
        else:
            tests.add(("goal-property", var_for(predicate.subject), predicate.value))
    return frozenset(tests)


def retrospective_generalize(episode: Episode) -> list[PolicyRule]:
    """Turn one solved episode into transferable rules.

    Returns the goal-selection rule first, then a (proposal, selection)
    pair per executed action, in execution order.
    """
    validate_episode(episode)
    task = episode.task
    obj = episode.start_state.obj(episode.object_id)
    dest_id = _destination_id(episode)
    dest = episode.end_state.obj(dest_id) if dest_id else None
    dest_category = dest.category if dest else None
    dest_openable = bool(dest and dest.affords("openable"))
    goal_tests = _goal_tests(episode.goal, obj.category, dest_category)

    rules: list[PolicyRule] = [
        PolicyRule(
            name=f"{task}-goal-{obj.category}",
            rule_kind="proposal",
            action_verb=GOAL_SELECTION_VERB,
            conditions=frozenset(
                {("task", task), ("category", OBJ, obj.category)}
            ),
            goal_key=(task, obj.category),
        )
    ]

    task_test = ("task", task)
    dest_cat_test = ("category", DEST, dest_category) if dest_category else None

    def emit(verb: str, proposal: set, selection_support: set) -> None:
        proposal = set(proposal) | {task_test}
        selection = set(selection_support) | {task_test} | set(goal_tests)
        if dest_cat_test:
            selection.add(dest_cat_test)
        rules.append(
            PolicyRule(
                name=f"{task}-{verb}-proposal-{dest_category or obj.category}",
                rule_kind="proposal",
                action_verb=verb,
                conditions=frozenset(proposal),
                bindings=ACTION_BINDINGS[verb],
            )
        )
        rules.append(
            PolicyRule(
                name=f"{task}-{verb}-selection-{dest_category or obj.category}",
                rule_kind="selection",
                action_verb=verb,
                conditions=frozenset(selection),
                bindings=ACTION_BINDINGS[verb],
            )
        )

    emitted: set[str] = set()
    for _, action in episode.trace:
        verb = action.verb
        if verb in emitted or verb not in ACTION_BINDINGS:
            continue
        emitted.add(verb)
        if verb == "open":
            emit(
                verb,
                proposal={
                    dest_cat_test,
                    ("property", DEST, "closed"),
                    ("gripper", "empty"),
                },
                selection_support={
                    ("property", OBJ, "not_grabbed"),
                    ("gripper", "empty"),
                    ("property", DEST, "closed"),
                },
            )
        elif verb == "close":
            emit(
                verb,
                proposal={
                    dest_cat_test,
                    ("property", DEST, "open"),
                    ("gripper", "empty"),
                },
                selection_support={
                    ("in", OBJ, DEST),
                    ("property", DEST, "open"),
                    ("gripper", "empty"),
                },
            )
        elif verb == "pick-up":
            selection_support = {
                ("property", OBJ, "not_grabbed"),
                ("gripper", "empty"),
            }
            if dest_id is not None:
                # X was picked up because the in-goal was still unsatisfied.
                selection_support.add(("not-in", OBJ, DEST))
            if dest_openable:
                selection_support.add(("property", DEST, "open"))
            emit(
                verb,
                proposal={
                    ("property", OBJ, "not_grabbed"),
                    ("affordance", OBJ, "grabbable"),
                    ("gripper", "empty"),
                },
                selection_support=selection_support,
            )
        elif verb == "put-down":
            proposal = {
                ("property", OBJ, "grabbed"),
                ("affordance", DEST, "receptacle"),
                dest_cat_test,
            }
            selection_support = {("property", OBJ, "grabbed")}
            if dest_openable:
                proposal.add(("property", DEST, "open"))
                selection_support.add(("property", DEST, "open"))
            emit(verb, proposal=proposal, selection_support=selection_support)
    return rules


def _holds(state: WorldState, condition: Condition, grounding: dict[str, str]) -> bool:
    kind = condition[0]
    if kind == "task" or kind.startswith("goal-"):
        return True  # checked separately
    if kind == "gripper":
        return state.gripper is None
    subject = grounding.get(condition[1], condition[1])
    if subject not in state.objects:
        return False
    obj = state.obj(subject)
    if kind == "category":
        return obj.category == condition[2]
    if kind == "property":
        return obj.has(condition[2])
    if kind == "affordance":
        return obj.affords(condition[2])
    if kind == "in":
        target = grounding.get(condition[2], condition[2])
        return obj.location == target
    if kind == "not-in":
        target = grounding.get(condition[2], condition[2])
        return obj.location != target
    raise KnowledgeError(f"unknown condition kind: {condition!r}")


def _needs_dest(rule: PolicyRule) -> bool:
    return any(
        DEST in condition[1:] for condition in rule.conditions if len(condition) > 1
    ) or DEST in rule.bindings


def _groundings(
    state: WorldState, rule: PolicyRule, object_id: str
) -> list[dict[str, str]]:
    """All variable groundings (X fixed to the object of interest, D over
    objects in id order) under which the rule's state tests hold."""
    candidates: list[dict[str, str]]
    if _needs_dest(rule):
        candidates = [
            {OBJ: object_id, DEST: dest_id}
            for dest_id in sorted(state.objects)
            if dest_id != object_id
        ]
    else:
        candidates = [{OBJ: object_id}]
    return [
        grounding
        for grounding in candidates
        if all(_holds(state, c, grounding) for c in rule.state_tests())
    ]


def _extend_grounding(
    state: WorldState, rule: PolicyRule, grounding: dict[str, str]
) -> list[dict[str, str]]:
    """Groundings for ``rule`` consistent with an existing one, binding D
    to each remaining object (id order) when the rule needs it."""
    if DEST in grounding or not _needs_dest(rule):
        return [dict(grounding)]
    return [
        {**grounding, DEST: dest_id}
        for dest_id in sorted(state.objects)
        if dest_id != grounding[OBJ]
    ]


class GoalMemory:
    """Semantic goal memory keyed by (task, object category)."""

    def __init__(self) -> None:
        self.entries: dict[tuple[str, str], ConditionalGoal] = {}

    def lookup(self, task: str, category: str) -> ConditionalGoal | None:
        return self.entries.get((task, category))

    def store(self, task: str, category: str, goal: ConditionalGoal) -> None:
        self.entries[(task, category)] = goal


class KnowledgeStore:
    """Goal memory plus learned policy rules, serializable between runs."""

    def __init__(self) -> None:
        self.goals = GoalMemory()
        self.rules: list[PolicyRule] = []
        self.task_structure: TaskStructure | None = None

    # -- goals ---------------------------------------------------------------

    def lookup_goal(self, task: str, category: str) -> ConditionalGoal | None:
        return self.goals.lookup(task, category)

    def store_goal(self, task: str, category: str, goal: ConditionalGoal) -> None:
        self.goals.store(task, category, goal)

    # -- rules ---------------------------------------------------------------

    def add_rules(self, rules: Iterable[PolicyRule]) -> list[PolicyRule]:
        """Add rules not subsumed by existing ones; returns those added."""
        existing = {rule.signature() for rule in self.rules}
        added = []
        for rule in rules:
            signature = rule.signature()
            if signature in existing:
                continue
            existing.add(signature)
            self.rules.append(rule)
            added.append(rule)
        return added

    def learn_from_episode(self, episode: Episode) -> list[PolicyRule]:
        return self.add_rules(retrospective_generalize(episode))

    def match_rules(
        self,
        state: WorldState,
        task: str,
        goal: ConditionalGoal,
        object_id: str,
    ) -> list[PrimitiveAction]:
        """Grounded actions the learned policy proposes and selects.

        A proposal must fire on the state, and a same-verb selection rule
        must both fire under the same grounding and carry goal tests equal
        to the current goal's. Result order: proposal insertion order, then
        destination object id. Empty means the policy is silent.
        """
        if object_id not in state.objects:
            return []
        object_category = state.obj(object_id).category
        actions: list[PrimitiveAction] = []
        seen: set[tuple] = set()
        selections = [
            rule
            for rule in self.rules
            if rule.rule_kind == "selection" and rule.task() == task
        ]
        for rule in self.rules:
            if rule.rule_kind != "proposal" or rule.action_verb not in ACTION_BINDINGS:
                continue
            if rule.task() != task:
                continue
            for grounding in _groundings(state, rule, object_id):
                selected = False
                for selection in selections:
                    if selection.action_verb != rule.action_verb:
                        continue
                    for extended in _extend_grounding(state, selection, grounding):
                        dest = state.obj(extended[DEST]) if DEST in extended else None
                        goal_tests = _goal_tests(
                            goal, object_category, dest.category if dest else None
                        )
                        if selection.goal_tests() != goal_tests:
                            continue
                        if all(
                            _holds(state, c, extended)
                            for c in selection.state_tests()
                        ):
                            selected = True
                            break
                    if selected:
                        break
                if not selected:
                    continue
                args = tuple(grounding[v] for v in rule.bindings)
                action = PrimitiveAction(rule.action_verb, args)
                key = (action.verb, action.args)
                if key not in seen:
                    seen.add(key)
                    actions.append(action)
        return actions

    # -- snapshots -------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema_version": SNAPSHOT_VERSION,
            "task_structure": (
                {
                    "task": self.task_structure.task,
                    "subtasks": [list(pair) for pair in self.task_structure.subtasks],
                }
                if self.task_structure
                else None
            ),
            "goals": [
                {
                    "task": task,
                    "category": category,
                    "goal": {
                        "condition_category": goal.condition_category,
                        "predicates": [
                            {"kind": p.kind, "subject": p.subject, "value": p.value}
                            for p in goal.predicates
                        ],
                        "source": goal.source,
                    },
                }
                for (task, category), goal in sorted(self.goals.entries.items())
            ],
            "rules": [
                {
                    "name": rule.name,
                    "rule_kind": rule.rule_kind,
                    "action_verb": rule.action_verb,
                    "conditions": sorted(list(c) for c in rule.conditions),
                    "bindings": list(rule.bindings),
                    "goal_key": list(rule.goal_key) if rule.goal_key else None,
                }
                for rule in self.rules
            ],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_dict(cls, raw: dict) -> "KnowledgeStore":
        if raw.get("schema_version") != SNAPSHOT_VERSION:
            raise KnowledgeError(
                f"unsupported snapshot schema_version: {raw.get('schema_version')!r}"
            )
        store = cls()
        if raw.get("task_structure"):
            ts = raw["task_structure"]
            store.task_structure = TaskStructure(
                task=ts["task"],
                subtasks=tuple((s, loc) for s, loc in ts["subtasks"]),
            )
        for entry in raw.get("goals", []):
            goal_raw = entry["goal"]
            goal = ConditionalGoal(
                condition_category=goal_raw["condition_category"],
                predicates=tuple(
                    GoalPredicate(p["kind"], p["subject"], p["value"])
                    for p in goal_raw["predicates"]
                ),
                source=goal_raw.get("source", "instructor"),
            )
            store.store_goal(entry["task"], entry["category"], goal)
        for entry in raw.get("rules", []):
            store.rules.append(
                PolicyRule(
                    name=entry["name"],
                    rule_kind=entry["rule_kind"],
                    action_verb=entry["action_verb"],
                    conditions=frozenset(tuple(c) for c in entry["conditions"]),
                    bindings=tuple(entry.get("bindings", [])),
                    goal_key=tuple(entry["goal_key"]) if entry.get("goal_key") else None,
                )
            )
        return store

    @classmethod
    def load(cls, path: str | Path) -> "KnowledgeStore":
        return cls.from_dict(json.loads(Path(path).read_text()))


def record_episode(
    task: str,
    object_id: str,
    start_state: WorldState,
    goal: ConditionalGoal,
    actions: Sequence[PrimitiveAction],
) -> Episode:
    """Build (and validate) an episode by replaying ``actions``."""
    trace = []
    state = start_state
    for action in actions:
        trace.append((state, action))
        state = apply(state, action)
    episode = Episode(
        task=task,
        object_id=object_id,
        start_state=start_state,
        goal=goal,
        trace=tuple(trace),
        end_state=state,
    )
    validate_episode(episode)
    return episode


__all__ = [
    "ACTION_BINDINGS",
    "Episode",
    "GoalMemory",
    "GOAL_SELECTION_VERB",
    "InvalidEpisode",
    "KnowledgeError",
    "KnowledgeStore",
    "PolicyRule",
    "record_episode",
    "retrospective_generalize",
    "validate_episode",
]
