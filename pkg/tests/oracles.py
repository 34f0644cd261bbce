"""Independent oracles used to cross-check the implementation.

The planning oracle is a plain breadth-first search written against the
world model's public operations only; it shares no code with the
iterative-deepening planner it is used to verify.
"""

from __future__ import annotations

import random
from collections import deque

from tidyagent.language import VAR, ConditionalGoal, GoalPredicate, satisfied
from tidyagent.world import (
    PrimitiveAction,
    WorldState,
    apply,
    candidate_actions,
    load_world,
)


def bfs_plan(
    state: WorldState, goal: ConditionalGoal, object_id: str, max_depth: int
) -> list[PrimitiveAction] | None:
    """Shortest plan within max_depth by breadth-first search, else None."""
    if satisfied(goal, object_id, state):
        return []
    seen = {state.canonical_key()}
    frontier: deque[tuple[WorldState, list[PrimitiveAction]]] = deque([(state, [])])
    while frontier:
        current, path = frontier.popleft()
        if len(path) >= max_depth:
            continue
        for action in candidate_actions(current):
            successor = apply(current, action)
            key = successor.canonical_key()
            if key in seen:
                continue
            seen.add(key)
            next_path = path + [action]
            if satisfied(goal, object_id, successor):
                return next_path
            frontier.append((successor, next_path))
    return None


def random_planning_case(
    rng: random.Random,
) -> tuple[WorldState, ConditionalGoal, str]:
    """A small random world (<= 8 objects beside the room) plus a goal.

    Receptacles may be openable; movables may start inside closed
    containers; some goals are unsatisfiable on purpose (a closed-property
    on a container that cannot close).
    """
    n_receptacles = rng.randint(1, 3)
    receptacles = []
    for i in range(n_receptacles):
        openable = rng.random() < 0.5
        entry = {
            "id": f"r{i}",
            "category": f"box-{i}",
            "affordances": ["receptacle"] + (["openable", "closeable"] if openable else []),
        }
        if openable:
            entry["properties"] = ["closed" if rng.random() < 0.5 else "open"]
        receptacles.append(entry)

    n_movables = rng.randint(1, min(4, 8 - n_receptacles))
    movables = []
    for i in range(n_movables):
        spots = ["floor"] + [r["id"] for r in receptacles]
        movables.append(
            {
                "id": f"m{i}",
                "category": f"item-{i}" if rng.random() < 0.8 else "item-0",
                "properties": ["not_grabbed"],
                "affordances": ["grabbable"],
                "location": rng.choice(spots),
            }
        )

    fixture = {
        "schema_version": 1,
        "room": {"id": "room", "category": "room"},
        "robot_location": "room",
        "locations": [
            {"id": "floor", "category": "floor", "affordances": ["receptacle"]},
            *receptacles,
        ],
        "objects": movables,
    }
    state = load_world(fixture)

    target = rng.choice(receptacles)
    subject = rng.choice(movables)
    predicates = [GoalPredicate("in", VAR, target["category"])]
    if "openable" in target["affordances"] and rng.random() < 0.6:
        predicates.append(GoalPredicate("property", target["category"], "closed"))
    elif rng.random() < 0.15:
        # unsatisfiable on purpose: this container cannot close
        predicates.append(GoalPredicate("property", target["category"], "closed"))
    goal = ConditionalGoal(subject["category"], tuple(predicates), source="builtin")
    return state, goal, subject["id"]
