"""Bounded planning: iterative-deepening depth-first search over the world.

The search is domain general. Candidate actions come straight from the
world model's applicability rules in a fixed order (open < close <
pick-up < put-down, then object id), which makes tie-breaking between
equal-length plans deterministic. Duplicate states are pruned two ways:
revisits along the current branch are skipped outright, and a
transposition table remembers how much remaining depth failed to solve a
state so later visits with no more budget are cut off.
"""

from __future__ import annotations

from dataclasses import dataclass

from .language import ConditionalGoal, satisfied
from .world import PrimitiveAction, WorldState, apply, candidate_actions


@dataclass(frozen=True)
class Plan:
    """A sequence of actions that reaches the goal from the start state."""

    steps: tuple[PrimitiveAction, ...]
    depth_used: int


@dataclass(frozen=True)
class NotFound:
    """No plan exists within the depth bound."""

    depth_exhausted: int


def plan_iddfs(
    state: WorldState,
    goal: ConditionalGoal,
    object_id: str,
    max_depth: int,
) -> Plan | NotFound:
    """Find a shortest plan of length <= max_depth achieving ``goal`` for
    ``object_id``, or NotFound.

    Depth limits are iterated 0..max_depth, so the returned plan is
    shortest; among equal-length plans the deterministic expansion order
    decides. The input state is never modified.
    """
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")

    # state key -> largest remaining depth already proven fruitless
    exhausted: dict[tuple, int] = {}

    def dfs(
        current: WorldState,
        remaining: int,
        path_keys: frozenset[tuple],
    ) -> list[PrimitiveAction] | None:
        if satisfied(goal, object_id, current):
            return []
        if remaining == 0:
            return None
        key = current.canonical_key()
        if exhausted.get(key, -1) >= remaining:
            return None
        for action in candidate_actions(current):
            successor = apply(current, action)
            succ_key = successor.canonical_key()
            if succ_key in path_keys:
                continue
            tail = dfs(successor, remaining - 1, path_keys | {succ_key})
            if tail is not None:
                return [action, *tail]
        if remaining > exhausted.get(key, -1):
            exhausted[key] = remaining
        return None

    start_key = state.canonical_key()
    for depth in range(max_depth + 1):
        steps = dfs(state, depth, frozenset({start_key}))
        if steps is not None:
            return Plan(tuple(steps), depth_used=depth)
    return NotFound(depth_exhausted=max_depth)
