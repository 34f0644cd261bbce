"""Symbolic world model for a single-room household environment.

The world is a flat collection of objects. Fixed furniture (tables,
appliances, bins) and movable items are all ``WorldObject`` instances;
containment is expressed through each object's ``location`` field, which
names another object, the robot gripper, or nothing (the room root).
Four primitive manipulation actions operate on the world: ``pick-up``,
``put-down``, ``open`` and ``close``. Locomotion is implicit: anything in
the room counts as reachable, so moving about contributes no actions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

GRIPPER = "gripper"

SCHEMA_VERSION = 1

# Closed vocabularies. Fixtures using symbols outside these sets are rejected.
PROPERTIES = frozenset(
    {"open", "closed", "grabbed", "not_grabbed", "reachable", "not_reachable"}
)
AFFORDANCES = frozenset({"grabbable", "openable", "closeable", "receptacle"})

VERBS = ("open", "close", "pick-up", "put-down")
# Deterministic expansion order for planning: open < close < pick-up < put-down.
VERB_ORDER = {verb: i for i, verb in enumerate(VERBS)}


class WorldError(Exception):
    """Base class for world model failures."""


class FixtureError(WorldError):
    """A world fixture file is malformed or violates an invariant."""


class PreconditionViolation(WorldError):
    """An action was applied in a state where it is not applicable."""


@dataclass(frozen=True)
class WorldObject:
    """One object in the world, fixed or movable.

    ``location`` names the id of the containing object, the gripper, or
    ``None`` for the room root object itself.
    """

    id: str
    category: str
    properties: frozenset[str] = frozenset()
    affordances: frozenset[str] = frozenset()
    location: str | None = None

    def has(self, prop: str) -> bool:
        return prop in self.properties

    def affords(self, affordance: str) -> bool:
        return affordance in self.affordances


@dataclass(frozen=True)
class PrimitiveAction:
    """A grounded primitive action: verb plus object-id arguments."""

    verb: str
    args: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.verb not in VERB_ORDER and self.verb != "approach":
            raise ValueError(f"unknown verb: {self.verb!r}")

    @property
    def target(self) -> str:
        return self.args[0]

    def render(self) -> str:
        if self.verb == "put-down":
            return f"put-down {self.args[0]} {self.args[1]}"
        return f"{self.verb} {self.args[0]}"

    def sort_key(self) -> tuple[int, tuple[str, ...]]:
        return (VERB_ORDER.get(self.verb, len(VERBS)), self.args)


@dataclass(frozen=True)
class WorldState:
    """Immutable snapshot of every object plus the robot's own state.

    ``apply`` returns a new state; existing states are never mutated, so
    planners may keep many of them without copying defensively.
    """

    objects: Mapping[str, WorldObject]
    robot_location: str
    gripper: str | None = None

    def obj(self, object_id: str) -> WorldObject:
        try:
            return self.objects[object_id]
        except KeyError:
            raise WorldError(f"no such object: {object_id!r}") from None

    def by_category(self, category: str) -> list[WorldObject]:
        """All objects of a category, ordered by id for determinism."""
        return sorted(
            (o for o in self.objects.values() if o.category == category),
            key=lambda o: o.id,
        )

    def movables(self) -> list[WorldObject]:
        """Grabbable objects in fixture insertion order."""
        return [o for o in self.objects.values() if o.affords("grabbable")]

    def canonical_key(self) -> tuple:
        """Hashable canonical form used for duplicate-state detection."""
        return (
            self.robot_location,
            self.gripper,
            tuple(
                (o.id, o.location, tuple(sorted(o.properties)))
                for o in sorted(self.objects.values(), key=lambda o: o.id)
            ),
        )


def applicable(state: WorldState, action: PrimitiveAction) -> bool:
    """True when ``action``'s preconditions hold in ``state``.

    pick-up: target grabbable and not grabbed, gripper empty.
    put-down: target is held, destination is a receptacle and (if openable) open.
    open: target openable and closed, gripper empty.
    close: target closeable and open, gripper empty.

    Malformed actions (wrong arity, unknown ids) are simply not applicable.
    """
    verb = action.verb
    if verb == "approach":
        return len(action.args) == 1 and action.args[0] in state.objects
    if verb == "put-down":
        if len(action.args) != 2:
            return False
    elif len(action.args) != 1:
        return False
    if any(a != GRIPPER and a not in state.objects for a in action.args):
        return False

    if verb == "pick-up":
        target = state.objects[action.args[0]]
        return (
            state.gripper is None
            and target.affords("grabbable")
            and target.has("not_grabbed")
            and not target.has("not_reachable")
        )
    if verb == "put-down":
        held_id, dest_id = action.args
        if state.gripper != held_id:
            return False
        dest = state.objects[dest_id]
        if not dest.affords("receptacle"):
            return False
        if dest.affords("openable") and not dest.has("open"):
            return False
        return True
    if verb == "open":
        target = state.objects[action.args[0]]
        return state.gripper is None and target.affords("openable") and target.has("closed")
    if verb == "close":
        target = state.objects[action.args[0]]
        return state.gripper is None and target.affords("closeable") and target.has("open")
    return False


def _swap(props: frozenset[str], remove: str, add: str) -> frozenset[str]:
    return (props - {remove}) | {add}


def apply(state: WorldState, action: PrimitiveAction) -> WorldState:
    """Apply an applicable action, returning the successor state.

    Raises PreconditionViolation otherwise. ``approach`` is a zero-effect
    stand-in for implicit locomotion.
    """
    if not applicable(state, action):
        raise PreconditionViolation(f"not applicable: {action.render()}")
    if action.verb == "approach":
        return state

    objects = dict(state.objects)
    if action.verb == "pick-up":
        target = objects[action.args[0]]
        objects[target.id] = replace(
            target,
            location=GRIPPER,
            properties=_swap(target.properties, "not_grabbed", "grabbed"),
        )
        return WorldState(objects, state.robot_location, gripper=target.id)
    if action.verb == "put-down":
        held_id, dest_id = action.args
        held = objects[held_id]
        objects[held_id] = replace(
            held,
            location=dest_id,
            properties=_swap(held.properties, "grabbed", "not_grabbed"),
        )
        return WorldState(objects, state.robot_location, gripper=None)
    if action.verb == "open":
        target = objects[action.args[0]]
        objects[target.id] = replace(
            target, properties=_swap(target.properties, "closed", "open")
        )
        return WorldState(objects, state.robot_location, gripper=state.gripper)
    # close
    target = objects[action.args[0]]
    objects[target.id] = replace(
        target, properties=_swap(target.properties, "open", "closed")
    )
    return WorldState(objects, state.robot_location, gripper=state.gripper)


def candidate_actions(state: WorldState) -> list[PrimitiveAction]:
    """Every applicable primitive action in deterministic order.

    Order: open < close < pick-up < put-down, then by object id (and
    destination id for put-down). This fixes planner tie-breaking.
    """
    out: list[PrimitiveAction] = []
    ids = sorted(state.objects)
    if state.gripper is None:
        for oid in ids:
            o = state.objects[oid]
            if o.affords("openable") and o.has("closed"):
                out.append(PrimitiveAction("open", (oid,)))
        for oid in ids:
            o = state.objects[oid]
            if o.affords("closeable") and o.has("open"):
                out.append(PrimitiveAction("close", (oid,)))
        for oid in ids:
            o = state.objects[oid]
            if o.affords("grabbable") and o.has("not_grabbed") and not o.has("not_reachable"):
                out.append(PrimitiveAction("pick-up", (oid,)))
    else:
        held = state.gripper
        for oid in ids:
            o = state.objects[oid]
            if not o.affords("receptacle") or oid == held:
                continue
            if o.affords("openable") and not o.has("open"):
                continue
            out.append(PrimitiveAction("put-down", (held, oid)))
    return out


def validate(state: WorldState) -> None:
    """Check structural invariants, raising FixtureError on the first breach."""
    roots = 0
    for oid, o in state.objects.items():
        if oid != o.id:
            raise FixtureError(f"object key {oid!r} does not match id {o.id!r}")
        unknown = o.properties - PROPERTIES
        if unknown:
            raise FixtureError(f"{oid}: unknown properties {sorted(unknown)}")
        unknown = o.affordances - AFFORDANCES
        if unknown:
            raise FixtureError(f"{oid}: unknown affordances {sorted(unknown)}")
        if o.affords("openable") or o.affords("closeable"):
            if not ({"open", "closed"} & o.properties):
                raise FixtureError(f"{oid}: openable object must be open or closed")
            if {"open", "closed"} <= o.properties:
                raise FixtureError(f"{oid}: cannot be both open and closed")
        if o.affords("grabbable"):
            if not ({"grabbed", "not_grabbed"} & o.properties):
                raise FixtureError(f"{oid}: grabbable object must be grabbed or not_grabbed")
            if {"grabbed", "not_grabbed"} <= o.properties:
                raise FixtureError(f"{oid}: cannot be both grabbed and not_grabbed")
        if o.location is None:
            roots += 1
            continue
        if o.location == GRIPPER:
            if state.gripper != oid:
                raise FixtureError(f"{oid}: located in gripper but gripper holds {state.gripper!r}")
            if not o.has("grabbed"):
                raise FixtureError(f"{oid}: in gripper but not grabbed")
            continue
        if o.location not in state.objects:
            raise FixtureError(f"{oid}: location {o.location!r} does not exist")
    if roots != 1:
        raise FixtureError(f"expected exactly one root object, found {roots}")
    if state.robot_location not in state.objects:
        raise FixtureError(f"robot location {state.robot_location!r} does not exist")
    if state.gripper is not None:
        held = state.objects.get(state.gripper)
        if held is None:
            raise FixtureError(f"gripper holds unknown object {state.gripper!r}")
        if held.location != GRIPPER or not held.has("grabbed"):
            raise FixtureError(f"gripper/{state.gripper}: inconsistent held-object record")
    # Containment must be acyclic up to the root.
    for oid in state.objects:
        seen = set()
        cur: str | None = oid
        while cur is not None and cur != GRIPPER:
            if cur in seen:
                raise FixtureError(f"containment cycle through {oid!r}")
            seen.add(cur)
            cur = state.objects[cur].location


def _parse_object(raw: dict, where: str) -> WorldObject:
    for key in ("id", "category"):
        if not isinstance(raw.get(key), str) or not raw[key]:
            raise FixtureError(f"{where}: missing or invalid {key!r}")
    for key in ("properties", "affordances"):
        vals = raw.get(key, [])
        if not isinstance(vals, list) or not all(isinstance(v, str) for v in vals):
            raise FixtureError(f"{where}.{key}: expected a list of strings")
    loc = raw.get("location")
    if loc is not None and not isinstance(loc, str):
        raise FixtureError(f"{where}.location: expected string or null")
    return WorldObject(
        id=raw["id"],
        category=raw["category"],
        properties=frozenset(raw.get("properties", [])),
        affordances=frozenset(raw.get("affordances", [])),
        location=loc,
    )


def load_world(source: str | Path | dict) -> WorldState:
    """Load and validate a world fixture.

    ``source`` may be a path to a JSON file or an already-parsed dict.
    The fixture lists the room object, fixed locations, and movable
    objects; see data/worlds/ for the shape.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise FixtureError(f"cannot read fixture {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise FixtureError(f"invalid JSON in {path}: {exc}") from exc
    else:
        raw = source
    if not isinstance(raw, dict):
        raise FixtureError("fixture root must be an object")
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise FixtureError(f"unsupported schema_version: {version!r}")

    objects: dict[str, WorldObject] = {}
    room = raw.get("room")
    if not isinstance(room, dict):
        raise FixtureError("fixture is missing the room object")
    room_obj = _parse_object(room, "room")
    objects[room_obj.id] = room_obj

    for section in ("locations", "objects"):
        entries = raw.get(section, [])
        if not isinstance(entries, list):
            raise FixtureError(f"{section}: expected a list")
        for i, entry in enumerate(entries):
            if not isinstance(entry, dict):
                raise FixtureError(f"{section}[{i}]: expected an object")
            obj = _parse_object(entry, f"{section}[{i}]")
            if obj.id in objects:
                raise FixtureError(f"{section}[{i}]: duplicate id {obj.id!r}")
            if obj.location is None:
                obj = replace(obj, location=room_obj.id)
            objects[obj.id] = obj

    gripper = raw.get("gripper")
    if gripper is not None and not isinstance(gripper, str):
        raise FixtureError("gripper: expected string or null")
    state = WorldState(
        objects=objects,
        robot_location=raw.get("robot_location", room_obj.id),
        gripper=gripper,
    )
    validate(state)
    return state


def dump_world(state: WorldState, room_id: str | None = None) -> dict:
    """Serialize a state back to the fixture shape (single room)."""
    if room_id is None:
        room_id = next(o.id for o in state.objects.values() if o.location is None)
    room = state.objects[room_id]

    def encode(o: WorldObject, in_room: bool) -> dict:
        d: dict = {
            "id": o.id,
            "category": o.category,
            "properties": sorted(o.properties),
            "affordances": sorted(o.affordances),
        }
        if not in_room or o.location != room_id:
            d["location"] = o.location
        return d

    locations = [
        encode(o, True)
        for o in state.objects.values()
        if o.id != room_id and not o.affords("grabbable")
    ]
    movables = [
        encode(o, True) for o in state.objects.values() if o.affords("grabbable")
    ]
    out: dict = {
        "schema_version": SCHEMA_VERSION,
        "room": {"id": room.id, "category": room.category},
        "robot_location": state.robot_location,
        "locations": locations,
        "objects": movables,
    }
    if state.gripper is not None:
        out["gripper"] = state.gripper
    return out
