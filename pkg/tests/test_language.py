"""Goal/action grammar: parsing, rendering, grounding, evaluation."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import kitchen_state
from tidyagent.language import (
    VAR,
    ConditionalGoal,
    GoalPredicate,
    UngroundableNounPhrase,
    Uninterpretable,
    UnknownVerb,
    location_phrase,
    parse_action,
    parse_goal,
    parse_task_intro,
    render_action,
    render_goal,
    satisfied,
    task_display,
    word_count,
)
from tidyagent.resources import default_lexicon
from tidyagent.world import PrimitiveAction, apply, load_world

LEXICON = default_lexicon()

CONDITIONAL_SENTENCE = (
    "If the object is a ceramic-plate then the goal is that the object is "
    "in the dishwasher and the dishwasher is closed."
)


def test_parse_conditional_goal():
    goal = parse_goal(CONDITIONAL_SENTENCE, LEXICON)
    assert goal.condition_category == "ceramic-plate"
    assert goal.predicates == (
        GoalPredicate("in", VAR, "dishwasher"),
        GoalPredicate("property", "dishwasher", "closed"),
    )


def test_parse_bare_goal_wraps_with_context_category():
    goal = parse_goal(
        "The goal is that the ceramic-plate is in the cupboard and the "
        "cupboard is closed",
        LEXICON,
        context_category="ceramic-plate",
        source="llm",
    )
    assert goal.condition_category == "ceramic-plate"
    assert goal.predicates == (
        GoalPredicate("in", VAR, "cupboard"),
        GoalPredicate("property", "cupboard", "closed"),
    )
    assert goal.source == "llm"


def test_parse_bare_goal_without_context_uses_subject():
    goal = parse_goal(
        "The goal is that the plastic bottle is in the bin", LEXICON
    )
    assert goal.condition_category == "plastic-bottle"
    # "bin" resolves through the category synonym table
    assert goal.predicates == (GoalPredicate("in", VAR, "recycling-bin"),)


def test_parse_goal_rejects_out_of_vocabulary_property():
    with pytest.raises(Uninterpretable):
        parse_goal(
            "The goal is that the sink is full of water",
            LEXICON,
            context_category="ceramic-plate",
        )
    with pytest.raises(Uninterpretable):
        parse_goal(
            "The goal is that the dishwasher is turned on",
            LEXICON,
            context_category="ceramic-plate",
        )


def test_parse_goal_rejects_non_goal_sentences():
    for text in ["Have a clean kitchen", "", "Please tidy up everything now"]:
        with pytest.raises(Uninterpretable):
            parse_goal(text, LEXICON, context_category="ceramic-plate")


def test_parse_goal_validates_against_state():
    state = kitchen_state()
    with pytest.raises(Uninterpretable, match="category"):
        parse_goal(
            "The goal is that the object is in the wardrobe",
            LEXICON,
            context_category="ceramic-plate",
            state=state,
        )
    goal = parse_goal(
        CONDITIONAL_SENTENCE, LEXICON, state=state
    )
    assert goal.condition_category == "ceramic-plate"


def test_render_goal_is_canonical():
    goal = parse_goal(CONDITIONAL_SENTENCE, LEXICON)
    assert render_goal(goal) == CONDITIONAL_SENTENCE[:-1]


def test_goal_round_trip_examples():
    texts = [
        CONDITIONAL_SENTENCE,
        "If the object is an empty-can then the goal is that the object is in the recycling-bin",
        "If the object is a coffee-mug then the goal is that the object is in the "
        "dishwasher and the dishwasher is closed and the cupboard is closed",
    ]
    for text in texts:
        goal = parse_goal(text, LEXICON)
        assert parse_goal(render_goal(goal), LEXICON) == goal


_categories = st.sampled_from(
    ["ceramic-plate", "coffee-mug", "empty-can", "old-newspaper", "salad-bowl"]
)
_containers = st.sampled_from(["dishwasher", "cupboard", "pantry", "oven-drawer"])


@settings(max_examples=80, deadline=None)
@given(
    condition=_categories,
    container=_containers,
    extra_closed=st.booleans(),
    extra_container=_containers,
)
def test_goal_round_trip_property(condition, container, extra_closed, extra_container):
    predicates = [GoalPredicate("in", VAR, container)]
    if extra_closed:
        predicates.append(GoalPredicate("property", extra_container, "closed"))
    goal = ConditionalGoal(condition, tuple(predicates))
    assert parse_goal(render_goal(goal), LEXICON) == goal


def test_satisfied_on_goal_states():
    state = kitchen_state()
    goal = parse_goal(CONDITIONAL_SENTENCE, LEXICON)
    assert not satisfied(goal, "plate-1", state)
    for action in [
        PrimitiveAction("open", ("dishwasher",)),
        PrimitiveAction("pick-up", ("plate-1",)),
        PrimitiveAction("put-down", ("plate-1", "dishwasher")),
    ]:
        state = apply(state, action)
    assert not satisfied(goal, "plate-1", state)  # door still open
    state = apply(state, PrimitiveAction("close", ("dishwasher",)))
    assert satisfied(goal, "plate-1", state)


def test_satisfied_ignores_unrelated_changes():
    state = kitchen_state()
    goal = parse_goal(CONDITIONAL_SENTENCE, LEXICON)
    before = satisfied(goal, "plate-1", state)
    poked = apply(state, PrimitiveAction("open", ("cupboard",)))
    assert satisfied(goal, "plate-1", poked) == before


def test_satisfied_missing_category_is_false():
    state = kitchen_state()
    goal = ConditionalGoal(
        "ceramic-plate", (GoalPredicate("in", VAR, "wardrobe"),)
    )
    assert satisfied(goal, "plate-1", state) is False


def test_parse_action_examples():
    state = kitchen_state()
    assert parse_action("Open dishwasher", state, LEXICON) == PrimitiveAction(
        "open", ("dishwasher",)
    )
    assert parse_action(
        "Pick up ceramic-plate from table.", state, LEXICON
    ) == PrimitiveAction("pick-up", ("plate-1",))
    assert parse_action(
        "Put the ceramic-plate in the dishwasher.", state, LEXICON
    ) == PrimitiveAction("put-down", ("plate-1", "dishwasher"))
    assert parse_action("Close the dishwasher", state, LEXICON) == PrimitiveAction(
        "close", ("dishwasher",)
    )
    assert parse_action("Go to the table", state, LEXICON) == PrimitiveAction(
        "approach", ("table",)
    )


def test_parse_action_unknown_verb():
    state = kitchen_state()
    with pytest.raises(UnknownVerb) as err:
        parse_action("Check the fridge", state, LEXICON)
    assert err.value.word == "check"


def test_parse_action_ungroundable_phrase():
    state = kitchen_state()
    with pytest.raises(UngroundableNounPhrase):
        parse_action("Pick up the silver spoon", state, LEXICON)
    with pytest.raises(Uninterpretable):
        parse_action("Put the ceramic-plate", state, LEXICON)


def test_grounding_prefers_object_of_interest_then_lowest_id():
    fixture = {
        "schema_version": 1,
        "room": {"id": "kitchen", "category": "kitchen"},
        "locations": [
            {"id": "table", "category": "table", "affordances": ["receptacle"]}
        ],
        "objects": [
            {
                "id": f"plate-{i}",
                "category": "ceramic-plate",
                "properties": ["not_grabbed"],
                "affordances": ["grabbable"],
                "location": "table",
            }
            for i in (2, 1)
        ],
    }
    state = load_world(fixture)
    assert parse_action("Pick up the ceramic-plate", state, LEXICON) == PrimitiveAction(
        "pick-up", ("plate-1",)
    )
    assert parse_action(
        "Pick up the ceramic-plate", state, LEXICON, object_of_interest="plate-2"
    ) == PrimitiveAction("pick-up", ("plate-2",))


def test_render_action_round_trips():
    state = kitchen_state()
    opened = apply(state, PrimitiveAction("open", ("dishwasher",)))
    held = apply(opened, PrimitiveAction("pick-up", ("plate-1",)))
    cases = [
        (state, PrimitiveAction("open", ("dishwasher",))),
        (state, PrimitiveAction("pick-up", ("plate-1",))),
        (held, PrimitiveAction("put-down", ("plate-1", "dishwasher"))),
        (opened, PrimitiveAction("close", ("dishwasher",))),
    ]
    for at_state, action in cases:
        text = render_action(action, at_state)
        assert parse_action(text, at_state, LEXICON) == action


def test_word_count_rule():
    assert word_count("Pick up the plastic bottle.") == 5
    assert word_count(CONDITIONAL_SENTENCE) == 22
    assert word_count("yes") == 1
    assert word_count("") == 0


def test_task_intro_parsing():
    intro = [
        "The task is tidy kitchen.",
        "Clear all objects on the table.",
        "Store all objects on the counter.",
        "Unload all objects in the dish rack.",
    ]
    structure = parse_task_intro(intro, LEXICON)
    assert structure.task == "tidy-kitchen"
    assert structure.subtasks == (
        ("clear", "table"),
        ("store", "counter"),
        ("unload", "dish-rack"),
    )
    assert structure.subtask_for_location("table") == "clear"
    assert structure.subtask_for_location("dish-rack") == "unload"
    assert task_display("tidy-kitchen") == "tidy kitchen"
    with pytest.raises(Uninterpretable):
        parse_task_intro(["Do something useful."], LEXICON)


def test_location_phrases():
    state = kitchen_state()
    assert location_phrase(state, "plate-1", LEXICON) == "on table"
    assert location_phrase(state, "plate-1", LEXICON, spoken=True) == "on the table"
    moved = apply(state, PrimitiveAction("pick-up", ("plate-1",)))
    moved = apply(moved, PrimitiveAction("put-down", ("plate-1", "sink")))
    assert location_phrase(moved, "plate-1", LEXICON) == "in sink"
    assert location_phrase(moved, "plate-1", LEXICON, spoken=True) == "in the sink"
