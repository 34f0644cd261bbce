"""The task-learning loop.

For every sensed object (fixture order within each subtask's location) the
agent recalls or elicits a conditional goal, then repeatedly chooses the next
action — learned policy rules first, then bounded search, then LLM retrieval,
then the instructor — until the goal holds. Solved episodes are generalized
into policy rules, so later objects (and later runs) need fewer or no
external queries. Every exchange is recorded as a transcript event.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .instructor import DialogueTurn, Instructor
from .knowledge import Episode, KnowledgeStore
from .language import (
    LanguageError,
    Lexicon,
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
from .llm.client import CompletionClient
from .llm.retrieval import (
    EmptyAfterFiltering,
    PromptContext,
    rank,
    retrieve_actions,
    retrieve_potential_goals,
)
from .llm.templates import PromptTemplate, load_templates
from .planner import Plan, plan_iddfs
from .resources import data_path, default_lexicon
from .transcript import EpisodeTranscript
from .world import PrimitiveAction, WorldState, applicable, apply

# condition → (search_depth, llm_goals, llm_actions, instructor_content)
CONDITIONS: dict[str, tuple[int, bool, bool, bool]] = {
    "instruction": (0, False, False, True),
    "instruction+search": (4, False, False, True),
    "search+llm": (4, True, False, False),
    "instruction+llm": (0, True, True, True),
    "instruction+search2+llm": (2, True, True, True),
    "instruction+search4+llm": (4, True, True, True),
}

DEFAULT_STEP_CEILING = 20


@dataclass(frozen=True)
class SessionConfig:
    """Which knowledge sources a session may use."""

    condition: str
    search_depth: int
    llm_goals: bool
    llm_actions: bool
    instructor_content: bool
    step_ceiling: int = DEFAULT_STEP_CEILING

    @classmethod
    def from_condition(
        cls, name: str, *, step_ceiling: int = DEFAULT_STEP_CEILING
    ) -> "SessionConfig":
        try:
            depth, llm_goals, llm_actions, instructor_content = CONDITIONS[name]
        except KeyError:
            raise ValueError(
                f"unknown condition {name!r}; choose from {sorted(CONDITIONS)}"
            ) from None
        return cls(
            condition=name,
            search_depth=depth,
            llm_goals=llm_goals,
            llm_actions=llm_actions,
            instructor_content=instructor_content,
            step_ceiling=step_ceiling,
        )


def open_question(kind: str, subtask: str) -> str:
    if kind == "goal":
        return f"What is the next goal or subtask of {subtask}?"
    return f"What do I do next for {subtask}?"


def candidate_question(
    kind: str, category: str, location_spoken: str, candidate_text: str
) -> str:
    if kind == "goal":
        embedded = candidate_text[0].lower() + candidate_text[1:]
        return f"For a {category} {location_spoken} is {embedded}?"
    return f"For the {category} should I '{candidate_text}'?"


def finalize_choice(
    candidates,
    kind: str,
    config: SessionConfig,
    instructor: Instructor,
    *,
    subtask: str,
    category: str,
    location_spoken: str = "",
    step: int = 0,
    object_id: str = "",
    transcript: EpisodeTranscript | None = None,
) -> tuple[str | None, str | None]:
    """Pick the text to act on: (text, source) with source "llm"|"instructor".

    Without an instructor the top-ranked candidate wins outright. With one,
    candidates are offered best-first as yes/no questions; if every candidate
    is rejected (or there are none) the open question is asked and the typed
    utterance is returned. (None, None) means no source could provide text.
    """
    candidates = list(candidates)
    if not config.instructor_content:
        if candidates:
            return candidates[0].text, "llm"
        return None, None
    for rank_index, candidate in enumerate(candidates):
        question = candidate_question(kind, category, location_spoken, candidate.text)
        if transcript is not None:
            transcript.emit(
                "llm_candidate_shown",
                object_id=object_id,
                purpose=kind,
                rank=rank_index,
                text=candidate.text,
                display_prob=round(candidate.display_prob, 6),
            )
        turn = DialogueTurn(
            purpose=kind,
            subtask=subtask,
            category=category,
            text=question,
            candidate=candidate.text,
            step=step,
            rank=rank_index,
            llm_sourced=True,
        )
        answer = bool(instructor.ask_yesno(turn))
        if transcript is not None:
            transcript.emit(
                "instructor_yesno",
                object_id=object_id,
                purpose=kind,
                question=question,
                candidate=candidate.text,
                rank=rank_index,
                answer=answer,
                llm_sourced=True,
            )
        if answer:
            return candidate.text, "llm"
    question = open_question(kind, subtask)
    turn = DialogueTurn(
        purpose=kind, subtask=subtask, category=category, text=question, step=step
    )
    text = instructor.ask_open(turn)
    if transcript is not None:
        transcript.emit(
            "instructor_utterance",
            object_id=object_id,
            question=question,
            text=text,
            word_count=word_count(text),
        )
    return text, "instructor"


class _Session:
    def __init__(
        self,
        world: WorldState,
        config: SessionConfig,
        instructor: Instructor,
        client: CompletionClient | None,
        knowledge: KnowledgeStore,
        templates: dict[str, PromptTemplate] | None,
        lexicon: Lexicon | None,
        assertions: dict | None,
        meta: dict | None,
        observers=None,
    ):
        self.state = world
        self.initial = world
        self.config = config
        self.instructor = instructor
        self.client = client
        self.knowledge = knowledge
        self.templates = templates or load_templates(data_path("templates.json"))
        self.lexicon = lexicon or default_lexicon()
        self.assertions = assertions or {}
        self.planner_calls = 0
        self.transcript = EpisodeTranscript(
            meta={"condition": config.condition, "planner_calls": 0, **(meta or {})}
        )
        self.transcript.observers.extend(observers or [])
        self.structure = None

    # -- helpers -----------------------------------------------------------------

    def _observer(self, object_id: str):
        def on_query(query, response, attempt, kind):
            self.transcript.emit(
                "llm_query",
                object_id=object_id,
                purpose=kind,
                attempt=attempt,
                temperature=query.temperature,
                max_tokens=query.max_tokens,
                prompt_sha256=query.prompt_sha256(),
                text=response.text,
            )

        return on_query

    def _prompt_context(self, category: str, sighting_location: str) -> PromptContext:
        return PromptContext(
            task=task_display(self.structure.task),
            agent_location=self.state.robot_location,
            object_description=category,
            object_location=sighting_location,
        )

    def _utterance(self, object_id: str, question: str, text: str) -> None:
        self.transcript.emit(
            "instructor_utterance",
            object_id=object_id,
            question=question,
            text=text,
            word_count=word_count(text),
        )

    # -- main loop ------------------------------------------------------------------

    def run(self) -> EpisodeTranscript:
        structure = self.knowledge.task_structure
        if structure is None:
            utterances = self.instructor.task_intro()
            for utterance in utterances:
                self._utterance("", "", utterance)
            structure = parse_task_intro(utterances, self.lexicon)
            self.knowledge.task_structure = structure
        self.structure = structure
        for object_id, subtask in self._assignments(structure):
            self._handle_object(object_id, subtask)
        self._closure_outcomes()
        self.transcript.meta["planner_calls"] = self.planner_calls
        return self.transcript

    def _assignments(self, structure) -> list[tuple[str, str]]:
        assignments = []
        for subtask, location_category in structure.subtasks:
            for obj in self.state.movables():
                loc = obj.location
                if (
                    loc is not None
                    and loc in self.state.objects
                    and self.state.obj(loc).category == location_category
                ):
                    assignments.append((obj.id, subtask))
        return assignments

    # -- per-object episode ------------------------------------------------------------

    def _handle_object(self, object_id: str, subtask: str) -> None:
        category = self.state.obj(object_id).category
        sighting_location = location_phrase(self.state, object_id, self.lexicon)
        spoken_location = location_phrase(
            self.state, object_id, self.lexicon, spoken=True
        )
        failure: str | None = None
        goal = self.knowledge.lookup_goal(subtask, category)
        goal_text = render_goal(goal) if goal is not None else None
        if goal is None:
            goal, goal_text, failure = self._elicit_goal(
                object_id, subtask, category, sighting_location, spoken_location
            )
            if goal is not None:
                self.knowledge.store_goal(subtask, category, goal)
        if goal is None:
            self._object_outcome(object_id, category, subtask, False, failure)
            return

        start_state = self.state
        trace: list[tuple[WorldState, PrimitiveAction]] = []
        step_texts: list[str] = []
        rounds = 0
        while not satisfied(goal, object_id, self.state):
            rounds += 1
            if rounds > self.config.step_ceiling:
                failure = "step-ceiling"
                break
            policy_actions = self.knowledge.match_rules(
                self.state, subtask, goal, object_id
            )
            if policy_actions:
                if not self._execute(
                    [policy_actions[0]], object_id, "policy", trace, step_texts
                ):
                    failure = "policy-misfire"
                    break
                continue
            if self.config.search_depth > 0:
                self.planner_calls += 1
                result = plan_iddfs(
                    self.state, goal, object_id, self.config.search_depth
                )
                if isinstance(result, Plan):
                    if result.steps and not self._execute(
                        result.steps, object_id, "search", trace, step_texts
                    ):
                        failure = "search-misfire"
                        break
                    continue
            failure = self._elicit_and_execute(
                object_id, subtask, category, goal_text, sighting_location,
                trace, step_texts,
            )
            if failure is not None:
                break

        achieved = failure is None and satisfied(goal, object_id, self.state)
        self._object_outcome(object_id, category, subtask, achieved, failure)
        if achieved:
            episode = Episode(
                task=subtask,
                object_id=object_id,
                start_state=start_state,
                goal=goal,
                trace=tuple(trace),
                end_state=self.state,
            )
            self.knowledge.learn_from_episode(episode)

    # -- goal elicitation ------------------------------------------------------------

    def _elicit_goal(
        self,
        object_id: str,
        subtask: str,
        category: str,
        sighting_location: str,
        spoken_location: str,
    ):
        candidates = []
        if self.config.llm_goals:
            responses = retrieve_potential_goals(
                self.client,
                self.templates["goal"],
                self._prompt_context(category, sighting_location),
                on_query=self._observer(object_id),
            )
            candidates = rank(responses)
        if not candidates and not self.config.instructor_content:
            return None, None, "no-goal-source"
        text, source = finalize_choice(
            candidates,
            "goal",
            self.config,
            self.instructor,
            subtask=subtask,
            category=category,
            location_spoken=spoken_location,
            object_id=object_id,
            transcript=self.transcript,
        )
        if text is None:
            return None, None, "no-goal-source"
        try:
            goal = parse_goal(
                text,
                self.lexicon,
                context_category=category,
                state=self.state,
                source="llm" if source == "llm" else "instructor",
            )
            return goal, text, None
        except LanguageError:
            pass
        if source == "llm" and self.config.instructor_content:
            question = open_question("goal", subtask)
            turn = DialogueTurn(
                purpose="goal", subtask=subtask, category=category, text=question
            )
            fallback = self.instructor.ask_open(turn)
            self._utterance(object_id, question, fallback)
            try:
                goal = parse_goal(
                    fallback,
                    self.lexicon,
                    context_category=category,
                    state=self.state,
                    source="instructor",
                )
                return goal, fallback, None
            except LanguageError:
                pass
        return None, None, "uninterpretable-goal"

    # -- action elicitation ------------------------------------------------------------

    def _elicit_and_execute(
        self,
        object_id: str,
        subtask: str,
        category: str,
        goal_text: str,
        sighting_location: str,
        trace,
        step_texts,
    ) -> str | None:
        """One elicitation round; returns a failure reason or None."""
        step_index = len(step_texts)
        candidates = []
        if self.config.llm_actions:
            try:
                responses = retrieve_actions(
                    self.client,
                    self.templates["action"],
                    self._prompt_context(category, sighting_location),
                    goal_text,
                    tuple(step_texts),
                    self.lexicon.known_words,
                    on_query=self._observer(object_id),
                )
            except EmptyAfterFiltering:
                responses = []
            candidates = rank(responses)
        if not candidates and not self.config.instructor_content:
            return "no-action-source"
        text, source = finalize_choice(
            candidates,
            "action",
            self.config,
            self.instructor,
            subtask=subtask,
            category=category,
            step=step_index,
            object_id=object_id,
            transcript=self.transcript,
        )
        if text is None:
            return "no-action-source"
        action = self._parse_action_text(text, object_id)
        if action is None and source == "llm" and self.config.instructor_content:
            question = open_question("action", subtask)
            turn = DialogueTurn(
                purpose="action",
                subtask=subtask,
                category=category,
                text=question,
                step=step_index,
            )
            text = self.instructor.ask_open(turn)
            self._utterance(object_id, question, text)
            action = self._parse_action_text(text, object_id)
        if action is None:
            return "uninterpretable-action"
        if action.verb == "approach":
            # Locomotion is implicit in this embodiment: approaching changes
            # nothing, so it counts as a numbered step but is never learned from.
            self.transcript.emit(
                "action_executed",
                object_id=object_id,
                verb=action.verb,
                args=list(action.args),
                rendered=render_action(action, self.state),
                source=source,
                ok=True,
            )
            step_texts.append(text)
            return None
        self._execute([action], object_id, source, trace, step_texts, accepted_text=text)
        return None

    def _parse_action_text(self, text: str, object_id: str) -> PrimitiveAction | None:
        try:
            return parse_action(
                text, self.state, self.lexicon, object_of_interest=object_id
            )
        except LanguageError:
            return None

    # -- execution ------------------------------------------------------------------

    def _execute(
        self,
        queue,
        object_id: str,
        source: str,
        trace,
        step_texts,
        accepted_text: str | None = None,
    ) -> bool:
        for action in queue:
            rendered = render_action(action, self.state)
            if not applicable(self.state, action):
                self.transcript.emit(
                    "action_executed",
                    object_id=object_id,
                    verb=action.verb,
                    args=list(action.args),
                    rendered=rendered,
                    source=source,
                    ok=False,
                    error="precondition violated",
                )
                return False
            before = self.state
            self.state = apply(before, action)
            trace.append((before, action))
            step_texts.append(
                accepted_text if accepted_text and len(queue) == 1 else rendered
            )
            self.transcript.emit(
                "action_executed",
                object_id=object_id,
                verb=action.verb,
                args=list(action.args),
                rendered=rendered,
                source=source,
                ok=True,
            )
        return True

    # -- outcomes --------------------------------------------------------------------

    def _object_outcome(
        self,
        object_id: str,
        category: str,
        subtask: str,
        achieved_agent: bool,
        reason: str | None,
    ) -> None:
        truth = self.assertions.get("objects", {}).get(object_id)
        if truth is not None:
            achieved = self._truth_holds(object_id, truth)
            if achieved_agent and not achieved and reason is None:
                reason = "misplaced"
        else:
            achieved = achieved_agent
        fields = dict(
            object_id=object_id,
            category=category,
            subtask=subtask,
            achieved=achieved,
        )
        if reason:
            fields["reason"] = reason
        self.transcript.emit("goal_outcome", **fields)

    def _truth_holds(self, object_id: str, truth: dict) -> bool:
        obj = self.state.obj(object_id)
        dest_category = truth.get("in")
        if dest_category is None:
            return False
        loc = obj.location
        if loc is None or loc not in self.state.objects:
            return False
        return self.state.obj(loc).category == dest_category

    def _closure_outcomes(self) -> None:
        closures = self.assertions.get("closures")
        if closures is None:
            closable_ids = [
                obj.id
                for obj in self.initial.objects.values()
                if obj.affords("closeable")
            ]
        else:
            closable_ids = []
            for category in closures:
                instances = self.initial.by_category(category)
                if instances:
                    closable_ids.append(instances[0].id)
        for closable_id in closable_ids:
            obj = self.state.obj(closable_id)
            achieved = obj.has("closed")
            fields = dict(
                object_id=closable_id,
                category=obj.category,
                subtask="",
                achieved=achieved,
            )
            if not achieved:
                fields["reason"] = "left-open"
            self.transcript.emit("goal_outcome", **fields)


def learn_task(
    world: WorldState,
    config: SessionConfig,
    instructor: Instructor,
    client: CompletionClient | None,
    knowledge: KnowledgeStore,
    *,
    templates: dict[str, PromptTemplate] | None = None,
    lexicon: Lexicon | None = None,
    assertions: dict | None = None,
    meta: dict | None = None,
    observers=None,
) -> EpisodeTranscript:
    """Run one full learning session over ``world`` and return its transcript.

    ``observers`` are callables attached to the transcript before the first
    event; each sees every event dict as it is emitted.
    """
    session = _Session(
        world,
        config,
        instructor,
        client,
        knowledge,
        templates,
        lexicon,
        assertions,
        meta,
        observers,
    )
    return session.run()


__all__ = [
    "CONDITIONS",
    "DEFAULT_STEP_CEILING",
    "SessionConfig",
    "candidate_question",
    "finalize_choice",
    "learn_task",
    "open_question",
]
