"""Retrieval loops that turn raw completions into candidate goals/actions.

Goal retrieval asks for several unique completions of a goal prompt,
re-sampling at higher temperatures when the model repeats itself. Action
retrieval is two-step: first a single-token query proposes the next word,
whose top alternatives are filtered by probability thresholds (known verbs
need >= 0.09, unknown words >= 0.5); each surviving word is appended to
the prompt and completed, and the word is prefixed back onto each
completion. Candidates are ranked by mean log probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

from .client import CompletionClient, LlmQuery, LlmResponse
from .templates import PromptTemplate, instantiate

GOAL_MAX_TOKENS = 64
ACTION_MAX_TOKENS = 32
WORD_MAX_TOKENS = 1

LOW_TEMPERATURE = 0.0
HIGH_TEMPERATURE = 0.9
MAX_GOAL_TEMPERATURE = 1.0

KNOWN_WORD_THRESHOLD = 0.09
UNKNOWN_WORD_THRESHOLD = 0.5
NUM_WORDS = 5
NUM_ACTIONS = 2
GOAL_RESPONSES = 3
GOAL_MAX_ATTEMPTS = 10
ACTION_MAX_ATTEMPTS = 5

QueryObserver = Callable[[LlmQuery, LlmResponse, int, str], None]


class EmptyAfterFiltering(Exception):
    """No proposed word passed the probability thresholds."""


@dataclass(frozen=True)
class PromptContext:
    """Display strings describing the current task and object."""

    task: str
    agent_location: str
    object_description: str
    object_location: str


def temperature_schedule(kind: str, attempt: int, max_attempts: int) -> float:
    """Sampling temperature for the given 1-based attempt.

    The first query is greedy; retries sample at 0.9. Once attempts pass
    the halfway mark, goal queries escalate to 1.0 while action queries
    stay at 0.9.
    """
    if attempt <= 1:
        return LOW_TEMPERATURE
    if attempt <= max_attempts / 2:
        return HIGH_TEMPERATURE
    return MAX_GOAL_TEMPERATURE if kind == "goal" else HIGH_TEMPERATURE


def normalize_response_text(text: str) -> str:
    """Canonical completion text: trimmed, cut at closing delimiters,
    first line only, trailing period dropped."""
    text = text.strip()
    for delimiter in ("(END RESULT)", "(END TASK)"):
        text = text.split(delimiter)[0]
    if text:
        text = text.splitlines()[0]
    text = text.strip()
    while text.endswith("."):
        text = text[:-1].rstrip()
    return text


def get_unique_responses(
    client: CompletionClient,
    prompt: str,
    desired: int,
    max_attempts: int,
    kind: str,
    *,
    max_tokens: int | None = None,
    on_query: QueryObserver | None = None,
) -> list[LlmResponse]:
    """Collect up to ``desired`` unique completions in <= max_attempts calls.

    Uniqueness is exact normalized-text equality; empty completions are
    discarded. The result keeps first-seen order.
    """
    if max_tokens is None:
        max_tokens = GOAL_MAX_TOKENS if kind == "goal" else ACTION_MAX_TOKENS
    unique: list[LlmResponse] = []
    seen: set[str] = set()
    for attempt in range(1, max_attempts + 1):
        temperature = temperature_schedule(kind, attempt, max_attempts)
        query = LlmQuery(prompt, temperature, max_tokens)
        response = client.send(query)
        if on_query is not None:
            on_query(query, response, attempt, kind)
        text = normalize_response_text(response.text)
        if text and text not in seen:
            seen.add(text)
            unique.append(replace(response, text=text))
        if len(unique) >= desired:
            break
    return unique


def retrieve_potential_goals(
    client: CompletionClient,
    template: PromptTemplate,
    context: PromptContext,
    *,
    desired: int = GOAL_RESPONSES,
    max_attempts: int = GOAL_MAX_ATTEMPTS,
    on_query: QueryObserver | None = None,
) -> list[LlmResponse]:
    """Candidate goal sentences for the object in ``context``."""
    prompt = instantiate(
        template,
        task=context.task,
        agent_location=context.agent_location,
        object_description=context.object_description,
        object_location=context.object_location,
    )
    return get_unique_responses(
        client, prompt, desired, max_attempts, "goal", on_query=on_query
    )


def filter_words(
    alternatives: Iterable[tuple[str, float]],
    known_words: frozenset[str] | set[str],
    *,
    known_threshold: float = KNOWN_WORD_THRESHOLD,
    unknown_threshold: float = UNKNOWN_WORD_THRESHOLD,
) -> list[tuple[str, float]]:
    """Keep a proposed (word, logprob) iff its probability clears the
    threshold for its class: known verbs 0.09, unknown words 0.5."""
    kept = []
    for word, logprob in alternatives:
        word_clean = word.strip()
        if not word_clean:
            continue
        probability = math.exp(logprob)
        threshold = (
            known_threshold
            if word_clean.lower() in known_words
            else unknown_threshold
        )
        if probability >= threshold:
            kept.append((word_clean, logprob))
    return kept


def retrieve_actions(
    client: CompletionClient,
    template: PromptTemplate,
    context: PromptContext,
    goal_text: str,
    prior_steps: Sequence[str],
    known_words: frozenset[str] | set[str],
    *,
    num_words: int = NUM_WORDS,
    num_actions: int = NUM_ACTIONS,
    max_attempts: int = ACTION_MAX_ATTEMPTS,
    on_query: QueryObserver | None = None,
) -> list[LlmResponse]:
    """Two-step next-action retrieval.

    Raises EmptyAfterFiltering when no proposed first word survives the
    thresholds (callers fall back to asking the instructor). May return an
    empty list if every surviving word yields only empty completions.
    """

    def prompt_with(partial_word: str | None) -> str:
        return instantiate(
            template,
            task=context.task,
            agent_location=context.agent_location,
            object_description=context.object_description,
            object_location=context.object_location,
            goal_text=goal_text,
            prior_steps=prior_steps,
            partial_word=partial_word,
        )

    word_query = LlmQuery(
        prompt_with(None), LOW_TEMPERATURE, WORD_MAX_TOKENS, want_top_alternatives=True
    )
    word_response = client.send(word_query)
    if on_query is not None:
        on_query(word_query, word_response, 1, "word")
    alternatives = list(word_response.alternatives[:num_words])
    survivors = filter_words(alternatives, known_words)
    if not survivors:
        raise EmptyAfterFiltering(
            f"no word passed thresholds among {[w for w, _ in alternatives]!r}"
        )

    candidates: list[LlmResponse] = []
    seen: set[str] = set()
    for word, _ in survivors:
        completions = get_unique_responses(
            client,
            prompt_with(word),
            num_actions,
            max_attempts,
            "action",
            on_query=on_query,
        )
        for completion in completions:
            text = f"{word} {completion.text}".strip()
            if text in seen:
                continue
            seen.add(text)
            candidates.append(replace(completion, text=text))
    return candidates


def rank(responses: Sequence[LlmResponse]) -> list[LlmResponse]:
    """Sort by mean log probability, descending; ties keep input order."""
    return sorted(responses, key=lambda r: r.mean_logprob, reverse=True)
