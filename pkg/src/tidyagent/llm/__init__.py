"""Language-model gateway: prompt templates, clients, retrieval loops."""

from .client import (
    Cassette,
    ClientError,
    ClientTimeout,
    LiveClient,
    LiveConfig,
    LlmQuery,
    LlmResponse,
    MismatchError,
    ProtocolError,
    RateLimited,
    RecordingClient,
    ReplayClient,
)
from .retrieval import (
    EmptyAfterFiltering,
    PromptContext,
    filter_words,
    get_unique_responses,
    normalize_response_text,
    rank,
    retrieve_actions,
    retrieve_potential_goals,
    temperature_schedule,
)
from .templates import MissingSlot, PromptTemplate, instantiate, load_templates

__all__ = [
    "Cassette",
    "ClientError",
    "ClientTimeout",
    "EmptyAfterFiltering",
    "LiveClient",
    "LiveConfig",
    "LlmQuery",
    "LlmResponse",
    "MismatchError",
    "MissingSlot",
    "PromptContext",
    "PromptTemplate",
    "ProtocolError",
    "RateLimited",
    "RecordingClient",
    "ReplayClient",
    "filter_words",
    "get_unique_responses",
    "instantiate",
    "load_templates",
    "normalize_response_text",
    "rank",
    "retrieve_actions",
    "retrieve_potential_goals",
    "temperature_schedule",
]
