"""Completion backends: OpenAI-compatible HTTP client and deterministic simulator."""

from .base import (
    BackendError,
    CallParams,
    ChatRequest,
    ChatResponse,
    CompletionBackend,
    extract_marked_answer,
    whitespace_tokens,
)
from .http import FixtureRecorder, FixtureReplayBackend, HttpChatBackend, request_fingerprint
from .simulator import SimulatorEvalBackend, SimulatorMetaBackend, SimulatorProfile

__all__ = [
    "BackendError",
    "CallParams",
    "ChatRequest",
    "ChatResponse",
    "CompletionBackend",
    "extract_marked_answer",
    "whitespace_tokens",
    "FixtureRecorder",
    "FixtureReplayBackend",
    "HttpChatBackend",
    "request_fingerprint",
    "SimulatorEvalBackend",
    "SimulatorMetaBackend",
    "SimulatorProfile",
]
