"""Chat-completion interface shared by the HTTP client and the simulator."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol


class BackendError(RuntimeError):
    """Transport failure after retries, or a malformed provider payload."""


@dataclass(frozen=True)
class ChatRequest:
    """One chat-completion call. Messages are (role, content) pairs."""

    model: str
    messages: tuple[tuple[str, str], ...]
    max_output_tokens: int = 3000
    temperature: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "messages", tuple((r, c) for r, c in self.messages)
        )
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")

    @property
    def content(self) -> str:
        return "\n\n".join(c for _, c in self.messages)


@dataclass(frozen=True)
class ChatResponse:
    """Completion text plus exact token counts.

    tok_in counts the rendered request, tok_out the response. tok_estimated
    marks counts reconstructed by whitespace splitting because the provider
    omitted usage fields; budget accounting must never silently stop.
    """

    text: str
    tok_in: int
    tok_out: int
    tok_estimated: bool = False

    def __post_init__(self) -> None:
        if self.tok_in < 0 or self.tok_out < 0:
            raise ValueError("token counts must be non-negative")

    @property
    def total_tokens(self) -> int:
        return self.tok_in + self.tok_out


class CompletionBackend(Protocol):
    def complete(self, request: ChatRequest) -> ChatResponse: ...


@dataclass(frozen=True)
class CallParams:
    """Request parameters threaded through every backend call of a run."""

    model: str = "default"
    seed: int = 0
    eval_temperature: float = 0.0
    meta_temperature: float = 1.0
    max_output_tokens: int = 3000
    concurrency: int = 1


def whitespace_tokens(text: str) -> int:
    """Tokenizer stub used by the simulator and as the usage-field fallback."""
    return len(text.split())


def extract_marked_answer(text: str, tag: str = "final_answer") -> str | None:
    """Content between the first <tag> and the following </tag>, trimmed.

    Absent or unclosed markers yield None; an empty trimmed payload also
    counts as absent. With repeated marker pairs the first pair wins.
    """
    open_marker = f"<{tag}>"
    close_marker = f"</{tag}>"
    start = text.find(open_marker)
    if start < 0:
        return None
    start += len(open_marker)
    end = text.find(close_marker, start)
    if end < 0:
        return None
    answer = text[start:end].strip()
    return answer if answer else None
