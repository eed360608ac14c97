"""Deterministic seeded simulator standing in for the evaluation and meta LLMs.

Answer correctness is a closed-form function of the instruction's bonus
keywords, the shot count, and a verbosity penalty; output length grows with
the matched keywords so cost and quality genuinely trade off. Every response
is a pure function of (request, seed): replaying a run reproduces each
response byte for byte.

The eval side parses the renderer's "Input:/Output:" layout and answers from
a hidden input-to-label map built from the task splits. The meta side parses
the default crossover/mutation template layout ("Prompt 1:", "Prompt 2:",
"Prompt:" line prefixes); custom templates must keep those prefixes to stay
simulator-compatible.
"""

from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass, field

from ..types import TaskSpec
from .base import ChatRequest, ChatResponse, whitespace_tokens

_FILLER_VOCAB = (
    "considering", "the", "given", "evidence", "this", "item", "shows", "a",
    "pattern", "that", "matches", "one", "label", "more", "closely", "than",
    "any", "other", "after", "weighing", "each", "clue", "in", "turn",
)

_WORD_STRIP = ".,;:!?()[]\"'"


def stable_draw(key: str, seed: int) -> float:
    """Uniform draw in [0, 1) from a content hash; independent of PYTHONHASHSEED."""
    digest = hashlib.sha256(f"{seed}|{key}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2.0**64


def stable_int(key: str, seed: int) -> int:
    digest = hashlib.sha256(f"{seed}|{key}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class SimulatorProfile:
    """Quality and verbosity model of the simulated evaluation LLM.

    answer quality = clamp(q_base + sum of matched keyword bonuses
    + shot_bonus * min(k, shot_saturation) - verbosity_penalty * |instruction|)
    with |instruction| counted in whitespace tokens.
    """

    q_base: float = 0.20
    keyword_bonuses: tuple[tuple[str, float], ...] = (
        ("carefully", 0.25),
        ("systematically", 0.20),
        ("verify", 0.15),
        ("reason", 0.10),
        ("precisely", 0.10),
    )
    shot_bonus: float = 0.06
    shot_saturation: int = 3
    verbosity_penalty: float = 0.002
    output_base_tokens: int = 22
    output_tokens_per_keyword: int = 2
    output_jitter: int = 5
    edit_rate: float = 1.0
    drop_word_rate: float = 0.04
    insert_keyword_rate: float = 0.18
    remove_keyword_rate: float = 0.06
    insert_filler_rate: float = 0.25

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "keyword_bonuses", tuple((k, float(v)) for k, v in self.keyword_bonuses)
        )

    @property
    def keywords(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.keyword_bonuses)

    def matched_keywords(self, instruction: str) -> list[str]:
        present = {w.strip(_WORD_STRIP).lower() for w in instruction.split()}
        return [k for k, _ in self.keyword_bonuses if k in present]

    def quality(self, instruction: str, num_shots: int) -> float:
        bonus = sum(dict(self.keyword_bonuses)[k] for k in self.matched_keywords(instruction))
        q = (
            self.q_base
            + bonus
            + self.shot_bonus * min(num_shots, self.shot_saturation)
            - self.verbosity_penalty * whitespace_tokens(instruction)
        )
        return min(1.0, max(0.0, q))

    def to_dict(self) -> dict:
        return {
            "q_base": self.q_base,
            "keyword_bonuses": {k: v for k, v in self.keyword_bonuses},
            "shot_bonus": self.shot_bonus,
            "shot_saturation": self.shot_saturation,
            "verbosity_penalty": self.verbosity_penalty,
            "output_base_tokens": self.output_base_tokens,
            "output_tokens_per_keyword": self.output_tokens_per_keyword,
            "output_jitter": self.output_jitter,
            "edit_rate": self.edit_rate,
            "drop_word_rate": self.drop_word_rate,
            "insert_keyword_rate": self.insert_keyword_rate,
            "remove_keyword_rate": self.remove_keyword_rate,
            "insert_filler_rate": self.insert_filler_rate,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimulatorProfile":
        data = dict(data)
        bonuses = data.pop("keyword_bonuses", None)
        if bonuses is not None:
            data["keyword_bonuses"] = tuple(sorted(bonuses.items()))
        return cls(**data)


@dataclass
class SimulatorEvalBackend:
    """Simulated evaluation LLM answering rendered prompts on task instances."""

    task: TaskSpec
    profile: SimulatorProfile = field(default_factory=SimulatorProfile)

    def __post_init__(self) -> None:
        self._labels_by_input = {
            inst.input: inst.label
            for split in (self.task.dev, self.task.shots, self.task.test)
            for inst in split
        }
        self._labels = self.task.labels()

    def complete(self, request: ChatRequest) -> ChatResponse:
        content = request.content
        instruction = content.split("\n\nInput: ", 1)[0]
        num_shots = content.count("\nOutput:") - 1
        tail = content.rsplit("\n\nInput: ", 1)
        if len(tail) != 2 or num_shots < 0:
            raise ValueError("request does not follow the Input/Output rendering")
        instance_input = tail[1].rsplit("\nOutput:", 1)[0]
        gold = self._labels_by_input.get(instance_input)
        if gold is None:
            raise KeyError(
                f"simulator has no label for instance input {instance_input!r}"
            )

        q = self.profile.quality(instruction, num_shots)
        correct = stable_draw("eval|" + content, request.seed) < q
        emitted = gold if correct else self._wrong_label(gold, content, request.seed)

        n_keywords = len(self.profile.matched_keywords(instruction))
        jitter = int(
            stable_draw("len|" + content, request.seed)
            * (self.profile.output_jitter + 1)
        )
        n_reason = (
            self.profile.output_base_tokens
            + self.profile.output_tokens_per_keyword * n_keywords
            + jitter
        )
        offset = stable_int("fill|" + content, request.seed) % len(_FILLER_VOCAB)
        reasoning = " ".join(
            _FILLER_VOCAB[(offset + i) % len(_FILLER_VOCAB)] for i in range(n_reason)
        )
        answer = f"<final_answer>{emitted}</final_answer>"
        text = f"{reasoning} {answer}" if reasoning else answer
        return ChatResponse(
            text=text,
            tok_in=whitespace_tokens(content),
            tok_out=whitespace_tokens(text),
        )

    def _wrong_label(self, gold: str, content: str, seed: int) -> str:
        others = [lab for lab in self._labels if lab != gold]
        if not others:
            return gold + "-wrong"
        return others[int(stable_draw("wrong|" + content, seed) * len(others))]


_CROSSOVER_RE = re.compile(
    r"Prompt 1:(?P<a>.*?)\nPrompt 2:(?P<b>.*?)(?:\n\s*\nReturn the new prompt|\Z)",
    re.DOTALL,
)
_MUTATION_RE = re.compile(
    r"Prompt:(?P<a>.*?)(?:\n\s*\nReturn the new prompt|\Z)", re.DOTALL
)


@dataclass
class SimulatorMetaBackend:
    """Simulated meta LLM: interleaving crossover and keyword-editing mutation.

    Mutation edits can add or remove the eval simulator's bonus keywords, so
    search pressure on instruction content is real rather than cosmetic.
    """

    profile: SimulatorProfile = field(default_factory=SimulatorProfile)

    def complete(self, request: ChatRequest) -> ChatResponse:
        content = request.content
        cross = _CROSSOVER_RE.search(content)
        if cross is not None:
            new_instruction = self._crossover(
                cross.group("a").strip(), cross.group("b").strip(), content, request.seed
            )
        else:
            mut = _MUTATION_RE.search(content)
            if mut is None:
                raise ValueError("meta request matches neither template layout")
            new_instruction = self._mutate(mut.group("a").strip(), content, request.seed)
        text = f"Here is the new prompt: <prompt>{new_instruction}</prompt>"
        return ChatResponse(
            text=text,
            tok_in=whitespace_tokens(content),
            tok_out=whitespace_tokens(text),
        )

    def _crossover(self, mother: str, father: str, content: str, seed: int) -> str:
        a = mother.split()
        b = father.split()
        if not a or not b:
            return mother or father
        if a == b:
            return mother
        target = max(1, (len(a) + len(b)) // 2)
        rng = random.Random(stable_int("meta-cross|" + content, seed))
        words = []
        for i in range(target):
            if rng.random() < 0.5:
                words.append(a[i * len(a) // target])
            else:
                words.append(b[i * len(b) // target])
        return " ".join(words)

    def _mutate(self, instruction: str, content: str, seed: int) -> str:
        p = self.profile
        rate = p.edit_rate
        if rate <= 0:
            return instruction
        rng = random.Random(stable_int("meta-mut|" + content, seed))
        words = instruction.split()
        changed = False

        kept = []
        for w in words:
            if len(words) > 1 and rng.random() < p.drop_word_rate * rate:
                changed = True
                continue
            kept.append(w)
        if not kept:
            kept = list(words)
            changed = False

        if rng.random() < p.insert_filler_rate * rate:
            count = rng.randint(1, 3)
            pos = rng.randrange(len(kept) + 1)
            filler = [rng.choice(_FILLER_VOCAB) for _ in range(count)]
            kept[pos:pos] = filler
            changed = True

        if rng.random() < p.insert_keyword_rate * rate:
            pos = rng.randrange(len(kept) + 1)
            kept.insert(pos, rng.choice(list(p.keywords)))
            changed = True

        if rng.random() < p.remove_keyword_rate * rate:
            keyword_positions = [
                i for i, w in enumerate(kept)
                if w.strip(_WORD_STRIP).lower() in p.keywords
            ]
            if keyword_positions and len(kept) > 1:
                kept.pop(rng.choice(keyword_positions))
                changed = True

        return " ".join(kept) if changed else instruction
