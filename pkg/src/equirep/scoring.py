"""Constraint scoring through a judge model, plus numeric score extraction."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import JudgeParseError, ScoreParseError
from .llm import ChatRequest, LLMClient
from .prompts import ConstraintSpec, render_judge_instruction

# Appended once when the judge's first reply carries no parsable number.
RETRY_SUFFIX = "\nOnly provide the score."

_DECIMAL_RE = re.compile(r"\d+\.\d+|\.\d+|\d+")


@dataclass(frozen=True)
class ScorePair:
    """One trial's semantic-equivalent and constraint scores."""

    semantic: float
    constraint: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.semantic <= 1.0 and 0.0 <= self.constraint <= 1.0):
            raise ValueError(f"scores must be within [0, 1]: {self}")

    @property
    def total(self) -> float:
        return self.semantic + self.constraint


def parse_score(text: str) -> float:
    """First decimal literal in the text, clamped to [0, 1].

    Accepts forms like ``0.85``, ``.9``, and ``1``; a leading sign is ignored.
    Raises :class:`ScoreParseError` when no literal is present.
    """
    match = _DECIMAL_RE.search(text)
    if match is None:
        raise ScoreParseError(f"no numeric score in reply: {text!r}")
    return min(1.0, max(0.0, float(match.group(0))))


def judge_constraint_score(
    representation: str,
    constraint: ConstraintSpec,
    client: LLMClient,
    temperature: float = 0.0,
    max_output_tokens: int = 1024,
) -> float:
    """Ask the judge model how well the representation satisfies the constraint.

    One corrective retry is made when the first reply has no number in it;
    after that the failure surfaces as :class:`JudgeParseError`.
    """
    if not representation:
        raise ValueError("representation must be non-empty")
    prompt = render_judge_instruction(constraint, representation)
    reply = client.complete(
        ChatRequest(
            user_text=prompt,
            temperature=temperature,
            max_output_tokens=max_output_tokens,
        )
    )
    try:
        return parse_score(reply)
    except ScoreParseError:
        pass
    retry_reply = client.complete(
        ChatRequest(
            user_text=prompt + RETRY_SUFFIX,
            temperature=temperature,
            max_output_tokens=max_output_tokens,
        )
    )
    try:
        return parse_score(retry_reply)
    except ScoreParseError as exc:
        raise JudgeParseError(
            f"judge reply unparseable after retry: {reply!r} / {retry_reply!r}"
        ) from exc
