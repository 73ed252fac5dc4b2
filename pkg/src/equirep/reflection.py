"""The trial loop: generate a representation, reconstruct code, score, feed back.

Each trial asks the generator model for a representation of the input code
(with all prior representations and their feedback as context), asks the
reconstructor model to turn that representation back into code, scores the
round trip, and converts the scores into natural-language feedback for the
next trial. The loop stops as soon as both scores reach the threshold, or
after ``max_trials`` trials; the best-scoring representation seen wins.

Transcripts serialize as JSON Lines, one record per trial::

    {"index": 0, "representation": "...", "reconstructed_code": "...",
     "semantic_score": 0.9, "constraint_score": 0.95, "feedback": "...",
     "similarity": {"sim_text": ..., "sim_syntax": ..., "combined": ...,
                    "per_order_counts": [[..., ...], ...],
                    "reconstruction_parse_failed": false}}
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .config import RunConfig
from .errors import InputError, LLMError, JudgeParseError, ReflectionAborted
from .llm import ChatRequest, LLMClient
from .prompts import (
    ConstraintSpec,
    render_feedback,
    render_generation_instruction,
    render_reconstruction_instruction,
)
from .scoring import ScorePair, judge_constraint_score
from .similarity import SimilarityBreakdown, is_parseable, semantic_score

_FENCE_RE = re.compile(r"```[^\n`]*\n(.*?)\n?```", re.DOTALL)

TERMINATED_BY_THRESHOLD = "threshold"
TERMINATED_BY_MAX_TRIALS = "max_trials"


@dataclass(frozen=True)
class TrialRecord:
    index: int
    representation: str
    reconstructed_code: str
    scores: ScorePair
    feedback: str
    similarity_breakdown: SimilarityBreakdown

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "representation": self.representation,
            "reconstructed_code": self.reconstructed_code,
            "semantic_score": self.scores.semantic,
            "constraint_score": self.scores.constraint,
            "feedback": self.feedback,
            "similarity": self.similarity_breakdown.to_dict(),
        }


@dataclass
class Memory:
    """Ordered (representation, feedback) pairs from completed trials."""

    entries: list[tuple[str, str]] = field(default_factory=list)

    def append(self, representation: str, feedback: str) -> None:
        self.entries.append((representation, feedback))

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class ReflectionResult:
    best_representation: str
    best_scores: ScorePair
    best_trial_index: int
    transcript: tuple[TrialRecord, ...]
    terminated_by: str


def strip_code_fence(text: str) -> str:
    """Peel markdown fencing off a reconstructor reply.

    Models regularly answer with a fenced block despite being told not to;
    the first fenced block's body (language tag dropped) is the code. A reply
    wrapped in single backticks or bare whitespace is stripped likewise.
    """
    match = _FENCE_RE.search(text)
    if match:
        return match.group(1).strip()
    stripped = text.strip()
    if len(stripped) >= 2 and stripped.startswith("`") and stripped.endswith("`"):
        return stripped[1:-1].strip()
    return stripped


def build_generation_context(
    code: str,
    memory: Memory,
    constraint: ConstraintSpec,
    window: int | None = None,
) -> str:
    """Generation instruction plus one block per remembered trial.

    Blocks keep trial order and absolute trial numbers; ``window`` limits the
    context to the most recent entries without renumbering them.
    """
    instruction = render_generation_instruction(code, constraint)
    blocks = [
        f"Previous representation (trial {k}): {representation}\nFeedback: {feedback}"
        for k, (representation, feedback) in enumerate(memory.entries, start=1)
    ]
    if window is not None:
        blocks = blocks[len(blocks) - window :] if window else []
    if not blocks:
        return instruction
    return instruction + "\n\n" + "\n\n".join(blocks)


def run_reflection(
    code: str,
    constraint: ConstraintSpec,
    config: RunConfig,
    client: LLMClient,
) -> ReflectionResult:
    """Run the full trial loop for one snippet.

    The input code must parse; model or judge failures abort the run with the
    partial transcript attached to the raised :class:`ReflectionAborted`.
    """
    config.validate()
    if not is_parseable(code):
        raise InputError("input code does not parse; fix the snippet or the corpus")

    memory = Memory()
    transcript: list[TrialRecord] = []
    best: TrialRecord | None = None
    terminated_by = TERMINATED_BY_MAX_TRIALS

    for index in range(config.max_trials):
        context = build_generation_context(
            code, memory, constraint, window=config.memory_window
        )
        try:
            representation = client.complete(
                ChatRequest(
                    user_text=context,
                    temperature=config.generation_temperature,
                    max_output_tokens=config.max_output_tokens,
                )
            )
            reconstruction_reply = client.complete(
                ChatRequest(
                    user_text=render_reconstruction_instruction(representation),
                    temperature=config.evaluation_temperature,
                    max_output_tokens=config.max_output_tokens,
                )
            )
            reconstructed = strip_code_fence(reconstruction_reply)
            breakdown = semantic_score(
                code, reconstructed, config.text_weight, config.syntax_weight
            )
            constraint_value = judge_constraint_score(
                representation,
                constraint,
                client,
                temperature=config.evaluation_temperature,
                max_output_tokens=config.max_output_tokens,
            )
        except (LLMError, JudgeParseError) as exc:
            raise ReflectionAborted(
                f"trial {index} failed: {exc}", transcript=transcript, cause=exc
            ) from exc

        scores = ScorePair(semantic=breakdown.combined, constraint=constraint_value)
        feedback = render_feedback(scores.semantic, constraint, scores.constraint)
        record = TrialRecord(
            index=index,
            representation=representation,
            reconstructed_code=reconstructed,
            scores=scores,
            feedback=feedback,
            similarity_breakdown=breakdown,
        )
        transcript.append(record)
        memory.append(representation, feedback)

        if best is None or scores.total > best.scores.total:
            best = record
        if scores.semantic >= config.threshold and scores.constraint >= config.threshold:
            terminated_by = TERMINATED_BY_THRESHOLD
            break

    return ReflectionResult(
        best_representation=best.representation,
        best_scores=best.scores,
        best_trial_index=best.index,
        transcript=tuple(transcript),
        terminated_by=terminated_by,
    )


def transcript_lines(transcript: tuple[TrialRecord, ...] | list[TrialRecord]) -> str:
    """Serialize a transcript to JSON Lines (deterministic byte-for-byte)."""
    return "".join(
        json.dumps(record.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"
        for record in transcript
    )


def write_transcript(
    path: str | Path, transcript: tuple[TrialRecord, ...] | list[TrialRecord]
) -> None:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(transcript_lines(transcript), encoding="utf-8")


def load_transcript(path: str | Path) -> list[dict]:
    """Read a transcript file back as plain dicts (schema above)."""
    lines = Path(path).read_text("utf-8").splitlines()
    return [json.loads(line) for line in lines if line.strip()]
