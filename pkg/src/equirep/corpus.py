"""Batch runner over a snippet corpus, score summaries, and taxonomy labeling.

Corpus files are JSON Lines: one ``{"id": ..., "code": ...}`` object per line.
Ids must be unique and every snippet must parse. Entries run in parallel
(bounded by the configured parallelism) but results, transcripts, and summary
rows always follow corpus order, so replayed runs are byte-stable.
"""

from __future__ import annotations

import enum
import json
import statistics
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .config import RunConfig
from .errors import (
    EquirepError,
    InputError,
    LoadError,
    ReflectionAborted,
    SummaryError,
)
from .llm import ChatRequest, LLMClient
from .prompts import ConstraintSpec
from .reflection import ReflectionResult, TrialRecord, run_reflection, write_transcript
from .similarity import is_parseable

HISTOGRAM_BIN_EDGES = [i / 10 for i in range(11)]  # 0.0, 0.1, ..., 1.0
_INNER_EDGES = HISTOGRAM_BIN_EDGES[1:-1]
HIGH_QUALITY_CUTOFF = 0.9


class ERCategory(enum.Enum):
    """Closed label set for the forms a representation can take."""

    DICTIONARY = "dictionary"
    TABLE = "table"
    XML = "xml"
    FLOWCHART = "flowchart"
    PARAPHRASED_APIS = "paraphrased-apis"
    PSEUDOCODE = "pseudocode"
    SQL = "sql"
    NL_COMMENT = "nl-comment"
    ARITHMETIC_EXPRESSION = "arithmetic-expression"
    OTHER = "other"


_CATEGORY_BY_VALUE = {category.value: category for category in ERCategory}

CLASSIFY_INSTRUCTION = (
    "Classify the following representation of a Python code snippet into "
    "exactly one of these categories: "
    + ", ".join(category.value for category in ERCategory)
    + ". Reply with only the category name.\n\nThe representation is:\n\n"
)


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    code: str


def load_corpus(path: str | Path) -> list[CorpusEntry]:
    """Load and validate a corpus file.

    Raises :class:`LoadError` with the offending line number for malformed
    records, the duplicated id, or the list of snippets that do not parse.
    """
    source = Path(path)
    if not source.exists():
        raise LoadError(f"corpus file not found: {source}")
    entries: list[CorpusEntry] = []
    seen: set[str] = set()
    for line_no, line in enumerate(source.read_text("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise LoadError(f"line {line_no}: invalid JSON ({exc})") from exc
        if not isinstance(raw, dict) or not isinstance(raw.get("id"), str) or not isinstance(raw.get("code"), str):
            raise LoadError(f"line {line_no}: expected object with string id and code")
        if raw["id"] in seen:
            raise LoadError(f"line {line_no}: duplicate id {raw['id']!r}")
        seen.add(raw["id"])
        entries.append(CorpusEntry(id=raw["id"], code=raw["code"]))
    unparseable = [entry.id for entry in entries if not is_parseable(entry.code)]
    if unparseable:
        raise LoadError(f"snippets do not parse: {unparseable}")
    return entries


@dataclass(frozen=True)
class EntryOutcome:
    """What one corpus entry produced: a transcript, or an error."""

    id: str
    transcript: tuple[TrialRecord, ...] | None
    error: str | None = None
    category: str | None = None


@dataclass(frozen=True)
class EntryRow:
    id: str
    status: str  # "ok" | "failed"
    error: str | None
    first_semantic: float | None
    first_constraint: float | None
    final_semantic: float | None
    final_constraint: float | None
    trials_used: int | None
    category: str | None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "status": self.status,
            "error": self.error,
            "first_semantic": self.first_semantic,
            "first_constraint": self.first_constraint,
            "final_semantic": self.final_semantic,
            "final_constraint": self.final_constraint,
            "trials_used": self.trials_used,
            "category": self.category,
        }


@dataclass(frozen=True)
class RunSummary:
    rows: tuple[EntryRow, ...]
    aggregates: dict

    def to_dict(self) -> dict:
        return {
            "entries": [row.to_dict() for row in self.rows],
            "aggregates": self.aggregates,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def format_table(self) -> str:
        """Human-readable per-entry table plus the aggregate block."""
        header = f"{'id':<20} {'status':<8} {'first s/c':<12} {'final s/c':<12} {'trials':<7} category"
        lines = [header, "-" * len(header)]
        for row in self.rows:
            if row.status == "ok":
                first = f"{row.first_semantic:.2f}/{row.first_constraint:.2f}"
                final = f"{row.final_semantic:.2f}/{row.final_constraint:.2f}"
                trials = str(row.trials_used)
            else:
                first = final = "-"
                trials = "-"
            lines.append(
                f"{row.id:<20} {row.status:<8} {first:<12} {final:<12} {trials:<7} "
                f"{row.category or '-'}"
            )
        agg = self.aggregates
        lines.append("")
        lines.append(
            f"entries: {agg['entries_total']} total, {agg['entries_ok']} ok, "
            f"{agg['entries_failed']} failed"
        )
        fraction = agg["fraction_both_final_above_0_9"]
        lines.append(
            "high quality (both final scores > 0.9): "
            + ("n/a" if fraction is None else f"{fraction:.4f}")
        )
        for phase in ("first", "final"):
            for metric in ("semantic", "constraint"):
                stats = agg[phase][metric]
                mean = "n/a" if stats["mean"] is None else f"{stats['mean']:.4f}"
                median = "n/a" if stats["median"] is None else f"{stats['median']:.4f}"
                lines.append(f"{phase} {metric}: mean={mean} median={median}")
        return "\n".join(lines) + "\n"


def histogram_bin(value: float) -> int:
    """Index of the 0.1-wide bin holding the value; 1.0 lands in the last bin."""
    return bisect_right(_INNER_EDGES, value)


def _score_stats(values: Sequence[float]) -> dict:
    histogram = [0] * 10
    for value in values:
        histogram[histogram_bin(value)] += 1
    return {
        "mean": statistics.fmean(values) if values else None,
        "median": statistics.median(values) if values else None,
        "histogram": histogram,
    }


def summarize(outcomes: Sequence[EntryOutcome]) -> RunSummary:
    """Collapse per-entry outcomes into rows and aggregate distributions.

    First-trial scores come from trial index 0, final scores from the best
    trial (highest score sum, earliest on ties). An outcome that claims
    success with an empty transcript is a caller bug and raises
    :class:`SummaryError`.
    """
    rows: list[EntryRow] = []
    for outcome in outcomes:
        if outcome.transcript is None:
            rows.append(
                EntryRow(
                    id=outcome.id,
                    status="failed",
                    error=outcome.error or "unknown error",
                    first_semantic=None,
                    first_constraint=None,
                    final_semantic=None,
                    final_constraint=None,
                    trials_used=None,
                    category=None,
                )
            )
            continue
        if len(outcome.transcript) == 0:
            raise SummaryError(f"entry {outcome.id!r} has an empty transcript")
        first = outcome.transcript[0].scores
        best = max(outcome.transcript, key=lambda record: record.scores.total)
        rows.append(
            EntryRow(
                id=outcome.id,
                status="ok",
                error=None,
                first_semantic=first.semantic,
                first_constraint=first.constraint,
                final_semantic=best.scores.semantic,
                final_constraint=best.scores.constraint,
                trials_used=len(outcome.transcript),
                category=outcome.category,
            )
        )

    ok_rows = [row for row in rows if row.status == "ok"]
    high_quality = [
        row
        for row in ok_rows
        if row.final_semantic > HIGH_QUALITY_CUTOFF
        and row.final_constraint > HIGH_QUALITY_CUTOFF
    ]
    aggregates = {
        "entries_total": len(rows),
        "entries_ok": len(ok_rows),
        "entries_failed": len(rows) - len(ok_rows),
        "histogram_bin_edges": HISTOGRAM_BIN_EDGES,
        "first": {
            "semantic": _score_stats([row.first_semantic for row in ok_rows]),
            "constraint": _score_stats([row.first_constraint for row in ok_rows]),
        },
        "final": {
            "semantic": _score_stats([row.final_semantic for row in ok_rows]),
            "constraint": _score_stats([row.final_constraint for row in ok_rows]),
        },
        "fraction_both_final_above_0_9": (
            len(high_quality) / len(ok_rows) if ok_rows else None
        ),
    }
    return RunSummary(rows=tuple(rows), aggregates=aggregates)


def classify_er(representation: str, client: LLMClient, max_output_tokens: int = 64) -> ERCategory:
    """Have the judge model pick one taxonomy label; anything else is OTHER."""
    if not representation:
        raise InputError("representation must be non-empty")
    reply = client.complete(
        ChatRequest(
            user_text=CLASSIFY_INSTRUCTION + representation,
            temperature=0.0,
            max_output_tokens=max_output_tokens,
        )
    )
    normalized = reply.strip().strip("。.").strip().strip("'\"").lower()
    return _CATEGORY_BY_VALUE.get(normalized, ERCategory.OTHER)


def _run_entry(
    entry: CorpusEntry,
    constraint: ConstraintSpec,
    config: RunConfig,
    client: LLMClient,
) -> EntryOutcome:
    try:
        result: ReflectionResult = run_reflection(entry.code, constraint, config, client)
    except ReflectionAborted as exc:
        return EntryOutcome(id=entry.id, transcript=None, error=str(exc))
    except EquirepError as exc:
        return EntryOutcome(id=entry.id, transcript=None, error=str(exc))
    category = None
    if config.classify:
        category = classify_er(
            result.best_representation, client, max_output_tokens=config.max_output_tokens
        ).value
    return EntryOutcome(id=entry.id, transcript=result.transcript, category=category)


def run_corpus(
    entries: Sequence[CorpusEntry],
    constraint: ConstraintSpec,
    config: RunConfig,
    client: LLMClient,
    out_dir: str | Path | None = None,
) -> RunSummary:
    """Run the trial loop over every entry and persist the transcripts.

    Entries execute in parallel up to ``config.parallelism``; failures become
    failed rows unless ``config.fail_fast`` is set, in which case the first
    failure is re-raised after the pool drains.
    """
    config.validate()
    destination = Path(out_dir if out_dir is not None else config.out_dir)

    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        outcomes = list(
            pool.map(lambda e: _run_entry(e, constraint, config, client), entries)
        )

    if config.fail_fast:
        for outcome in outcomes:
            if outcome.transcript is None:
                raise ReflectionAborted(
                    f"entry {outcome.id!r} failed: {outcome.error}", transcript=[]
                )

    for outcome in outcomes:
        if outcome.transcript is not None:
            write_transcript(
                destination / "transcripts" / f"{outcome.id}.jsonl", outcome.transcript
            )
    return summarize(outcomes)
