"""Command-line entry points: generate, corpus, sim.

Exit codes: 0 success, 2 configuration error, 3 input/corpus load error,
4 provider/network error (including replay misses), 5 judge-parse error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import resolve_config
from .corpus import load_corpus, run_corpus
from .errors import (
    ConfigError,
    EquirepError,
    InputError,
    JudgeParseError,
    LLMError,
    LoadError,
    ParseFailure,
    ReflectionAborted,
)
from .prompts import resolve_constraint
from .reflection import run_reflection, write_transcript
from .similarity import semantic_score

EXIT_CONFIG = 2
EXIT_LOAD = 3
EXIT_NETWORK = 4
EXIT_JUDGE = 5


def _exit_code(exc: EquirepError) -> int:
    if isinstance(exc, ReflectionAborted) and exc.cause is not None:
        if isinstance(exc.cause, JudgeParseError):
            return EXIT_JUDGE
        if isinstance(exc.cause, LLMError):
            return EXIT_NETWORK
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (LoadError, InputError, ParseFailure)):
        return EXIT_LOAD
    if isinstance(exc, JudgeParseError):
        return EXIT_JUDGE
    if isinstance(exc, LLMError):
        return EXIT_NETWORK
    return 1


def _fail(exc: EquirepError) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(_exit_code(exc))


def _parse_weights(value: str | None) -> tuple[float | None, float | None]:
    if value is None:
        return None, None
    parts = value.split(",")
    if len(parts) != 2:
        raise ConfigError(f"--weights expects 'a,b', got {value!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ConfigError(f"--weights expects two numbers, got {value!r}") from exc


def _shared_options(fn):
    options = [
        click.option("--config", "config_file", type=click.Path(), default=None,
                     help="JSON config file; flags override it."),
        click.option("--constraint", default=None,
                     help="non-code | comment | pseudocode | flowchart | custom:<path>"),
        click.option("--threshold", type=float, default=None),
        click.option("--max-trials", type=int, default=None),
        click.option("--weights", default=None, help="text,syntax weights, e.g. 0.5,0.5"),
        click.option("--mode", type=click.Choice(["live", "record", "replay"]), default=None),
        click.option("--cassette", type=click.Path(), default=None),
        click.option("--out", "out_dir", type=click.Path(), default=None),
        click.option("--parallel", "parallelism", type=int, default=None),
        click.option("--endpoint", default=None),
        click.option("--model", default=None),
        click.option("--memory-window", type=int, default=None),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _build(config_file, weights, **overrides):
    text_weight, syntax_weight = _parse_weights(weights)
    overrides["text_weight"] = text_weight
    overrides["syntax_weight"] = syntax_weight
    return resolve_config(config_file, overrides)


@click.group()
def main() -> None:
    """Generate and evaluate equivalent representations of code."""


@main.command()
@click.argument("code_file", type=click.Path(), required=False)
@click.option("--code", "inline_code", default=None, help="Inline snippet instead of a file.")
@click.option("--id", "snippet_id", default=None, help="Name for the transcript file.")
@_shared_options
def generate(code_file, inline_code, snippet_id, config_file, weights, **overrides) -> None:
    """Produce the best representation for one snippet and write its transcript."""
    try:
        config = _build(config_file, weights, **overrides)
        if (code_file is None) == (inline_code is None):
            raise InputError("provide exactly one of CODE_FILE or --code")
        if code_file is not None:
            path = Path(code_file)
            if not path.exists():
                raise InputError(f"code file not found: {path}")
            code = path.read_text("utf-8")
            name = snippet_id or path.stem
        else:
            code = inline_code
            name = snippet_id or "snippet"
        constraint = resolve_constraint(config.constraint)
        client = config.build_client()
        result = run_reflection(code, constraint, config, client)
        transcript_path = Path(config.out_dir) / "transcripts" / f"{name}.jsonl"
        write_transcript(transcript_path, result.transcript)
        click.echo(
            f"Best representation (trial {result.best_trial_index + 1} of "
            f"{len(result.transcript)}, terminated by {result.terminated_by}):"
        )
        click.echo(result.best_representation)
        click.echo("")
        click.echo(f"semantic-equivalent score: {result.best_scores.semantic:.4f}")
        click.echo(f"{constraint.score_name}: {result.best_scores.constraint:.4f}")
        click.echo(f"transcript: {transcript_path}")
    except EquirepError as exc:
        _fail(exc)


@main.command()
@click.argument("corpus_file", type=click.Path())
@click.option("--classify/--no-classify", "classify", default=None,
              help="Label each best representation with a taxonomy category.")
@click.option("--fail-fast/--no-fail-fast", "fail_fast", default=None)
@_shared_options
def corpus(corpus_file, classify, fail_fast, config_file, weights, **overrides) -> None:
    """Run the trial loop over a corpus; write transcripts and score summaries."""
    try:
        config = _build(
            config_file, weights, classify=classify, fail_fast=fail_fast, **overrides
        )
        entries = load_corpus(corpus_file)
        constraint = resolve_constraint(config.constraint)
        client = config.build_client()
        summary = run_corpus(entries, constraint, config, client)
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_text(summary.to_json(), encoding="utf-8")
        (out / "summary.txt").write_text(summary.format_table(), encoding="utf-8")
        click.echo(summary.format_table(), nl=False)
        click.echo(f"summary: {out / 'summary.json'}")
    except EquirepError as exc:
        _fail(exc)


@main.command()
@click.argument("file_a", type=click.Path())
@click.argument("file_b", type=click.Path())
@click.option("--weights", default=None, help="text,syntax weights, e.g. 0.5,0.5")
@click.option("--json", "as_json", is_flag=True, default=False)
def sim(file_a, file_b, weights, as_json) -> None:
    """Score FILE_B as a reconstruction of FILE_A."""
    try:
        text_weight, syntax_weight = _parse_weights(weights)
        if text_weight is None:
            text_weight, syntax_weight = 0.5, 0.5
        for path in (file_a, file_b):
            if not Path(path).exists():
                raise InputError(f"file not found: {path}")
        original = Path(file_a).read_text("utf-8")
        reconstructed = Path(file_b).read_text("utf-8")
        breakdown = semantic_score(original, reconstructed, text_weight, syntax_weight)
        if as_json:
            click.echo(json.dumps(breakdown.to_dict(), sort_keys=True))
            return
        click.echo(f"sim_text: {breakdown.sim_text:.6f}")
        click.echo(f"sim_syntax: {breakdown.sim_syntax:.6f}")
        click.echo(f"combined: {breakdown.combined:.6f}")
        for order, (overlap, total) in enumerate(breakdown.per_order_counts, start=1):
            click.echo(f"{order}-gram overlap: {overlap}/{total}")
        if breakdown.reconstruction_parse_failed:
            click.echo("note: second file does not parse; sim_syntax forced to 0")
    except EquirepError as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
