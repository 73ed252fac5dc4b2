import pytest

from equirep.config import RunConfig
from equirep.errors import ConfigError, InputError, ReflectionAborted
from equirep.llm import LLMClient
from equirep.prompts import constraint_preset, render_generation_instruction
from equirep.reflection import (
    Memory,
    build_generation_context,
    run_reflection,
    strip_code_fence,
    transcript_lines,
)
from helpers import GENERATION_MARKER, MEMORY_ANCHOR, SequencedTransport, StubClient

from pathlib import Path

CODE = "x = 1"
NON_CODE = constraint_preset("non-code")

GOLDEN_CONTEXT = Path(__file__).parent / "fixtures" / "golden" / "context_three_entries.txt"


def live_client(transport) -> LLMClient:
    return LLMClient(mode="live", transport=transport)


def config(**overrides) -> RunConfig:
    return RunConfig(**overrides)


# --- strip_code_fence ---------------------------------------------------------


def test_strip_code_fence_plain_text():
    assert strip_code_fence("  x = 1\n") == "x = 1"


def test_strip_code_fence_fenced_with_language():
    assert strip_code_fence("```python\nx = 1\n```") == "x = 1"


def test_strip_code_fence_fenced_without_language():
    assert strip_code_fence("```\nx = 1\n```\n") == "x = 1"


def test_strip_code_fence_with_surrounding_prose():
    assert strip_code_fence("Sure!\n```python\nx = 1\n```\nHope it helps") == "x = 1"


def test_strip_code_fence_single_backticks():
    assert strip_code_fence("`x = 1`") == "x = 1"


def test_strip_code_fence_multiline_block():
    reply = "```python\nif a:\n    b = 2\n```"
    assert strip_code_fence(reply) == "if a:\n    b = 2"


# --- build_generation_context ---------------------------------------------------


def test_context_with_empty_memory_is_the_instruction():
    assert build_generation_context(CODE, Memory(), NON_CODE) == (
        render_generation_instruction(CODE, NON_CODE)
    )


def test_context_with_one_entry():
    memory = Memory()
    memory.append("assign one to x", "too terse")
    context = build_generation_context(CODE, memory, NON_CODE)
    assert context.endswith(
        "\n\nPrevious representation (trial 1): assign one to x\nFeedback: too terse"
    )


def test_context_with_three_entries_matches_golden():
    memory = Memory()
    memory.append("assign one to x", "too terse")
    memory.append("set the variable x to the number one", "better wording")
    memory.append("store the integer one in x", "close to ideal")
    golden = GOLDEN_CONTEXT.read_text("utf-8")
    golden = golden[:-1] if golden.endswith("\n") else golden
    assert build_generation_context(CODE, memory, NON_CODE) == golden


def test_context_window_keeps_absolute_trial_numbers():
    memory = Memory()
    memory.append("first", "f1")
    memory.append("second", "f2")
    context = build_generation_context(CODE, memory, NON_CODE, window=1)
    assert "Previous representation (trial 1)" not in context
    assert "Previous representation (trial 2): second" in context


# --- run_reflection -------------------------------------------------------------


def test_threshold_pass_at_trial_one():
    transport = SequencedTransport(
        generation=["a plain english account of the assignment"],
        reconstruction=[CODE],
        judge=["0.95"],
    )
    result = run_reflection(CODE, NON_CODE, config(), live_client(transport))
    assert len(result.transcript) == 1
    assert result.terminated_by == "threshold"
    assert result.best_trial_index == 0
    assert result.best_scores.semantic == 1.0
    assert result.best_scores.constraint == 0.95
    assert result.transcript[0].feedback.startswith("We have manually evaluated")


def test_best_trial_wins_under_unreachable_threshold():
    # Per-trial score sums 1.0, 1.7, 1.5: the loop must run out of trials and
    # return the second trial's representation.
    transport = SequencedTransport(
        generation=["try one", "try two", "try three"],
        reconstruction=[CODE, CODE, CODE],
        judge=["0.0", "0.7", "0.5"],
    )
    result = run_reflection(
        CODE, NON_CODE, config(threshold=0.99, max_trials=3), live_client(transport)
    )
    assert [record.scores.total for record in result.transcript] == [1.0, 1.7, 1.5]
    assert result.best_trial_index == 1
    assert result.best_representation == "try two"
    assert result.terminated_by == "max_trials"
    assert len(result.transcript) == 3


def test_trials_never_exceed_max_trials():
    transport = SequencedTransport(
        generation=[f"attempt {i}" for i in range(4)],
        reconstruction=["broken ("] * 4,
        judge=["0.1"] * 4,
    )
    result = run_reflection(
        CODE, NON_CODE, config(max_trials=4), live_client(transport)
    )
    assert len(result.transcript) == 4
    assert result.terminated_by == "max_trials"


def test_running_best_is_monotone_and_equals_transcript_max():
    transport = SequencedTransport(
        generation=["one", "two", "three", "four"],
        reconstruction=[CODE, "broken (", CODE, "broken ("],
        judge=["0.2", "0.8", "0.4", "0.6"],
    )
    result = run_reflection(
        CODE, NON_CODE, config(threshold=1.0, max_trials=4), live_client(transport)
    )
    sums = [record.scores.total for record in result.transcript]
    running_best = []
    best = float("-inf")
    for value in sums:
        best = max(best, value)
        running_best.append(best)
    assert running_best == sorted(running_best)
    assert result.best_scores.total == max(sums)
    assert result.best_trial_index == sums.index(max(sums))


def test_tie_keeps_the_earlier_trial():
    transport = SequencedTransport(
        generation=["first attempt", "second attempt"],
        reconstruction=[CODE, CODE],
        judge=["0.5", "0.5"],
    )
    result = run_reflection(
        CODE, NON_CODE, config(threshold=1.0, max_trials=2), live_client(transport)
    )
    assert result.best_trial_index == 0
    assert result.best_representation == "first attempt"


def test_threshold_pass_on_final_trial_reports_threshold():
    transport = SequencedTransport(
        generation=["one", "two"],
        reconstruction=[CODE, CODE],
        judge=["0.5", "0.95"],
    )
    result = run_reflection(
        CODE, NON_CODE, config(max_trials=2), live_client(transport)
    )
    assert result.terminated_by == "threshold"
    assert len(result.transcript) == 2


def test_memory_grows_with_transcript():
    transport = SequencedTransport(
        generation=["one", "two", "three"],
        reconstruction=[CODE] * 3,
        judge=["0.1", "0.2", "0.3"],
    )
    run_reflection(
        CODE, NON_CODE, config(threshold=1.0, max_trials=3), live_client(transport)
    )
    generation_prompts = [
        request.user_text
        for request in transport.requests
        if request.user_text.startswith(GENERATION_MARKER)
    ]
    assert [prompt.count(MEMORY_ANCHOR) for prompt in generation_prompts] == [0, 1, 2]
    # Each trial's feedback is embedded in the next trial's context.
    assert "semantic-equivalent score: 1.00, non-code score: 0.10" in generation_prompts[1]


def test_generation_and_evaluation_temperatures():
    transport = SequencedTransport(
        generation=["er"], reconstruction=[CODE], judge=["0.95"]
    )
    run_reflection(CODE, NON_CODE, config(), live_client(transport))
    by_kind = {}
    for request in transport.requests:
        if request.user_text.startswith(GENERATION_MARKER):
            by_kind["generation"] = request.temperature
        elif request.user_text.startswith("You are an experienced Python developer."):
            by_kind["reconstruction"] = request.temperature
        else:
            by_kind["judge"] = request.temperature
    assert by_kind == {"generation": 0.7, "reconstruction": 0.0, "judge": 0.0}


def test_unparseable_input_fails_before_any_trial():
    client = StubClient([])
    with pytest.raises(InputError):
        run_reflection("x = (1", NON_CODE, config(), client)
    assert client.requests == []


def test_invalid_config_rejected():
    with pytest.raises(ConfigError):
        run_reflection(CODE, NON_CODE, config(max_trials=0), StubClient([]))
    with pytest.raises(ConfigError):
        run_reflection(CODE, NON_CODE, config(threshold=1.5), StubClient([]))


def test_abort_attaches_partial_transcript():
    # Trial 1 completes; trial 2's judge never produces a number.
    transport = SequencedTransport(
        generation=["one", "two"],
        reconstruction=[CODE, CODE],
        judge=["0.2", "no score", "still no score"],
    )
    with pytest.raises(ReflectionAborted) as excinfo:
        run_reflection(
            CODE, NON_CODE, config(threshold=1.0, max_trials=3), live_client(transport)
        )
    assert len(excinfo.value.transcript) == 1
    assert excinfo.value.transcript[0].representation == "one"


def test_record_then_replay_is_byte_identical(tmp_path):
    cassette = tmp_path / "reflection.cassette.jsonl"
    transport = SequencedTransport(
        generation=["one", "two"],
        reconstruction=["broken (", CODE],
        judge=["0.3", "0.95"],
    )
    record_config = config(mode="record", cassette=str(cassette))
    recorded = run_reflection(
        CODE, NON_CODE, record_config, record_config.build_client(transport=transport)
    )
    replay_config = config(mode="replay", cassette=str(cassette))
    replayed = run_reflection(
        CODE, NON_CODE, replay_config, replay_config.build_client()
    )
    assert transcript_lines(recorded.transcript) == transcript_lines(replayed.transcript)
    assert recorded == replayed
