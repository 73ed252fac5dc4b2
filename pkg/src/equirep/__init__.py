"""equirep: self-reflective generation of equivalent representations of code."""

from .config import RunConfig, resolve_config
from .corpus import (
    CorpusEntry,
    EntryOutcome,
    ERCategory,
    RunSummary,
    classify_er,
    load_corpus,
    run_corpus,
    summarize,
)
from .errors import (
    AuthenticationError,
    ConfigError,
    EquirepError,
    InputError,
    JudgeParseError,
    LLMError,
    LoadError,
    ParseFailure,
    ReflectionAborted,
    ReplayMiss,
    RequestTimeout,
    ScoreParseError,
    SummaryError,
    TemplateError,
)
from .llm import Cassette, ChatRequest, HttpTransport, LLMClient, request_fingerprint
from .prompts import (
    ConstraintSpec,
    constraint_preset,
    load_custom_constraint,
    render_feedback,
    render_generation_instruction,
    render_judge_instruction,
    render_reconstruction_instruction,
    resolve_constraint,
)
from .reflection import (
    Memory,
    ReflectionResult,
    TrialRecord,
    build_generation_context,
    run_reflection,
    strip_code_fence,
    write_transcript,
)
from .scoring import ScorePair, judge_constraint_score, parse_score
from .similarity import (
    SimilarityBreakdown,
    SubtreeFingerprintBag,
    TokenSequence,
    extract_subtrees,
    semantic_score,
    sim_syntax,
    sim_text,
    tokenize,
)

__version__ = "0.1.0"
