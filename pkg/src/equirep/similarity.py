"""Hybrid code similarity: token n-gram precision plus CST subtree overlap.

The semantic-equivalent score between an original snippet and a reconstructed
snippet is ``text_weight * sim_text + syntax_weight * sim_syntax``.

``sim_text`` is the geometric mean over n = 1..4 of clipped n-gram precisions,
counted against the *second* argument (the reconstruction). ``sim_syntax`` is
the clipped multiset overlap of concrete-syntax-tree subtrees, again divided
by the subtree count of the second argument. Both are in [0, 1].

Parsing is grammar-based (parso) and pinned to a fixed grammar version so that
fingerprints are stable across hosts; pass ``grammar_version`` to re-target.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import parso
from parso import ParserSyntaxError

from .errors import ConfigError, ParseFailure

MAX_NGRAM_ORDER = 4
DEFAULT_GRAMMAR_VERSION = "3.10"

# Leaf types that carry no lexical token text (line structure only).
_NON_TOKEN_LEAF_TYPES = frozenset({"newline", "endmarker"})


@dataclass(frozen=True)
class TokenSequence:
    """Ordered lexical tokens of a snippet; comments and whitespace excluded."""

    tokens: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class SubtreeFingerprintBag:
    """Multiset of canonical fingerprints, one per internal CST node."""

    counts: tuple[tuple[str, int], ...]

    @classmethod
    def from_counter(cls, counter: Counter) -> "SubtreeFingerprintBag":
        return cls(counts=tuple(sorted(counter.items())))

    def as_counter(self) -> Counter:
        return Counter(dict(self.counts))

    @property
    def size(self) -> int:
        return sum(n for _, n in self.counts)


@dataclass(frozen=True)
class SimilarityBreakdown:
    """Everything that went into one semantic-equivalent score."""

    sim_text: float
    sim_syntax: float
    combined: float
    # (overlap, candidate n-gram count) for n = 1..4; count is 0 for orders
    # the candidate is too short to have.
    per_order_counts: tuple[tuple[int, int], ...]
    reconstruction_parse_failed: bool = False

    def to_dict(self) -> dict:
        return {
            "sim_text": self.sim_text,
            "sim_syntax": self.sim_syntax,
            "combined": self.combined,
            "per_order_counts": [list(pair) for pair in self.per_order_counts],
            "reconstruction_parse_failed": self.reconstruction_parse_failed,
        }


@lru_cache(maxsize=8)
def _grammar(version: str):
    return parso.load_grammar(version=version)


def tokenize(code: str, grammar_version: str = DEFAULT_GRAMMAR_VERSION) -> TokenSequence:
    """Lex ``code`` into its token texts.

    Total function: invalid regions are recovered by the parser and their
    salvageable tokens kept. Comments and whitespace never appear (they live
    in leaf prefixes, not leaf values).
    """
    tree = _grammar(grammar_version).parse(code, error_recovery=True)
    out: list[str] = []

    def walk(node) -> None:
        children = getattr(node, "children", None)
        if children is not None:
            for child in children:
                walk(child)
        elif node.type not in _NON_TOKEN_LEAF_TYPES and node.value.strip():
            out.append(node.value)

    walk(tree)
    return TokenSequence(tokens=tuple(out))


def _serialize_leaf(leaf) -> str:
    return f"({leaf.type} {json.dumps(leaf.value)})"


def _fingerprint(serialized: str) -> str:
    return hashlib.sha256(serialized.encode("utf-8")).hexdigest()


def extract_subtrees(
    code: str, grammar_version: str = DEFAULT_GRAMMAR_VERSION
) -> SubtreeFingerprintBag:
    """Fingerprint the full subtree rooted at every internal CST node.

    A subtree is serialized as nested ``(node-type children...)`` with leaf
    token text JSON-escaped, then hashed. Raises :class:`ParseFailure` when
    the code does not parse under the pinned grammar.
    """
    try:
        tree = _grammar(grammar_version).parse(code, error_recovery=False)
    except ParserSyntaxError as exc:
        raise ParseFailure(f"code does not parse: {exc}") from exc

    counter: Counter = Counter()

    def serialize(node) -> str:
        children = getattr(node, "children", None)
        if children is None:
            return _serialize_leaf(node)
        serialized = "(" + node.type + " " + " ".join(serialize(ch) for ch in children) + ")"
        counter[_fingerprint(serialized)] += 1
        return serialized

    serialize(tree)
    return SubtreeFingerprintBag.from_counter(counter)


def ngram_counts(tokens: TokenSequence, order: int) -> Counter:
    """Multiset of n-grams of the given order."""
    seq = tokens.tokens
    return Counter(seq[i : i + order] for i in range(len(seq) - order + 1))


def ngram_overlap_counts(
    reference: TokenSequence, candidate: TokenSequence
) -> tuple[tuple[int, int], ...]:
    """Per-order (clipped overlap, candidate n-gram count) for n = 1..4.

    Overlap clips each n-gram's contribution at the smaller of its two
    multiplicities, so repeated tokens cannot inflate the count.
    """
    pairs: list[tuple[int, int]] = []
    for order in range(1, MAX_NGRAM_ORDER + 1):
        cand = ngram_counts(candidate, order)
        total = sum(cand.values())
        if total == 0:
            pairs.append((0, 0))
            continue
        ref = ngram_counts(reference, order)
        overlap = sum(min(count, ref[gram]) for gram, count in cand.items())
        pairs.append((overlap, total))
    return tuple(pairs)


def sim_text_from_counts(per_order_counts: tuple[tuple[int, int], ...]) -> float:
    """Geometric mean of per-order precisions.

    Orders the candidate is too short for (count 0) are dropped and the
    remaining orders reweighted uniformly, which keeps identity at exactly
    1.0. Any kept order with zero overlap forces the score to 0.
    """
    kept = [(overlap, total) for overlap, total in per_order_counts if total > 0]
    if not kept:
        return 1.0  # both sides empty: nothing was lost
    if any(overlap == 0 for overlap, _ in kept):
        return 0.0
    log_sum = sum(math.log(overlap / total) for overlap, total in kept)
    return math.exp(log_sum / len(kept))


def sim_text(reference: TokenSequence, candidate: TokenSequence) -> float:
    """n-gram similarity of ``candidate`` against ``reference``.

    The first argument is the original code's tokens, the second the
    reconstruction's; n-gram totals in the denominator are the candidate's.
    """
    if len(candidate) == 0:
        return 1.0 if len(reference) == 0 else 0.0
    return sim_text_from_counts(ngram_overlap_counts(reference, candidate))


def subtree_overlap(
    original: SubtreeFingerprintBag, reconstructed: SubtreeFingerprintBag
) -> tuple[int, int]:
    """(clipped intersection size, reconstructed bag size)."""
    orig = original.as_counter()
    overlap = sum(min(count, orig[fp]) for fp, count in reconstructed.counts)
    return overlap, reconstructed.size


def sim_syntax(
    original: str,
    reconstructed: str,
    grammar_version: str = DEFAULT_GRAMMAR_VERSION,
) -> tuple[float, bool]:
    """CST subtree overlap ratio, denominated in the reconstruction's subtrees.

    Returns ``(score, parse_failed)``. A reconstruction that does not parse
    scores 0.0 with the flag set; an unparseable original raises
    :class:`ParseFailure` because input corpora are validated to parse.
    """
    original_bag = extract_subtrees(original, grammar_version)
    try:
        reconstructed_bag = extract_subtrees(reconstructed, grammar_version)
    except ParseFailure:
        return 0.0, True
    overlap, total = subtree_overlap(original_bag, reconstructed_bag)
    return overlap / total, False


def validate_weights(text_weight: float, syntax_weight: float) -> None:
    if text_weight < 0 or syntax_weight < 0:
        raise ConfigError("similarity weights must be non-negative")
    if abs(text_weight + syntax_weight - 1.0) > 1e-9:
        raise ConfigError(
            f"similarity weights must sum to 1, got {text_weight} + {syntax_weight}"
        )


def semantic_score(
    original: str,
    reconstructed: str,
    text_weight: float = 0.5,
    syntax_weight: float = 0.5,
    grammar_version: str = DEFAULT_GRAMMAR_VERSION,
) -> SimilarityBreakdown:
    """Weighted sum of text and syntax similarity with full diagnostics."""
    validate_weights(text_weight, syntax_weight)
    reference_tokens = tokenize(original, grammar_version)
    candidate_tokens = tokenize(reconstructed, grammar_version)
    per_order = ngram_overlap_counts(reference_tokens, candidate_tokens)
    if len(candidate_tokens) == 0:
        text = 1.0 if len(reference_tokens) == 0 else 0.0
    else:
        text = sim_text_from_counts(per_order)
    syntax, parse_failed = sim_syntax(original, reconstructed, grammar_version)
    # Weights within the sum tolerance can push the product a hair over 1.
    combined = min(1.0, text_weight * text + syntax_weight * syntax)
    return SimilarityBreakdown(
        sim_text=text,
        sim_syntax=syntax,
        combined=combined,
        per_order_counts=per_order,
        reconstruction_parse_failed=parse_failed,
    )


def is_parseable(code: str, grammar_version: str = DEFAULT_GRAMMAR_VERSION) -> bool:
    """True when the code parses under the pinned grammar."""
    try:
        _grammar(grammar_version).parse(code, error_recovery=False)
    except ParserSyntaxError:
        return False
    return True
