"""Shared test machinery: stub clients, scripted model transports, mutations."""

from __future__ import annotations

import hashlib
import random
import re

from equirep.llm import ChatRequest

GENERATION_MARKER = "Your task is to transform a Python code snippet"
RECONSTRUCTION_MARKER = "You are an experienced Python developer."
NONCODE_JUDGE_MARKER = "Please determine whether the given representation is non-code"
CLASSIFY_MARKER = "Classify the following representation"

CODE_ANCHOR = "Here is the Python code:\n\n"
REPRESENTATION_ANCHOR = "The representation is:\n\n"
MEMORY_ANCHOR = "Previous representation (trial"


class StubClient:
    """Duck-typed client returning canned replies in order; records requests."""

    def __init__(self, replies: list[str]):
        self.replies = list(replies)
        self.requests: list[ChatRequest] = []

    def complete(self, request: ChatRequest) -> str:
        self.requests.append(request)
        return self.replies.pop(0)


class SequencedTransport:
    """Transport that answers by request kind, popping from per-kind queues."""

    def __init__(
        self,
        generation: list[str] | None = None,
        reconstruction: list[str] | None = None,
        judge: list[str] | None = None,
    ):
        self.generation = list(generation or [])
        self.reconstruction = list(reconstruction or [])
        self.judge = list(judge or [])
        self.requests: list[ChatRequest] = []

    def __call__(self, request: ChatRequest) -> str:
        self.requests.append(request)
        text = request.user_text
        if text.startswith(GENERATION_MARKER):
            return self.generation.pop(0)
        if text.startswith(RECONSTRUCTION_MARKER):
            return self.reconstruction.pop(0)
        return self.judge.pop(0)


# --- deterministic scripted model for the corpus fixture -------------------

FIXTURE_SNIPPETS: list[tuple[str, str]] = [
    ("squares", "values = [x * x for x in range(10)]"),
    ("even-sum", "total = sum(n for n in numbers if n % 2 == 0)"),
    ("read-lines", "with open(path) as fh:\n    lines = fh.readlines()"),
    ("greet", "def greet(name):\n    return 'Hello, ' + name"),
    ("word-count", "counts = {}\nfor word in words:\n    counts[word] = counts.get(word, 0) + 1"),
    ("grade", "if score > 90:\n    grade = 'A'\nelse:\n    grade = 'B'"),
    ("join-items", "text = ','.join(str(item) for item in items)"),
    ("safe-int", "try:\n    value = int(raw)\nexcept ValueError:\n    value = 0"),
    ("sort-pairs", "pairs = sorted(data.items(), key=lambda kv: kv[1], reverse=True)"),
    ("unpack", "first, *rest = tokens"),
]


def passing_trial(code: str) -> int:
    """Deterministic 1..3: the trial at which the scripted model 'succeeds'."""
    digest = hashlib.sha256(code.encode("utf-8")).hexdigest()
    return int(digest[:8], 16) % 3 + 1


def _extract_code(user_text: str) -> str:
    body = user_text.split(CODE_ANCHOR, 1)[1]
    cut = body.find("\n\n" + MEMORY_ANCHOR)
    return body if cut == -1 else body[:cut]


_ER_RE = re.compile(r"\Aattempt (\d+) describing: (.*)\Z", re.DOTALL)


def scripted_model(request: ChatRequest) -> str:
    """A stateless fake model: quality ramps up at a per-snippet trial number.

    Representations embed the trial number and the source code so the
    reconstruction and judge branches can answer deterministically from the
    request text alone, which makes recording independent of call order.
    """
    text = request.user_text
    if text.startswith(GENERATION_MARKER):
        code = _extract_code(text)
        trial = text.count(MEMORY_ANCHOR) + 1
        return f"attempt {trial} describing: {code}"
    if text.startswith(RECONSTRUCTION_MARKER):
        representation = text.split(REPRESENTATION_ANCHOR, 1)[1]
        match = _ER_RE.match(representation)
        trial, code = int(match.group(1)), match.group(2)
        if trial >= passing_trial(code):
            return code
        return f"draft_{trial} = {trial}"
    if text.startswith(CLASSIFY_MARKER):
        return "pseudocode"
    # non-code judge
    representation = text.split(REPRESENTATION_ANCHOR, 1)[1]
    match = _ER_RE.match(representation.removesuffix("\nOnly provide the score."))
    trial, code = int(match.group(1)), match.group(2)
    return "0.95" if trial >= passing_trial(code) else "0.60"


# --- snippet mutations for the oracle-equivalence battery ------------------

SEED_SNIPPETS = [code for _, code in FIXTURE_SNIPPETS] + [
    "result = max(a, b) if a != b else a",
    "names = [person.name for person in people if person.active]",
]

_EXTRA_STATEMENTS = [
    "checked = True",
    "count += 1",
    "print(result)",
    "items.append(value)",
]


def mutate(code: str, rng: random.Random) -> str:
    """One random textual edit; usually keeps the code parseable, not always."""
    lines = code.split("\n")
    kind = rng.randrange(7)
    if kind == 0:  # rename an identifier everywhere
        names = sorted(set(re.findall(r"[a-zA-Z_][a-zA-Z0-9_]*", code)))
        if names:
            victim = rng.choice(names)
            return re.sub(rf"\b{re.escape(victim)}\b", f"{victim}_v2", code)
    elif kind == 1:  # perturb a number
        return re.sub(r"\d+", lambda m: str(int(m.group(0)) + 1), code, count=1)
    elif kind == 2 and len(lines) > 1:  # drop a line
        del lines[rng.randrange(len(lines))]
        return "\n".join(lines)
    elif kind == 3:  # duplicate a top-level line
        top = [i for i, line in enumerate(lines) if line and not line.startswith(" ")]
        if top:
            i = rng.choice(top)
            return "\n".join(lines[: i + 1] + [lines[i]] + lines[i + 1 :])
    elif kind == 4:  # append a fresh statement
        return code + "\n" + rng.choice(_EXTRA_STATEMENTS)
    elif kind == 5:  # swap two lines
        if len(lines) > 1:
            i, j = rng.sample(range(len(lines)), 2)
            lines[i], lines[j] = lines[j], lines[i]
            return "\n".join(lines)
    else:  # break the syntax on purpose
        return code + " ("
    return code + "\n" + rng.choice(_EXTRA_STATEMENTS)


def mutation_pairs(count: int = 60, seed: int = 1234) -> list[tuple[str, str]]:
    """(parseable original, mutated candidate) pairs, deterministic by seed."""
    rng = random.Random(seed)
    pairs = []
    for i in range(count):
        original = SEED_SNIPPETS[i % len(SEED_SNIPPETS)]
        mutated = original
        for _ in range(rng.randrange(1, 4)):
            mutated = mutate(mutated, rng)
        pairs.append((original, mutated))
    return pairs
