"""Instruction and feedback templates, plus the constraint presets that fill them.

Templates live as data files under ``equirep/templates/`` so the runtime and
the golden-file tests share one source. Rendering is a single pass: a value
substituted into the text is never re-scanned for placeholders, so braces
inside code or representations survive literally.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import ConfigError, TemplateError

PLACEHOLDERS = (
    "The definition of constraints on representations",
    "constraint_score_name",
    "constraint_score",
    "semantic_score",
    "representation",
    "Constraint",
    "code",
)

_PLACEHOLDER_RE = re.compile(
    "|".join(re.escape("{" + name + "}") for name in PLACEHOLDERS)
)


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    """Read a bundled template; one trailing newline from the file is dropped."""
    text = resources.files("equirep.templates").joinpath(f"{name}.txt").read_text("utf-8")
    return text[:-1] if text.endswith("\n") else text


def render(template: str, bindings: dict[str, str]) -> str:
    """Substitute every placeholder occurrence in one pass.

    Raises :class:`TemplateError` if the template mentions a placeholder the
    bindings do not cover.
    """

    def substitute(match: re.Match) -> str:
        name = match.group(0)[1:-1]
        if name not in bindings:
            raise TemplateError(f"unbound placeholder {{{name}}}")
        return bindings[name]

    return _PLACEHOLDER_RE.sub(substitute, template)


@dataclass(frozen=True)
class ConstraintSpec:
    """A named form constraint: its definition text and its judge instruction."""

    name: str
    definition: str
    judge_instruction: str
    score_name: str


def _preset(name: str, definition: str, judge_template: str) -> ConstraintSpec:
    return ConstraintSpec(
        name=name,
        definition=definition,
        judge_instruction=load_template(judge_template),
        score_name=f"{name.lower()} score",
    )


@lru_cache(maxsize=None)
def constraint_preset(key: str) -> ConstraintSpec:
    """Return one of the built-in constraints: non-code, comment, pseudocode, flowchart."""
    presets = {
        "non-code": lambda: _preset(
            "Non-code",
            "The representation should be non-code. The further the representation "
            "is from the source code, the better.",
            "judge_non_code",
        ),
        "comment": lambda: _preset(
            "Comment",
            "The representation should be a fluent and concise natural language comment.",
            "judge_comment",
        ),
        "pseudocode": lambda: _preset(
            "Pseudocode",
            "The representation should be a well-formed and standardized pseudocode.",
            "judge_pseudocode",
        ),
        "flowchart": lambda: _preset(
            "Flowchart",
            "The representation should be a clear and concise flowchart.",
            "judge_flowchart",
        ),
    }
    if key not in presets:
        raise ConfigError(
            f"unknown constraint preset {key!r}; expected one of {sorted(presets)}"
        )
    return presets[key]()


def load_custom_constraint(path: str | Path) -> ConstraintSpec:
    """Load a user-defined constraint from a JSON file.

    Required fields: ``name``, ``definition``, ``judge_instruction`` (which must
    contain the ``{representation}`` placeholder). ``score_name`` defaults to
    ``"<name> score"`` lowercased.
    """
    try:
        raw = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load constraint file {path}: {exc}") from exc
    for key in ("name", "definition", "judge_instruction"):
        if not isinstance(raw.get(key), str) or not raw[key]:
            raise ConfigError(f"constraint file {path} is missing field {key!r}")
    if "{representation}" not in raw["judge_instruction"]:
        raise ConfigError(
            f"constraint file {path}: judge_instruction must contain {{representation}}"
        )
    return ConstraintSpec(
        name=raw["name"],
        definition=raw["definition"],
        judge_instruction=raw["judge_instruction"],
        score_name=raw.get("score_name") or f"{raw['name'].lower()} score",
    )


def resolve_constraint(spec: str) -> ConstraintSpec:
    """Map a CLI-style constraint argument to a spec.

    Accepts a preset key or ``custom:<path>``.
    """
    if spec.startswith("custom:"):
        return load_custom_constraint(spec[len("custom:"):])
    return constraint_preset(spec)


def render_generation_instruction(code: str, constraint: ConstraintSpec) -> str:
    return render(
        load_template("generation"),
        {
            "code": code,
            "Constraint": constraint.name,
            "The definition of constraints on representations": constraint.definition,
        },
    )


def render_reconstruction_instruction(representation: str) -> str:
    return render(load_template("reconstruction"), {"representation": representation})


def render_feedback(
    semantic_score: float, constraint: ConstraintSpec, constraint_score: float
) -> str:
    """Natural-language feedback carrying both scores at two decimals."""
    if not (0.0 <= semantic_score <= 1.0 and 0.0 <= constraint_score <= 1.0):
        raise ValueError("feedback scores must be within [0, 1]")
    return render(
        load_template("feedback"),
        {
            "Constraint": constraint.name,
            "The definition of constraints on representations": constraint.definition,
            "semantic_score": f"{semantic_score:.2f}",
            "constraint_score_name": constraint.score_name,
            "constraint_score": f"{constraint_score:.2f}",
        },
    )


def render_judge_instruction(constraint: ConstraintSpec, representation: str) -> str:
    return render(constraint.judge_instruction, {"representation": representation})
