"""Seed-command pattern grammar and the API action schema.

A seed command is a template made of literal tokens and typed variables,
bound to one API action. Variables stand for argument values and must be
separated by at least one literal (or a pattern boundary); a pattern needs
at least one literal so there is always something concrete to match.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from .text import Token, is_valid_token, tokenize


class PatternError(ValueError):
    """Base class for pattern grammar violations."""


class UnknownVariable(PatternError):
    pass


class AdjacentVariables(PatternError):
    pass


class NoLiterals(PatternError):
    pass


class BadToken(PatternError):
    pass


@dataclass(frozen=True)
class Lit:
    token: Token


@dataclass(frozen=True)
class Var:
    name: str
    slot_type: str


PatternElement = Union[Lit, Var]

_MARKER = re.compile(r"^\$([A-Za-z_][A-Za-z0-9_]*)$")


@dataclass(frozen=True)
class ArgSpec:
    name: str
    slot_type: str
    prompt: str


@dataclass(frozen=True)
class ApiAction:
    """An executable action with an ordered argument schema.

    The gloss is a delexicalized description with exactly one ``{argName}``
    placeholder per argument; ``done_gloss`` is its past-tense counterpart
    used for execution result messages.
    """

    id: str
    name: str
    args: tuple[ArgSpec, ...]
    gloss: str
    done_gloss: str
    task_id: str

    def __post_init__(self):
        names = [a.name for a in self.args]
        if len(names) != len(set(names)):
            raise ValueError(f"duplicate arg names in action {self.id}")
        for text, label in ((self.gloss, "gloss"), (self.done_gloss, "done_gloss")):
            placeholders = re.findall(r"\{([A-Za-z_][A-Za-z0-9_]*)\}", text)
            if sorted(placeholders) != sorted(names):
                raise ValueError(
                    f"{label} of action {self.id} must contain exactly one "
                    f"placeholder per arg, got {placeholders} for {names}"
                )

    def arg(self, name: str) -> ArgSpec:
        for a in self.args:
            if a.name == name:
                return a
        raise KeyError(name)


@dataclass(frozen=True)
class SlotType:
    id: str
    lexicon: frozenset[tuple[Token, ...]] | None = None

    def __post_init__(self):
        if self.lexicon is not None and not self.lexicon:
            raise ValueError(f"slot type {self.id}: lexicon present but empty")

    def knows(self, value: tuple[Token, ...]) -> bool:
        """Advisory check: unknown values are accepted but flagged upstream."""
        return self.lexicon is None or value in self.lexicon


DEVELOPER = "developer"


@dataclass(frozen=True)
class Provenance:
    kind: str  # "developer" or "learned"
    user_id: str | None = None
    session_id: str | None = None

    @staticmethod
    def developer() -> "Provenance":
        return Provenance(DEVELOPER)

    @staticmethod
    def learned(user_id: str, session_id: str) -> "Provenance":
        return Provenance("learned", user_id, session_id)


@dataclass(frozen=True)
class SeedCommand:
    id: int
    pattern: tuple[PatternElement, ...]
    action_id: str
    provenance: Provenance
    task_id: str
    created_at: int
    always_elicit: frozenset[str] = field(default_factory=frozenset)

    @property
    def literals(self) -> tuple[Token, ...]:
        return tuple(el.token for el in self.pattern if isinstance(el, Lit))

    @property
    def variables(self) -> tuple[Var, ...]:
        return tuple(el for el in self.pattern if isinstance(el, Var))


def validate_pattern(pattern: tuple[PatternElement, ...], action: ApiAction | None = None) -> None:
    """Raise a PatternError unless the element sequence is a legal pattern."""
    if not any(isinstance(el, Lit) for el in pattern):
        raise NoLiterals("pattern must contain at least one literal")
    seen = set()
    for prev, el in zip((None, *pattern), pattern):
        if isinstance(el, Lit):
            if not is_valid_token(el.token):
                raise BadToken(f"not a normalized token: {el.token!r}")
            continue
        if isinstance(prev, Var):
            raise AdjacentVariables(f"variables {prev.name} and {el.name} are adjacent")
        if el.name in seen:
            raise PatternError(f"variable {el.name} appears twice")
        seen.add(el.name)
        if action is not None and el.name not in {a.name for a in action.args}:
            raise UnknownVariable(f"variable {el.name} not in schema of {action.id}")


def parse_pattern(pattern_text: str, action: ApiAction) -> tuple[PatternElement, ...]:
    """Parse ``$name``-marked pattern text against an action schema.

    Literal words are normalized exactly like user utterances, so a stored
    pattern always matches its own rendering.
    """
    elements = _parse_elements(pattern_text, {a.name: a.slot_type for a in action.args})
    validate_pattern(elements, action)
    return elements


def parse_rule_pattern(pattern_text: str) -> tuple[PatternElement, ...]:
    """Parse pattern text where any ``$name`` is allowed (untyped rules)."""
    elements = _parse_elements(pattern_text, None)
    validate_pattern(elements)
    return elements


def _parse_elements(
    pattern_text: str, schema: dict[str, str] | None
) -> tuple[PatternElement, ...]:
    elements: list[PatternElement] = []
    for chunk in pattern_text.split():
        marker = _MARKER.match(chunk)
        if marker:
            name = marker.group(1)
            if schema is None:
                elements.append(Var(name, "any"))
            elif name in schema:
                elements.append(Var(name, schema[name]))
            else:
                raise UnknownVariable(f"no schema entry for ${name}")
        else:
            elements.extend(Lit(tok) for tok in tokenize(chunk))
    return tuple(elements)


def pattern_text(pattern: tuple[PatternElement, ...]) -> str:
    """Inverse of parse_pattern for display and persistence."""
    return " ".join(
        el.token if isinstance(el, Lit) else f"${el.name}" for el in pattern
    )


def render_option_text(action: ApiAction, bindings: dict[str, tuple[Token, ...]]) -> str:
    """Fill the gloss: bound args by value, unbound args by slot type name."""
    return _render(action.gloss, action, bindings)


def render_done_text(action: ApiAction, bindings: dict[str, tuple[Token, ...]]) -> str:
    return _render(action.done_gloss, action, bindings)


def _render(template: str, action: ApiAction, bindings: dict[str, tuple[Token, ...]]) -> str:
    values = {}
    for spec in action.args:
        bound = bindings.get(spec.name)
        values[spec.name] = " ".join(bound) if bound else spec.slot_type
    return template.format(**values)
