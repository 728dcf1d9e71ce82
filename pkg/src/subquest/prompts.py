"""Prompt templates and rendering.

The three templates ship as text assets and are treated as frozen artifacts:
a committed sha256 per template guards against drift (see golden_digest and
templates/GOLDEN.json). In template bodies, single-brace names are
placeholders and doubled braces escape literal braces; the JSON schema
blocks inside the templates rely on the escape.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources

from .errors import MissingBinding, UnexpectedBinding


class PromptKind(str, Enum):
    DECOMPOSE = "decompose"
    OPTIONS = "options"
    SUMMARIZE = "summarize"


# Placeholder inventory per kind; {context} (the root query) exists only in
# the options template.
PLACEHOLDERS: dict[PromptKind, frozenset[str]] = {
    PromptKind.DECOMPOSE: frozenset({"text", "selected_options", "user_context"}),
    PromptKind.OPTIONS: frozenset({"text", "context", "selected_options", "user_context"}),
    PromptKind.SUMMARIZE: frozenset({"text", "selected_options", "user_context"}),
}

NONE_SENTINEL = "None"

_TOKEN = re.compile(r"\{\{|\}\}|\{([a-z_]+)\}")


@dataclass(frozen=True)
class PromptTemplate:
    kind: PromptKind
    body: str


@dataclass(frozen=True)
class PromptBindings:
    """Named values substituted into a template.

    selected_options and user_context never render empty: the templates
    print their labels unconditionally, so an empty value becomes the
    literal "None" rather than a dangling label.
    """

    text: str
    selected_options: str = NONE_SENTINEL
    user_context: str = NONE_SENTINEL
    context: str | None = None

    def __post_init__(self) -> None:
        if self.selected_options == "":
            object.__setattr__(self, "selected_options", NONE_SENTINEL)
        if self.user_context == "":
            object.__setattr__(self, "user_context", NONE_SENTINEL)


@lru_cache(maxsize=None)
def load_template(kind: PromptKind) -> PromptTemplate:
    body = (
        resources.files("subquest")
        .joinpath(f"templates/{kind.value}.txt")
        .read_text(encoding="utf-8")
    )
    return PromptTemplate(kind=kind, body=body)


@lru_cache(maxsize=None)
def committed_digests() -> dict[str, str]:
    raw = (
        resources.files("subquest")
        .joinpath("templates/GOLDEN.json")
        .read_text(encoding="utf-8")
    )
    return json.loads(raw)


def golden_digest(template: PromptTemplate) -> str:
    """Stable content digest of the template body (sha256 hex)."""
    return hashlib.sha256(template.body.encode("utf-8")).hexdigest()


def render(template: PromptTemplate, bindings: PromptBindings) -> str:
    """Substitute every placeholder; collapse doubled braces to literals.

    Binding values are inserted verbatim and never re-scanned, so braces
    inside user text cannot inject placeholders.
    """
    if template.kind is PromptKind.OPTIONS:
        if bindings.context is None:
            raise MissingBinding("context")
    elif bindings.context is not None:
        raise UnexpectedBinding("context")

    values = {
        "text": bindings.text,
        "selected_options": bindings.selected_options,
        "user_context": bindings.user_context,
    }
    if bindings.context is not None:
        values["context"] = bindings.context

    def substitute(match: re.Match[str]) -> str:
        token = match.group(0)
        if token == "{{":
            return "{"
        if token == "}}":
            return "}"
        name = match.group(1)
        if name not in values:
            raise MissingBinding(name)
        return values[name]

    return _TOKEN.sub(substitute, template.body)
