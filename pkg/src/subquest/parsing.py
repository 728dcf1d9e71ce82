"""Structured-output parsing for decomposition and options responses.

Providers are asked for a bare JSON object but routinely wrap it in prose or
code fences anyway. The pipeline here is strip_fences -> extract_object ->
strict JSON -> schema checks. Soft schema violations (too many sub-tasks,
too few options, over-long titles) degrade to warnings; hard violations
raise SchemaMismatch. JSON itself is parsed strictly: repair heuristics
would hide provider drift, and the session layer owns the single retry.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .errors import (
    NoObjectFound,
    ParseFailed,
    SchemaMismatch,
    UnbalancedObject,
)

MAX_SUBTASKS = 8
MIN_OPTIONS = 5
MAX_TITLE_WORDS = 15

# Opening-fence language tag: a bare word of letters/digits/_/+/-, optional
# surrounding blanks, terminated by the first (possibly CRLF) newline.
_FENCE_TAG = re.compile(r"[ \t]*[A-Za-z0-9_+\-]*[ \t]*\r?\n")


@dataclass(frozen=True)
class RawExtraction:
    """First balanced brace span of a response, plus the discarded context.

    prefix + object_text + suffix reproduces the fence-stripped input.
    """

    prefix: str
    object_text: str
    suffix: str


@dataclass(frozen=True)
class SubTaskList:
    titles: tuple[str, ...]
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class OptionSet:
    recommended: str
    options: tuple[str, ...]
    warnings: tuple[str, ...] = ()

    def selectable(self) -> tuple[str, ...]:
        """Unified selectable list: the recommended entry is index 0."""
        return (self.recommended, *self.options)


def strip_fences(raw: str) -> str:
    """Trim the text and unwrap an enclosing triple-backtick fence.

    The opening fence may carry a language tag on its own line. Fences that
    do not enclose the entire payload are left alone; extraction copes with
    them downstream.
    """
    text = raw.strip()
    if len(text) >= 6 and text.startswith("```") and text.endswith("```"):
        inner = text[3:-3]
        tag = _FENCE_TAG.match(inner)
        if tag:
            inner = inner[tag.end() :]
        return inner.strip()
    return text


def extract_object(raw: str) -> RawExtraction:
    """Return the first balanced {...} span, honoring strings and escapes.

    Braces inside double-quoted JSON strings do not count toward balance;
    a backslash escapes the next character inside a string. Raises
    NoObjectFound when there is no "{" at all and UnbalancedObject when the
    input ends before the opening brace is matched.
    """
    start = raw.find("{")
    if start == -1:
        raise NoObjectFound("no JSON object in provider output")
    depth = 0
    in_string = False
    escaped = False
    i = start
    while i < len(raw):
        ch = raw[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return RawExtraction(
                    prefix=raw[:start],
                    object_text=raw[start : i + 1],
                    suffix=raw[i + 1 :],
                )
        i += 1
    raise UnbalancedObject("input ended before the object closed")


def _parse_pipeline(raw: str) -> dict:
    """Shared front half: fences, extraction, strict JSON."""
    stripped = strip_fences(raw)
    try:
        extraction = extract_object(stripped)
    except (NoObjectFound, UnbalancedObject) as exc:
        raise ParseFailed(str(exc), raw=raw, stage="extract") from exc
    try:
        obj = json.loads(extraction.object_text)
    except json.JSONDecodeError as exc:
        raise ParseFailed(str(exc), raw=raw, stage="json") from exc
    if not isinstance(obj, dict):
        raise SchemaMismatch(f"expected a JSON object, got {type(obj).__name__}")
    return obj


def parse_subtasks(raw: str) -> SubTaskList:
    """Parse a decomposition response into at most 8 sub-task titles."""
    obj = _parse_pipeline(raw)
    if "sub_problems" not in obj:
        raise SchemaMismatch('missing "sub_problems" key')
    titles = obj["sub_problems"]
    if not isinstance(titles, list):
        raise SchemaMismatch('"sub_problems" must be a list')
    if not titles:
        raise SchemaMismatch('"sub_problems" is empty')
    for i, title in enumerate(titles):
        if not isinstance(title, str):
            raise SchemaMismatch(f"sub-task {i} is not a string")
        if not title.strip():
            raise SchemaMismatch(f"sub-task {i} is blank")
    warnings: list[str] = []
    if len(titles) > MAX_SUBTASKS:
        warnings.append(
            f"truncated: {len(titles)} sub-tasks, kept the first {MAX_SUBTASKS}"
        )
        titles = titles[:MAX_SUBTASKS]
    for i, title in enumerate(titles):
        if len(title.split()) > MAX_TITLE_WORDS:
            warnings.append(f"length_exceeded: sub-task {i} is over {MAX_TITLE_WORDS} words")
    return SubTaskList(titles=tuple(titles), warnings=tuple(warnings))


def parse_options(raw: str) -> OptionSet:
    """Parse an options response: one recommended entry plus alternatives."""
    obj = _parse_pipeline(raw)
    for key in ("recommended", "options"):
        if key not in obj:
            raise SchemaMismatch(f'missing "{key}" key')
    recommended = obj["recommended"]
    if not isinstance(recommended, str) or not recommended.strip():
        raise SchemaMismatch('"recommended" must be a non-blank string')
    options = obj["options"]
    if not isinstance(options, list):
        raise SchemaMismatch('"options" must be a list')
    for i, option in enumerate(options):
        if not isinstance(option, str):
            raise SchemaMismatch(f"option {i} is not a string")
        if option == "":
            raise SchemaMismatch(f"option {i} is the empty string")
    warnings: list[str] = []
    if len(options) < MIN_OPTIONS:
        warnings.append(f"low_option_count: {len(options)} of {MIN_OPTIONS} requested")
    return OptionSet(
        recommended=recommended, options=tuple(options), warnings=tuple(warnings)
    )
