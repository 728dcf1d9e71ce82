"""Prompt templates: byte-fidelity, rendering, and escaping."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subquest.errors import MissingBinding, UnexpectedBinding
from subquest.prompts import (
    PLACEHOLDERS,
    PromptBindings,
    PromptKind,
    PromptTemplate,
    committed_digests,
    golden_digest,
    load_template,
    render,
)

ALL_KINDS = list(PromptKind)


class TestGoldenDigests:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_matches_committed_value(self, kind):
        template = load_template(kind)
        assert golden_digest(template) == committed_digests()[kind.value]

    def test_deterministic(self):
        template = load_template(PromptKind.DECOMPOSE)
        assert golden_digest(template) == golden_digest(template)

    def test_sensitive_to_single_character(self):
        template = load_template(PromptKind.DECOMPOSE)
        mutated = PromptTemplate(kind=template.kind, body=template.body[:-1] + "X")
        assert golden_digest(mutated) != golden_digest(template)


class TestTemplateBodies:
    def test_decompose_placeholders_present(self):
        body = load_template(PromptKind.DECOMPOSE).body
        for name in PLACEHOLDERS[PromptKind.DECOMPOSE]:
            assert "{" + name + "}" in body
        assert "{{" in body and "}}" in body

    def test_options_has_text_twice(self):
        body = load_template(PromptKind.OPTIONS).body
        assert body.count("{text}") == 2
        assert "{context}" in body

    def test_summarize_keeps_trailing_space(self):
        lines = load_template(PromptKind.SUMMARIZE).body.splitlines()
        assert lines[1] == "Your Response: "


class TestRender:
    def test_decompose_tokyo_opening(self):
        out = render(
            load_template(PromptKind.DECOMPOSE),
            PromptBindings(text="I want to plan a trip to Tokyo"),
        )
        assert out.startswith(
            "I want to accomplish the main goal of: I want to plan a trip to Tokyo"
        )
        assert "Personalization Cue: None" in out.splitlines()
        assert "My Context: None" in out.splitlines()

    def test_schema_block_collapses_to_single_brace(self):
        out = render(load_template(PromptKind.DECOMPOSE), PromptBindings(text="x"))
        assert '{\n  "sub_problems"' in out
        assert "{{" not in out and "}}" not in out

    def test_options_requires_context(self):
        with pytest.raises(MissingBinding) as err:
            render(load_template(PromptKind.OPTIONS), PromptBindings(text="x"))
        assert err.value.placeholder == "context"

    @pytest.mark.parametrize("kind", [PromptKind.DECOMPOSE, PromptKind.SUMMARIZE])
    def test_context_rejected_elsewhere(self, kind):
        with pytest.raises(UnexpectedBinding):
            render(load_template(kind), PromptBindings(text="x", context="query"))

    def test_empty_bindings_become_none_sentinel(self):
        bindings = PromptBindings(text="x", selected_options="", user_context="")
        assert bindings.selected_options == "None"
        assert bindings.user_context == "None"

    def test_options_renders_text_in_two_positions(self):
        sentinel = "ZZSENTINEL-SUBTASK"
        out = render(
            load_template(PromptKind.OPTIONS),
            PromptBindings(text=sentinel, context="the main query"),
        )
        assert out.count(sentinel) == 2
        lines = out.splitlines()
        assert lines[0] == f"User: {sentinel}"
        assert lines[-2] == f"User: {sentinel}"
        assert lines[-1] == "Output:"

    def test_escaping_round_trip_with_braces_in_bindings(self):
        template = load_template(PromptKind.DECOMPOSE)
        bindings = PromptBindings(
            text="goal with {curly} text", selected_options="- a: {b}", user_context="c"
        )
        out = render(template, bindings)
        contributed = (
            bindings.text.count("{")
            + bindings.selected_options.count("{")
            + bindings.user_context.count("{")
        )
        assert out.count("{") == template.body.count("{{") + contributed


clean_text = st.text(
    alphabet=st.characters(blacklist_characters="{}", max_codepoint=0x2FF),
    min_size=1,
    max_size=40,
)


@given(text=clean_text, selected=clean_text, context_text=clean_text)
@settings(max_examples=40)
def test_render_totality(text, selected, context_text):
    for kind in ALL_KINDS:
        bindings = PromptBindings(
            text=text,
            selected_options=selected,
            user_context=context_text,
            context="root query" if kind is PromptKind.OPTIONS else None,
        )
        out = render(load_template(kind), bindings)
        for name in ("text", "context", "selected_options", "user_context"):
            assert "{" + name + "}" not in out
