from __future__ import annotations

import hypothesis.strategies as st
from hypothesis import HealthCheck, given, settings

from graphgarden.reasoning import (
    ARROW,
    NOT_EQUAL,
    PROPORTIONAL,
    AbstractPattern,
    PatternRelation,
    PatternState,
    ReasoningTrace,
    Triple,
    canonical_relation,
    normalize_label,
    parse_graph_block,
    parse_pattern_block,
    parse_response,
    serialize_trace,
    thinking_text,
)

from conftest import load_fixture


def test_no_markers_is_all_final_answer():
    trace = parse_response("Hello.")
    assert not trace.thinking_present
    assert trace.final_answer == "Hello."
    assert trace.graph_block == []
    assert trace.pattern is None


def test_unclosed_marker_sets_warning_and_keeps_content():
    trace = parse_response("<|thinking|>x")
    assert trace.thinking_present
    assert trace.warnings
    assert trace.final_answer == ""
    assert "x" in trace.sections.get("UNSECTIONED", "")


def test_second_thinking_region_is_final_answer_text():
    text = "<|thinking|>a<|/thinking|>mid<|thinking|>b<|/thinking|>"
    trace = parse_response(text)
    assert any("extra thinking" in w for w in trace.warnings)
    assert "<|thinking|>b" in trace.final_answer


def test_music_fixture_parses_completely():
    trace = parse_response(load_fixture("music_response.txt"))
    assert trace.thinking_present
    assert len(trace.graph_block) == 14  # 10 lines, two of them chains
    assert trace.pattern is not None
    assert trace.final_answer.startswith('**Proposed Idea: "Music-Inspired Material Tuning"**')
    assert list(trace.sections)[:2] == ["Knowledge Graph", "Abstract Pattern"]
    assert not trace.warnings


def test_music_pattern_bindings():
    trace = parse_response(load_fixture("music_response.txt"))
    pattern = trace.pattern
    assert pattern.bindings() == {
        "α": "Music",
        "β": "Material",
        "γ": "Material's Mechanical Properties",
    }
    assert pattern.relations == [
        PatternRelation(ARROW, ("α",), ("β",)),
        PatternRelation(ARROW, ("β",), ("γ",)),
        PatternRelation(PROPORTIONAL, ("α",), ("β",)),
        PatternRelation(ARROW, ("γ",), ("α",)),
    ]
    assert pattern.context.startswith("Inspire a new method")


def test_single_triple_line():
    triples, diags = parse_graph_block("1. **Music** -[IS-A]-> **Audio Signal**")
    assert triples == [Triple("Music", "IS-A", "Audio Signal")]
    assert diags == []


def test_chain_line_yields_consecutive_triples():
    line = (
        "**Music** -[INFLUENCES]-> **Nonlinear Dynamic Response** "
        "-[INFLUENCES]-> **Material's Mechanical Properties**"
    )
    triples, _ = parse_graph_block(line)
    assert len(triples) == 2
    assert triples[0].object == triples[1].subject == "Nonlinear Dynamic Response"


def test_empty_block_and_unparseable_lines():
    assert parse_graph_block("") == ([], [])
    triples, diags = parse_graph_block("just some prose\n2. **A** -[R]-> **B**")
    assert len(triples) == 1
    assert len(diags) == 1 and "prose" in diags[0]


def test_parenthetical_note_is_stripped_to_edge_note():
    triples, _ = parse_graph_block(
        "5. **Snow Flakes** -[INFLUENCES]-> **Mood** (e.g., Serene, Calming)"
    )
    assert triples == [Triple("Snow Flakes", "INFLUENCES", "Mood", "e.g., Serene, Calming")]


def test_bare_labels_and_relation_variants():
    triples, _ = parse_graph_block("Music -[relates to]-> Frequency  Spectrum")
    assert triples == [Triple("Music", "RELATES-TO", "Frequency Spectrum")]


def test_song_graph_block_golden():
    triples, diags = parse_graph_block(load_fixture("song_graph_block.txt"))
    assert diags == []
    assert len(triples) == 10
    assert triples[4].note == "e.g., Serene, Calming"
    assert triples[5].note == "e.g., Delicate, Whimsical"
    subjects = {t.subject for t in triples}
    assert subjects == {"Snow Flakes", "Flower Petals"}


def test_song_pattern_block_golden():
    pattern, diags = parse_pattern_block(load_fixture("song_pattern_block.txt"))
    assert diags == []
    arrows = [r for r in pattern.relations if r.kind == ARROW and not r.conditional]
    conditionals = [r for r in pattern.relations if r.conditional]
    not_equals = [r for r in pattern.relations if r.kind == NOT_EQUAL]
    assert len(arrows) == 8
    assert len(conditionals) == 1
    assert len(not_equals) == 1
    rule = conditionals[0]
    assert rule.lhs == ("δ",) and rule.rhs == ("ε",)
    assert [a.lhs for a in rule.conditional] == [("α",), ("β",)]
    assert {s.symbol for s in pattern.states} == {"α", "β", "γ", "δ", "ε", "ζ"}
    # no explanation bullets in this block: every state is auto-declared
    assert set(pattern.auto_declared) == {s.symbol for s in pattern.states}


def test_pattern_simple_chain():
    pattern, _ = parse_pattern_block("α → β → γ")
    assert pattern.relations == [
        PatternRelation(ARROW, ("α",), ("β",)),
        PatternRelation(ARROW, ("β",), ("γ",)),
    ]


def test_pattern_conditional_and_inequality():
    pattern, _ = parse_pattern_block(
        "If α → δ and β → δ then δ → ε\nα ≠ β"
    )
    assert len(pattern.relations) == 2
    assert pattern.relations[0].conditional
    assert pattern.relations[1].kind == NOT_EQUAL


def test_epsilon_variants_are_one_symbol():
    pattern, _ = parse_pattern_block("α → ϵ\nε → β")
    symbols = {s.symbol for s in pattern.states}
    assert "ϵ" not in symbols and "ε" in symbols


def test_label_and_relation_normalization():
    assert normalize_label("**Music**  Signal ") == "music signal"
    assert canonical_relation(" relates to ") == "RELATES-TO"
    assert canonical_relation("IS_A") == "IS-A"


def test_serialize_single_triple():
    trace = ReasoningTrace(
        thinking_present=True,
        graph_block=[Triple("A", "IS-A", "B")],
    )
    text = serialize_trace(trace)
    assert "1. **A** -[IS-A]-> **B**" in text
    assert text.startswith("<|thinking|>")


def test_serialize_empty_trace_is_final_answer_only():
    assert serialize_trace(ReasoningTrace(final_answer="done")) == "done"
    assert serialize_trace(ReasoningTrace()) == ""


def test_music_round_trip():
    first = parse_response(load_fixture("music_response.txt"))
    second = parse_response(serialize_trace(first))
    assert first.structurally_equal(second)


def test_thinking_text_extraction():
    raw = "<|thinking|>abc<|/thinking|>answer"
    trace = parse_response(raw)
    assert thinking_text(trace, raw) == "abc"
    raw2 = "no markers"
    assert thinking_text(parse_response(raw2), raw2) == "no markers"


# --- property tests -------------------------------------------------------

_label = st.from_regex(r"[A-Z][a-z]{1,8}( [A-Z][a-z]{1,8})?", fullmatch=True)
_relation = st.sampled_from(["IS-A", "RELATES-TO", "INFLUENCES", "ENABLES"])
_symbols = ["α", "β", "γ", "δ", "ε", "ζ"]


@st.composite
def _triples(draw):
    return Triple(draw(_label), draw(_relation), draw(_label))


@st.composite
def _patterns(draw):
    symbols = draw(st.lists(st.sampled_from(_symbols), min_size=2, max_size=6, unique=True))
    relations = []
    n = draw(st.integers(min_value=1, max_value=5))
    for _ in range(n):
        kind = draw(st.sampled_from([ARROW, PROPORTIONAL, NOT_EQUAL]))
        lhs, rhs = draw(st.sampled_from(symbols)), draw(st.sampled_from(symbols))
        rel = PatternRelation(kind, (lhs,), (rhs,))
        if rel not in relations:
            relations.append(rel)
    bound = draw(st.sets(st.sampled_from(symbols), max_size=len(symbols)))
    referenced = {sym for rel in relations for sym in rel.symbols()}
    # a state the wire format can carry is either bound or used by a relation
    states = [
        PatternState(s, draw(_label) if s in bound else None)
        for s in symbols
        if s in bound or s in referenced
    ]
    pattern = AbstractPattern(states=states, relations=relations,
                              context=draw(st.sampled_from(["", "Some context here."])))
    pattern.declare_missing()
    return pattern


@st.composite
def _traces(draw):
    trace = ReasoningTrace(thinking_present=True)
    trace.graph_block = draw(st.lists(_triples(), max_size=5))
    if draw(st.booleans()):
        trace.pattern = draw(_patterns())
    titles = draw(st.lists(
        st.sampled_from(["Reasoning Steps", "Hypothesis", "Design Principles"]),
        max_size=3, unique=True))
    body = st.from_regex(r"[a-z][a-z ,.]{0,40}", fullmatch=True)
    if trace.graph_block:
        trace.sections["Knowledge Graph"] = ""
    if trace.pattern is not None:
        trace.sections["Abstract Pattern"] = ""
    for title in titles:
        trace.sections[title] = draw(body)
    trace.final_answer = draw(body)
    return trace


@given(st.binary(max_size=400))
@settings(max_examples=200)
def test_parse_is_total_on_random_bytes(data):
    text = data.decode("utf-8", errors="replace")
    trace = parse_response(text)
    assert isinstance(trace, ReasoningTrace)


@given(_traces())
@settings(max_examples=150, suppress_health_check=[HealthCheck.too_slow])
def test_round_trip_property(trace):
    reparsed = parse_response(serialize_trace(trace))
    assert trace.structurally_equal(reparsed)


@given(st.lists(st.sampled_from(["Alpha", "Beta", "Gamma", "Delta"]), min_size=2, max_size=6))
def test_chain_expansion_counts(labels):
    line = " -[R]-> ".join(f"**{label}**" for label in labels)
    triples, diags = parse_graph_block(line)
    assert diags == []
    assert len(triples) == len(labels) - 1
    for left, right in zip(triples, triples[1:]):
        assert left.object == right.subject
