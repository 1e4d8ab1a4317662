from __future__ import annotations

import pytest
import hypothesis.strategies as st
from hypothesis import given, settings

from graphgarden.graph import (
    GraphParseError,
    KnowledgeGraph,
    SchemaError,
    StepRef,
    dumps,
    from_graphml,
    from_json,
    from_triples,
    induced_undirected,
    loads,
    merge,
    to_graphml,
    to_json,
)
from graphgarden.reasoning import Triple

from conftest import load_fixture

STEP = StepRef("sess", 0)
STEP2 = StepRef("sess", 1)


def test_from_single_triple():
    g = from_triples([Triple("Music", "IS-A", "Audio Signal")], STEP)
    assert g.node_count() == 2
    assert g.edge_count() == 1
    assert g.nodes["music"].display == "Music"
    assert g.edges[("music", "audio signal", "IS-A")].provenance == {STEP}


def test_from_empty():
    g = from_triples([], STEP)
    assert g.node_count() == 0 and g.edge_count() == 0


def test_music_block_counts():
    # hand enumeration of the ten-line block: 9 distinct labels, 14 triples
    # after chain expansion, 13 distinct (src, dst, relation) edges (the
    # chain in line 6 restates line 5).
    from graphgarden.reasoning import parse_response

    triples = parse_response(load_fixture("music_response.txt")).graph_block
    g = from_triples(triples, STEP)
    assert len(triples) == 14
    assert g.node_count() == 9
    assert {"music", "material", "frequency spectrum"} <= set(g.nodes)
    assert g.edge_count() == 13


def test_duplicate_edges_merge_provenance():
    g = KnowledgeGraph()
    g.add_edge("A", "R", "B", step=STEP)
    g.add_edge("a", "R", "B", step=STEP2)
    assert g.edge_count() == 1
    assert g.edges[("a", "b", "R")].provenance == {STEP, STEP2}
    assert g.nodes["a"].display == "A"  # first writer wins


def test_merge_identity_and_idempotence():
    g = from_triples([Triple("A", "R", "B"), Triple("B", "R", "C")], STEP)
    empty = KnowledgeGraph()
    assert merge(g, empty).structurally_equal(g)
    assert merge(empty, g).structurally_equal(g)
    assert merge(g, g).structurally_equal(g)


def test_merge_unites_case_variants():
    g1 = from_triples([Triple("Music", "R", "X")], STEP)
    g2 = from_triples([Triple("music", "R", "Y")], STEP2)
    merged = merge(g1, g2)
    assert merged.node_count() == 3
    assert merged.nodes["music"].provenance == {STEP, STEP2}
    assert merged.nodes["music"].display == "Music"


def test_filter_by_step_recovers_subgraph():
    g1 = from_triples([Triple("A", "R", "B")], STEP)
    g2 = from_triples([Triple("B", "R", "C")], STEP2)
    merged = merge(g1, g2)
    assert merged.filter_by_step(STEP).structurally_equal(g1)
    assert merged.filter_by_step(STEP2).structurally_equal(g2)


def test_induced_undirected_collapses_reciprocal_edges():
    g = KnowledgeGraph()
    g.add_edge("A", "R", "B", step=STEP)
    g.add_edge("B", "S", "A", step=STEP)
    view = induced_undirected(g)
    assert view.link_count() == 1


def test_self_loop_flagged_and_excluded_from_view():
    g = KnowledgeGraph()
    g.add_edge("A", "R", "A", step=STEP)
    assert g.self_loops == [("a", "a", "R")]
    view = induced_undirected(g)
    assert view.degree("a") == 0
    assert view.diagnostics


def test_graphml_empty_graph():
    xml = to_graphml(KnowledgeGraph())
    assert xml.startswith('<?xml version="1.0"')
    g = from_graphml(xml)
    assert g.node_count() == 0


def test_graphml_two_node_graph():
    g = from_triples([Triple("Music", "IS-A", "Audio Signal")], STEP)
    xml = to_graphml(g)
    assert xml.count("<edge") == 1
    assert "IS-A" in xml
    assert from_graphml(xml).structurally_equal(g)


def test_graphml_truncated_raises_parse_error():
    g = from_triples([Triple("A", "R", "B")], STEP)
    xml = to_graphml(g)
    with pytest.raises(GraphParseError):
        from_graphml(xml[: len(xml) // 2])


def test_graphml_dangling_edge_raises_schema_error():
    xml = """<?xml version="1.0" encoding="UTF-8"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns">
  <graph id="G" edgedefault="directed">
    <node id="a" />
    <edge source="a" target="missing" />
  </graph>
</graphml>"""
    with pytest.raises(SchemaError):
        from_graphml(xml)


def test_json_round_trip_and_format_tag():
    g = from_triples([Triple("A", "R", "B", note="n")], STEP)
    doc = to_json(g)
    assert doc["format"] == "gpfo-graph/1"
    assert from_json(doc).structurally_equal(g)
    assert loads(dumps(g)).structurally_equal(g)


def test_json_rejects_unknown_format():
    with pytest.raises(SchemaError):
        from_json({"format": "nope", "nodes": [], "edges": []})


# --- property tests -------------------------------------------------------

_label = st.sampled_from(["Alpha", "beta", "Gamma Ray", "delta", "Epsilon", "zeta Z"])
_relation = st.sampled_from(["IS-A", "RELATES-TO", "INFLUENCES"])
_step = st.builds(StepRef, st.sampled_from(["s1", "s2"]), st.integers(0, 3))


@st.composite
def graphs(draw):
    g = KnowledgeGraph()
    for _ in range(draw(st.integers(0, 10))):
        g.add_edge(
            draw(_label), draw(_relation), draw(_label), step=draw(_step),
            note=draw(st.sampled_from([None, "a note"])),
        )
    if draw(st.booleans()):
        g.add_node(draw(_label), draw(_step))
    return g


@given(graphs(), graphs(), graphs())
@settings(max_examples=100)
def test_merge_properties(a, b, c):
    ab = merge(a, b)
    ba = merge(b, a)
    # commutative up to display labels
    assert set(ab.nodes) == set(ba.nodes)
    assert set(ab.edges) == set(ba.edges)
    for key in ab.nodes:
        assert ab.nodes[key].provenance == ba.nodes[key].provenance
    # associative
    assert merge(ab, c).structurally_equal(merge(a, merge(b, c)))
    # idempotent
    assert merge(ab, ab).structurally_equal(ab)


@given(graphs())
@settings(max_examples=100)
def test_no_dangling_edges_property(g):
    for (src, dst, _), edge in g.edges.items():
        assert src in g.nodes and dst in g.nodes
        assert edge.provenance


@given(graphs())
@settings(max_examples=100)
def test_graphml_round_trip_property(g):
    assert from_graphml(to_graphml(g)).structurally_equal(g)


@given(st.lists(st.builds(Triple, _label, _relation, _label), max_size=12))
def test_from_triples_node_count(triples):
    from graphgarden.reasoning import normalize_label

    g = from_triples(triples, STEP)
    labels = {normalize_label(t.subject) for t in triples}
    labels |= {normalize_label(t.object) for t in triples}
    assert g.node_count() == len(labels)
