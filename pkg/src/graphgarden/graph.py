"""Typed directed knowledge graph with provenance-aware merging.

Nodes are keyed by a normalized label; edges are unique per
(source, target, relation) and accumulate provenance when re-inserted.
Graphs persist to GraphML for interchange and to a JSON document
(``"format": "gpfo-graph/1"``) for full-fidelity storage.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from xml.etree.ElementTree import ParseError as XmlParseError

from .reasoning import Triple, normalize_label

GRAPH_FORMAT = "gpfo-graph/1"
GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"


class SchemaError(ValueError):
    """GraphML/JSON input that parses but violates the expected schema."""


class GraphParseError(ValueError):
    """Malformed XML/JSON input; carries the underlying position if known."""


@dataclass(frozen=True, order=True)
class StepRef:
    """Which session/step introduced a node or edge."""

    session_id: str
    step_index: int

    def key(self) -> str:
        return f"{self.session_id}:{self.step_index}"

    @classmethod
    def from_key(cls, key: str) -> "StepRef":
        session_id, _, index = key.rpartition(":")
        return cls(session_id, int(index))


@dataclass
class Node:
    key: str
    display: str
    provenance: set[StepRef] = field(default_factory=set)


@dataclass
class Edge:
    src: str
    dst: str
    relation: str
    note: str | None = None
    provenance: set[StepRef] = field(default_factory=set)

    def key(self) -> tuple[str, str, str]:
        return (self.src, self.dst, self.relation)


class KnowledgeGraph:
    """Directed concept graph; single-writer during construction, then
    safe to share read-only across threads."""

    def __init__(self) -> None:
        self.nodes: dict[str, Node] = {}
        self.edges: dict[tuple[str, str, str], Edge] = {}
        self.self_loops: list[tuple[str, str, str]] = []

    def __repr__(self) -> str:
        return f"KnowledgeGraph(nodes={len(self.nodes)}, edges={len(self.edges)})"

    def add_node(self, label: str, step: StepRef | None = None) -> str:
        key = normalize_label(label)
        if not key:
            raise ValueError("empty node label")
        node = self.nodes.get(key)
        if node is None:
            node = Node(key, label.replace("**", "").strip())
            self.nodes[key] = node
        if step is not None:
            node.provenance.add(step)
        return key

    def add_edge(
        self,
        src_label: str,
        relation: str,
        dst_label: str,
        note: str | None = None,
        step: StepRef | None = None,
    ) -> Edge:
        src = self.add_node(src_label, step)
        dst = self.add_node(dst_label, step)
        key = (src, dst, relation)
        edge = self.edges.get(key)
        if edge is None:
            edge = Edge(src, dst, relation, note)
            self.edges[key] = edge
            if src == dst:
                self.self_loops.append(key)
        elif note and not edge.note:
            edge.note = note
        if step is not None:
            edge.provenance.add(step)
        return edge

    def node_count(self) -> int:
        return len(self.nodes)

    def edge_count(self) -> int:
        return len(self.edges)

    def successors(self, key: str) -> list[str]:
        return sorted({e.dst for e in self.edges.values() if e.src == key})

    def predecessors(self, key: str) -> list[str]:
        return sorted({e.src for e in self.edges.values() if e.dst == key})

    def structurally_equal(self, other: "KnowledgeGraph") -> bool:
        if set(self.nodes) != set(other.nodes):
            return False
        for key, node in self.nodes.items():
            peer = other.nodes[key]
            if node.display != peer.display or node.provenance != peer.provenance:
                return False
        if set(self.edges) != set(other.edges):
            return False
        for key, edge in self.edges.items():
            peer = other.edges[key]
            if edge.note != peer.note or edge.provenance != peer.provenance:
                return False
        return True

    def filter_by_step(self, step: StepRef) -> "KnowledgeGraph":
        """Subgraph of the elements whose provenance contains `step`."""
        out = KnowledgeGraph()
        for node in self.nodes.values():
            if step in node.provenance:
                out.nodes[node.key] = Node(node.key, node.display, {step})
        for edge in self.edges.values():
            if step in edge.provenance:
                if edge.src not in out.nodes or edge.dst not in out.nodes:
                    raise AssertionError("edge provenance without node provenance")
                out.edges[edge.key()] = Edge(edge.src, edge.dst, edge.relation, edge.note, {step})
                if edge.src == edge.dst:
                    out.self_loops.append(edge.key())
        return out


def from_triples(triples: list[Triple], step: StepRef) -> KnowledgeGraph:
    """Build a graph with one node per distinct normalized label and one
    edge per distinct (src, dst, relation); provenance = {step} throughout."""
    g = KnowledgeGraph()
    for t in triples:
        g.add_edge(t.subject, t.relation, t.object, t.note, step)
    return g


def merge(base: KnowledgeGraph, incoming: KnowledgeGraph) -> KnowledgeGraph:
    """Union of nodes and edges; first-seen display label wins, provenance
    sets unite.  Idempotent, commutative and associative up to display labels."""
    out = KnowledgeGraph()
    for source in (base, incoming):
        for node in source.nodes.values():
            existing = out.nodes.get(node.key)
            if existing is None:
                out.nodes[node.key] = Node(node.key, node.display, set(node.provenance))
            else:
                existing.provenance |= node.provenance
        for edge in source.edges.values():
            existing = out.edges.get(edge.key())
            if existing is None:
                out.edges[edge.key()] = Edge(
                    edge.src, edge.dst, edge.relation, edge.note, set(edge.provenance)
                )
                if edge.src == edge.dst:
                    out.self_loops.append(edge.key())
            else:
                existing.provenance |= edge.provenance
                if edge.note and not existing.note:
                    existing.note = edge.note
    return out


@dataclass
class UndirectedView:
    """Simple undirected projection: one link per unordered node pair with at
    least one directed edge; self-loops are excluded and reported."""

    neighbors: dict[str, set[str]]
    diagnostics: list[str]

    def degree(self, key: str) -> int:
        return len(self.neighbors[key])

    def link_count(self) -> int:
        return sum(len(n) for n in self.neighbors.values()) // 2

    def links(self) -> list[tuple[str, str]]:
        seen = []
        for u in sorted(self.neighbors):
            for v in sorted(self.neighbors[u]):
                if u < v:
                    seen.append((u, v))
        return seen


def induced_undirected(g: KnowledgeGraph) -> UndirectedView:
    neighbors: dict[str, set[str]] = {key: set() for key in g.nodes}
    diagnostics = []
    for (src, dst, relation) in g.edges:
        if src == dst:
            diagnostics.append(f"self-loop excluded from undirected view: {src} [{relation}]")
            continue
        neighbors[src].add(dst)
        neighbors[dst].add(src)
    return UndirectedView(neighbors, diagnostics)


def _provenance_attr(refs: set[StepRef]) -> str:
    return ",".join(ref.key() for ref in sorted(refs))


def _parse_provenance(attr: str) -> set[StepRef]:
    refs = set()
    for part in attr.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            refs.add(StepRef.from_key(part))
        except ValueError as exc:
            raise SchemaError(f"bad provenance entry {part!r}") from exc
    return refs


def to_graphml(g: KnowledgeGraph) -> str:
    """Serialize to GraphML 1.0 with deterministic element ordering."""
    root = ET.Element("graphml", xmlns=GRAPHML_NS)
    keys = [
        ("d_display", "node", "display", "string"),
        ("d_node_prov", "node", "provenance", "string"),
        ("d_relation", "edge", "relation", "string"),
        ("d_note", "edge", "note", "string"),
        ("d_edge_prov", "edge", "provenance", "string"),
    ]
    for key_id, domain, name, attr_type in keys:
        ET.SubElement(
            root,
            "key",
            {"id": key_id, "for": domain, "attr.name": name, "attr.type": attr_type},
        )
    graph_el = ET.SubElement(root, "graph", {"id": "G", "edgedefault": "directed"})
    for key in sorted(g.nodes):
        node = g.nodes[key]
        node_el = ET.SubElement(graph_el, "node", {"id": key})
        ET.SubElement(node_el, "data", {"key": "d_display"}).text = node.display
        ET.SubElement(node_el, "data", {"key": "d_node_prov"}).text = _provenance_attr(
            node.provenance
        )
    for key in sorted(g.edges):
        edge = g.edges[key]
        edge_el = ET.SubElement(
            graph_el, "edge", {"source": edge.src, "target": edge.dst}
        )
        ET.SubElement(edge_el, "data", {"key": "d_relation"}).text = edge.relation
        if edge.note:
            ET.SubElement(edge_el, "data", {"key": "d_note"}).text = edge.note
        ET.SubElement(edge_el, "data", {"key": "d_edge_prov"}).text = _provenance_attr(
            edge.provenance
        )
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(
        root, encoding="unicode"
    )


def _strip_ns(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def from_graphml(xml: str) -> KnowledgeGraph:
    """Inverse of :func:`to_graphml` on its image; accepts schema-compatible
    GraphML produced elsewhere (missing attributes default sensibly)."""
    try:
        root = ET.fromstring(xml)
    except XmlParseError as exc:
        raise GraphParseError(f"malformed GraphML at line {exc.position[0]}, column {exc.position[1]}") from exc
    if _strip_ns(root.tag) != "graphml":
        raise SchemaError(f"root element is {root.tag!r}, expected graphml")

    key_names: dict[str, str] = {}
    for el in root.iter():
        if _strip_ns(el.tag) == "key":
            key_names[el.get("id", "")] = el.get("attr.name", "")

    graph_el = next((el for el in root.iter() if _strip_ns(el.tag) == "graph"), None)
    if graph_el is None:
        raise SchemaError("no graph element")

    g = KnowledgeGraph()
    edges: list[tuple[str, str, dict[str, str]]] = []
    for el in graph_el:
        tag = _strip_ns(el.tag)
        data = {
            key_names.get(d.get("key", ""), d.get("key", "")): (d.text or "")
            for d in el
            if _strip_ns(d.tag) == "data"
        }
        if tag == "node":
            node_id = el.get("id")
            if node_id is None:
                raise SchemaError("node without id")
            key = normalize_label(node_id)
            g.nodes[key] = Node(
                key,
                data.get("display") or node_id,
                _parse_provenance(data.get("provenance", "")),
            )
        elif tag == "edge":
            src, dst = el.get("source"), el.get("target")
            if src is None or dst is None:
                raise SchemaError("edge without source/target")
            edges.append((src, dst, data))
    for src, dst, data in edges:
        src_key, dst_key = normalize_label(src), normalize_label(dst)
        if src_key not in g.nodes or dst_key not in g.nodes:
            raise SchemaError(f"edge references absent node: {src!r} -> {dst!r}")
        relation = data.get("relation", "RELATES-TO")
        edge = Edge(
            src_key,
            dst_key,
            relation,
            data.get("note") or None,
            _parse_provenance(data.get("provenance", "")),
        )
        g.edges[edge.key()] = edge
        if src_key == dst_key:
            g.self_loops.append(edge.key())
    return g


def to_json(g: KnowledgeGraph) -> dict:
    """Full-fidelity JSON document (stable ordering)."""
    return {
        "format": GRAPH_FORMAT,
        "nodes": [
            {
                "id": key,
                "display": g.nodes[key].display,
                "provenance": sorted(ref.key() for ref in g.nodes[key].provenance),
            }
            for key in sorted(g.nodes)
        ],
        "edges": [
            {
                "source": src,
                "target": dst,
                "relation": relation,
                "note": g.edges[(src, dst, relation)].note,
                "provenance": sorted(
                    ref.key() for ref in g.edges[(src, dst, relation)].provenance
                ),
            }
            for (src, dst, relation) in sorted(g.edges)
        ],
    }


def from_json(doc: dict) -> KnowledgeGraph:
    if not isinstance(doc, dict):
        raise GraphParseError("graph document must be a JSON object")
    if doc.get("format") != GRAPH_FORMAT:
        raise SchemaError(f"unsupported graph format {doc.get('format')!r}")
    g = KnowledgeGraph()
    for entry in doc.get("nodes", []):
        key = entry["id"]
        g.nodes[key] = Node(
            key,
            entry.get("display", key),
            {StepRef.from_key(p) for p in entry.get("provenance", [])},
        )
    for entry in doc.get("edges", []):
        src, dst, relation = entry["source"], entry["target"], entry["relation"]
        if src not in g.nodes or dst not in g.nodes:
            raise SchemaError(f"edge references absent node: {src!r} -> {dst!r}")
        edge = Edge(
            src,
            dst,
            relation,
            entry.get("note"),
            {StepRef.from_key(p) for p in entry.get("provenance", [])},
        )
        g.edges[edge.key()] = edge
        if src == dst:
            g.self_loops.append(edge.key())
    return g


def dumps(g: KnowledgeGraph) -> str:
    return json.dumps(to_json(g), indent=2, sort_keys=True)


def loads(text: str) -> KnowledgeGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphParseError(f"malformed graph JSON: {exc}") from exc
    return from_json(doc)
