"""Parser and emitter for structured reasoning responses.

A structured response wraps its intermediate reasoning in ``<|thinking|>`` ..
``<|/thinking|>`` markers.  Inside, bold headings partition the text into
sections; a knowledge-graph section lists concept triples in the arrow
grammar ``**A** -[REL]-> **B**`` and an abstract-pattern section describes
Greek-letter states linked by arrows, proportionality and inequality.
Everything after the closing marker is the final answer.

Parsing is total: malformed lines are collected as diagnostics, never raised.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

THINK_OPEN = "<|thinking|>"
THINK_CLOSE = "<|/thinking|>"

UNSECTIONED = "UNSECTIONED"

# Heading forms: **Title:** / **Title**: / markdown #-headings.
_HEADING_RE = re.compile(
    r"""^\s*(?:
        \*\*(?P<bold>[^*]+?)(?P<colon_in>:)?\*\*\s*(?P<colon_out>:)?
        | \#{1,6}\s+(?P<md>.+?)
    )\s*$""",
    re.VERBOSE,
)

# One arrow hop of the triple grammar; labels may be bold-wrapped or bare.
_ARROW_RE = re.compile(r"-\[\s*([^\]]+?)\s*\]\s*->")
_ENUM_RE = re.compile(r"^\s*(?:\d+[.)]\s*|[-*]\s+)")
_PAREN_NOTE_RE = re.compile(r"\(([^()]*)\)\s*$")

# Greek state symbols; lunate epsilon folds onto the common one.
_GREEK = "α-ω"
_SYMBOL_RE = re.compile(f"[{_GREEK}]")
_EPSILON_VARIANTS = {"ϵ": "ε", "ε": "ε"}

_PATTERN_ARROW = "→"  # ->
_PROPORTIONAL = "∝"  # proportional-to
_NOT_EQUAL = "≠"  # not-equal

_BINDING_RE = re.compile(
    f"([{_GREEK}])\\s+(?:represents|denotes|stands for)\\s+\\*\\*([^*]+?)\\*\\*"
)

# Section-heading aliases (matched case-insensitively after trimming).
GRAPH_HEADINGS = frozenset(
    h.lower()
    for h in ("Knowledge Graph", "Core Concepts and Relationships", "Graph")
)
PATTERN_HEADINGS = frozenset(
    h.lower() for h in ("Abstract Pattern", "Abstract Patterns")
)
# Headings that continue an open pattern block instead of closing it.
PATTERN_SUBHEADINGS = frozenset(
    h.lower()
    for h in ("Key Transformation Rule", "Essential Condition", "Explanation")
)
_PATTERN_CONTEXT_RE = re.compile(r"^\s*(?:\*\*)?Pattern Context:?(?:\*\*)?:?\s*$")

ARROW = "ARROW"
PROPORTIONAL = "PROPORTIONAL"
NOT_EQUAL = "NOT-EQUAL"


def normalize_label(label: str) -> str:
    """Canonical node key: markup stripped, whitespace collapsed, lowercased."""
    return clean_label(label).lower()


def clean_label(label: str) -> str:
    """Display form of a label: ``**`` stripped, whitespace collapsed."""
    text = label.replace("**", "").strip()
    return re.sub(r"\s+", " ", text)


def canonical_relation(relation: str) -> str:
    """Uppercase a relation label and map space/hyphen runs to single hyphens."""
    rel = relation.strip().upper()
    return re.sub(r"[\s_-]+", "-", rel)


def normalize_symbol(symbol: str) -> str:
    return _EPSILON_VARIANTS.get(symbol, symbol)


@dataclass(frozen=True)
class Triple:
    """One directed concept relation, display-cased with a canonical relation."""

    subject: str
    relation: str
    object: str
    note: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "subject", clean_label(self.subject))
        object.__setattr__(self, "relation", canonical_relation(self.relation))
        object.__setattr__(self, "object", clean_label(self.object))
        if not self.subject or not self.object or not self.relation:
            raise ValueError(f"triple has empty component: {self!r}")


@dataclass(frozen=True)
class PatternState:
    symbol: str
    binding: str | None = None


@dataclass(frozen=True)
class PatternRelation:
    """Typed link between state symbols; conditional rules carry antecedents."""

    kind: str
    lhs: tuple[str, ...]
    rhs: tuple[str, ...]
    conditional: tuple["PatternRelation", ...] = ()

    def symbols(self) -> set[str]:
        seen = set(self.lhs) | set(self.rhs)
        for antecedent in self.conditional:
            seen |= antecedent.symbols()
        return seen


@dataclass
class AbstractPattern:
    states: list[PatternState] = field(default_factory=list)
    relations: list[PatternRelation] = field(default_factory=list)
    context: str = ""
    auto_declared: list[str] = field(default_factory=list)

    def bindings(self) -> dict[str, str | None]:
        return {s.symbol: s.binding for s in self.states}

    def declare_missing(self) -> None:
        """Auto-declare symbols referenced by relations but not in the state list."""
        declared = {s.symbol for s in self.states}
        for rel in self.relations:
            for sym in sorted(rel.symbols()):
                if sym not in declared:
                    declared.add(sym)
                    self.states.append(PatternState(sym))
                    self.auto_declared.append(sym)

    def structurally_equal(self, other: "AbstractPattern") -> bool:
        return (
            self.bindings() == other.bindings()
            and self.relations == other.relations
            and self.context == other.context
        )


@dataclass
class ReasoningTrace:
    """One parsed model response: thinking content, sections, final answer."""

    thinking_present: bool = False
    graph_block: list[Triple] = field(default_factory=list)
    pattern: AbstractPattern | None = None
    sections: dict[str, str] = field(default_factory=dict)
    final_answer: str = ""
    warnings: list[str] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)

    def structurally_equal(self, other: "ReasoningTrace") -> bool:
        """Equality on the structured parts, ignoring warnings/diagnostics."""
        if (
            self.thinking_present != other.thinking_present
            or self.graph_block != other.graph_block
            or self.final_answer != other.final_answer
        ):
            return False
        if (self.pattern is None) != (other.pattern is None):
            return False
        if self.pattern is not None and not self.pattern.structurally_equal(other.pattern):
            return False
        return self.free_sections() == other.free_sections() and list(
            self.free_sections()
        ) == list(other.free_sections())

    def free_sections(self) -> dict[str, str]:
        """Sections that are plain text (not the parsed graph/pattern blocks)."""
        out: dict[str, str] = {}
        for title, body in self.sections.items():
            key = title.lower()
            if key in GRAPH_HEADINGS or key in PATTERN_HEADINGS:
                continue
            out[title] = body
        return out


def _match_heading(line: str) -> str | None:
    m = _HEADING_RE.match(line)
    if not m:
        return None
    if m.group("md"):
        return m.group("md").strip()
    title = m.group("bold").strip()
    # a bold line is only a heading when a colon marks it as one
    if not (m.group("colon_in") or m.group("colon_out")):
        return None
    return title.rstrip(":").strip()


def _split_sections(
    thinking: str, pattern_headings: frozenset[str]
) -> list[tuple[str, list[str]]]:
    """Partition thinking text into (heading, body-lines), folding pattern
    sub-headings into their parent pattern section."""
    sections: list[tuple[str, list[str]]] = []
    current_title = UNSECTIONED
    current_lines: list[str] = []
    in_pattern = False

    def flush() -> None:
        nonlocal current_lines
        if current_title != UNSECTIONED or any(l.strip() for l in current_lines):
            sections.append((current_title, current_lines))
        current_lines = []

    for line in thinking.splitlines():
        title = _match_heading(line)
        if title is None:
            current_lines.append(line)
            continue
        key = title.lower()
        if in_pattern and key in PATTERN_SUBHEADINGS:
            current_lines.append(line)  # keep sub-heading inside pattern body
            continue
        flush()
        current_title = title
        in_pattern = key in pattern_headings
    flush()
    return sections


def _strip_outer_blank_lines(lines: list[str]) -> str:
    text = "\n".join(lines)
    return text.strip("\n")


def parse_response(
    text: str,
    graph_headings: frozenset[str] = GRAPH_HEADINGS,
    pattern_headings: frozenset[str] = PATTERN_HEADINGS,
) -> ReasoningTrace:
    """Parse raw model output into a trace.  Never raises on any input.

    The heading alias sets are configurable; headings outside them are kept
    as plain sections, never guessed at.
    """
    trace = ReasoningTrace()
    open_at = text.find(THINK_OPEN)
    if open_at < 0:
        trace.final_answer = text
        return trace

    close_at = text.find(THINK_CLOSE, open_at + len(THINK_OPEN))
    trace.thinking_present = True
    if close_at < 0:
        trace.warnings.append("unclosed thinking marker")
        thinking = text[open_at + len(THINK_OPEN):]
        after = ""
    else:
        thinking = text[open_at + len(THINK_OPEN): close_at]
        after = text[close_at + len(THINK_CLOSE):]
    if text[:open_at].strip():
        trace.warnings.append("text before opening thinking marker kept in final answer")
        after = text[:open_at] + after
    if THINK_OPEN in after:
        trace.warnings.append("extra thinking region treated as final-answer text")
    # only the separator whitespace after the closing marker is dropped
    trace.final_answer = after.lstrip()

    for title, lines in _split_sections(thinking, pattern_headings):
        body = _strip_outer_blank_lines(lines)
        if title in trace.sections:
            trace.sections[title] = trace.sections[title] + "\n" + body
        else:
            trace.sections[title] = body
        key = title.lower()
        if key in graph_headings:
            triples, diags = parse_graph_block(body)
            trace.graph_block.extend(triples)
            trace.diagnostics.extend(diags)
        elif key in pattern_headings:
            pattern, diags = parse_pattern_block(body)
            trace.diagnostics.extend(diags)
            if trace.pattern is None:
                trace.pattern = pattern
            else:
                trace.warnings.append("multiple pattern sections; keeping the first")
    return trace


def _parse_terms(segment: str) -> tuple[str, str | None]:
    """Split one arrow-grammar term into (label, parenthetical note)."""
    term = segment.strip()
    note = None
    m = _PAREN_NOTE_RE.search(term)
    if m:
        note = m.group(1).strip() or None
        term = term[: m.start()].strip()
    return clean_label(term), note


def parse_graph_block(block_text: str) -> tuple[list[Triple], list[str]]:
    """Parse triple lines; a chain of k arrows yields k consecutive triples.

    Returns (triples, diagnostics); lines outside the grammar are skipped
    and reported, never fatal.
    """
    triples: list[Triple] = []
    diagnostics: list[str] = []
    for raw_line in block_text.splitlines():
        line = _ENUM_RE.sub("", raw_line).strip()
        if not line:
            continue
        if _match_heading(raw_line) is not None:
            continue
        arrows = list(_ARROW_RE.finditer(line))
        if not arrows:
            diagnostics.append(f"graph line skipped: {raw_line.strip()!r}")
            continue
        # terms are the text between/around the arrow hops
        bounds = [0] + [i for m in arrows for i in (m.start(), m.end())] + [len(line)]
        segments = [line[bounds[i]: bounds[i + 1]] for i in range(0, len(bounds) - 1, 2)]
        terms = [_parse_terms(seg) for seg in segments]
        if any(not label for label, _ in terms):
            diagnostics.append(f"graph line has empty label: {raw_line.strip()!r}")
            continue
        pending_note = terms[0][1]
        for hop, arrow in enumerate(arrows):
            src, _ = terms[hop]
            dst, dst_note = terms[hop + 1]
            note = dst_note or (pending_note if hop == 0 else None)
            try:
                triples.append(Triple(src, arrow.group(1), dst, note))
            except ValueError as exc:
                diagnostics.append(str(exc))
    return triples, diagnostics


def _parse_symbol_seq(text: str) -> tuple[str, ...] | None:
    parts = [p for p in re.split(r"[\s,+]+", text.strip()) if p]
    symbols = []
    for part in parts:
        part = part.strip(".,;")
        if len(part) == 1 and _SYMBOL_RE.match(part):
            symbols.append(normalize_symbol(part))
        else:
            return None
    return tuple(symbols) if symbols else None


def _parse_simple_relation(text: str) -> PatternRelation | None:
    """Parse one relation expression with no conditional clause."""
    text = text.strip().rstrip(".")
    text = text.replace("->", _PATTERN_ARROW).replace("!=", _NOT_EQUAL)
    for token, kind in (
        (_PROPORTIONAL, PROPORTIONAL),
        (_NOT_EQUAL, NOT_EQUAL),
    ):
        if token in text:
            sides = text.split(token)
            if len(sides) != 2:
                return None
            lhs = _parse_symbol_seq(sides[0])
            rhs = _parse_symbol_seq(sides[1])
            if lhs and rhs:
                return PatternRelation(kind, lhs, rhs)
            return None
    if _PATTERN_ARROW in text:
        hops = [_parse_symbol_seq(part) for part in text.split(_PATTERN_ARROW)]
        if all(hops) and len(hops) == 2:
            return PatternRelation(ARROW, hops[0], hops[1])
    return None


def _parse_relation_line(line: str) -> list[PatternRelation] | None:
    """Parse a full pattern line: an arrow chain, a ∝/≠ line, or an If-then rule."""
    text = line.strip().rstrip(".")
    m = re.match(r"^[Ii]f\s+(.+?)\s+then\s+(.+)$", text)
    if m:
        antecedent_text, consequent_text = m.group(1), m.group(2)
        antecedents = []
        for part in re.split(r"\s+and\s+", antecedent_text):
            rel = _parse_simple_relation(part)
            if rel is None:
                return None
            antecedents.append(rel)
        consequent = _parse_simple_relation(consequent_text)
        if consequent is None or not antecedents:
            return None
        return [replace(consequent, conditional=tuple(antecedents))]
    text = text.replace("->", _PATTERN_ARROW).replace("!=", _NOT_EQUAL)
    if _PROPORTIONAL in text or _NOT_EQUAL in text:
        rel = _parse_simple_relation(text)
        return [rel] if rel else None
    if _PATTERN_ARROW in text:
        hops = [_parse_symbol_seq(part) for part in text.split(_PATTERN_ARROW)]
        if not all(hops) or len(hops) < 2:
            return None
        return [
            PatternRelation(ARROW, hops[i], hops[i + 1]) for i in range(len(hops) - 1)
        ]
    return None


def parse_pattern_block(block_text: str) -> tuple[AbstractPattern, list[str]]:
    """Parse an abstract-pattern block: relation lines, binding bullets and
    the trailing "Pattern Context:" paragraph."""
    pattern = AbstractPattern()
    diagnostics: list[str] = []
    bindings: dict[str, str] = {}
    order: list[str] = []
    context_acc: list[str] = []
    in_context = False

    def declare(symbols: tuple[str, ...]) -> None:
        for sym in symbols:
            if sym not in order:
                order.append(sym)

    for raw_line in block_text.splitlines():
        if in_context:
            if _match_heading(raw_line) is None:
                context_acc.append(raw_line)
                continue
            in_context = False
        if _PATTERN_CONTEXT_RE.match(raw_line):
            in_context = True
            continue
        if _match_heading(raw_line) is not None:
            continue
        line = _ENUM_RE.sub("", raw_line).strip()
        if not line:
            continue
        relations = _parse_relation_line(line)
        if relations:
            for rel in relations:
                if rel not in pattern.relations:
                    pattern.relations.append(rel)
                else:
                    diagnostics.append(f"duplicate pattern relation: {line!r}")
                for antecedent in rel.conditional:
                    declare(antecedent.lhs)
                    declare(antecedent.rhs)
                declare(rel.lhs)
                declare(rel.rhs)
            continue
        found = _BINDING_RE.findall(raw_line)
        if found:
            for sym, label in found:
                sym = normalize_symbol(sym)
                bindings[sym] = clean_label(label)
                declare((sym,))
            continue
        diagnostics.append(f"pattern line skipped: {raw_line.strip()!r}")

    pattern.context = _strip_outer_blank_lines(context_acc)
    pattern.states = [PatternState(sym, bindings.get(sym)) for sym in order]
    pattern.auto_declared = [sym for sym in order if sym not in bindings]
    return pattern, diagnostics


def _serialize_relation(rel: PatternRelation) -> str:
    token = {ARROW: _PATTERN_ARROW, PROPORTIONAL: _PROPORTIONAL, NOT_EQUAL: _NOT_EQUAL}[
        rel.kind
    ]
    body = f"{' '.join(rel.lhs)} {token} {' '.join(rel.rhs)}"
    if rel.conditional:
        clauses = " and ".join(_serialize_relation(replace(a, conditional=())) for a in rel.conditional)
        return f"If {clauses} then {body}"
    return body


def serialize_pattern(pattern: AbstractPattern) -> str:
    lines = [_serialize_relation(rel) for rel in pattern.relations]
    bound = [s for s in pattern.states if s.binding]
    if bound:
        lines.append("")
        for state in bound:
            lines.append(f"- {state.symbol} represents **{state.binding}**")
    if pattern.context:
        lines.append("")
        lines.append("Pattern Context:")
        lines.append(pattern.context)
    return "\n".join(lines)


def _serialize_graph_block(triples: list[Triple]) -> str:
    lines = ["**Knowledge Graph:**", ""]
    for i, t in enumerate(triples, start=1):
        note = f" ({t.note})" if t.note else ""
        lines.append(f"{i}. **{t.subject}** -[{t.relation}]-> **{t.object}**{note}")
    return "\n".join(lines)


def serialize_trace(trace: ReasoningTrace) -> str:
    """Emit the canonical response format; parse_response inverts it on the
    structured parts and preserves free-text sections byte-for-byte."""
    if not trace.thinking_present:
        return trace.final_answer
    chunks: list[str] = []
    emitted_graph = False
    emitted_pattern = False
    for title, body in trace.sections.items():
        key = title.lower()
        if key in GRAPH_HEADINGS and not emitted_graph:
            chunks.append(_serialize_graph_block(trace.graph_block))
            emitted_graph = True
        elif key in PATTERN_HEADINGS and not emitted_pattern:
            if trace.pattern is not None:
                chunks.append("**Abstract Pattern:**\n\n" + serialize_pattern(trace.pattern))
                emitted_pattern = True
        elif title == UNSECTIONED:
            chunks.append(body)
        else:
            chunks.append(f"**{title}:**\n\n{body}")
    if trace.graph_block and not emitted_graph:
        chunks.append(_serialize_graph_block(trace.graph_block))
    if trace.pattern is not None and not emitted_pattern:
        chunks.append("**Abstract Pattern:**\n\n" + serialize_pattern(trace.pattern))
    body_text = "\n\n".join(chunks)
    text = THINK_OPEN + "\n\n" + (body_text + "\n\n" if body_text else "") + THINK_CLOSE
    if trace.final_answer:
        text += "\n\n" + trace.final_answer
    return text


def thinking_text(trace: ReasoningTrace, raw: str) -> str:
    """The raw thinking-region text of `raw`, or the whole text when absent."""
    open_at = raw.find(THINK_OPEN)
    if open_at < 0 or not trace.thinking_present:
        return raw
    close_at = raw.find(THINK_CLOSE, open_at + len(THINK_OPEN))
    if close_at < 0:
        return raw[open_at + len(THINK_OPEN):]
    return raw[open_at + len(THINK_OPEN): close_at]
