"""Knowledge-garden growth: iterated question -> reasoning -> subgraph -> merge.

A garden session starts from a seed prompt and grows one step at a time,
either steered (operator supplies the next prompt) or autonomously (a
follow-up question is generated from the current integrated graph's top
topics).  Each step runs a full reasoning session; its subgraph merges into
the integrated graph with the step as provenance.

On-disk layout per session: ``session.json`` (metadata), ``steps/NNN.json``
(one growth step each, including the full reasoning transcript),
``integrated.json`` and ``integrated.graphml``.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from .engine import ReasoningSession, SessionConfig, fill_template, run_session
from .graph import (
    KnowledgeGraph,
    StepRef,
    from_json as graph_from_json,
    merge,
    to_graphml,
    to_json as graph_to_json,
)
from .metrics import GraphSummary, degree, summarize
from .reasoning import normalize_label

GARDEN_FORMAT = "gpfo-garden/1"
DEFAULT_TOPIC_LIMIT = 25
SEED, HUMAN, AUTONOMOUS = "seed", "human", "autonomous"

# Follow-up question template; byte-exact contract pinned by a golden file.
FOLLOWUP_TEMPLATE = (
    "Consider this list of topics/keywords. \n"
    "\n"
    "Formulate a concise follow-up creative and highly unusual question to "
    "ask about a related but totally different concept. \n"
    "\n"
    "Your question should include at least one of the original "
    "topics/keywords marked as '...' but expand to new dissimilar fields "
    "such as philosophy or art.\n"
    "\n"
    "Original list of topics/keywords:\n"
    "\n"
    "{graph_str}\n"
    "\n"
    "The new question is:\n"
)


class EmptyGraph(ValueError):
    pass


class StepLimitReached(RuntimeError):
    pass


def build_followup_prompt(graph_str: str, template: str = FOLLOWUP_TEMPLATE) -> str:
    """Fill the follow-up template; an alternative steering template may be
    swapped in as long as it carries a {graph_str} slot."""
    return fill_template(template, {"graph_str": graph_str})


def graph_to_topic_string(g: KnowledgeGraph, limit: int = DEFAULT_TOPIC_LIMIT) -> str:
    """Comma-joined display labels of the top-`limit` nodes by degree."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    if not g.nodes:
        raise EmptyGraph("cannot list topics of an empty graph")
    report = degree(g, k=len(g.nodes))
    return ", ".join(g.nodes[key].display for key, _ in report.top_k[:limit])


def topic_labels(g: KnowledgeGraph, limit: int = DEFAULT_TOPIC_LIMIT) -> list[str]:
    if not g.nodes:
        return []
    report = degree(g, k=len(g.nodes))
    return [g.nodes[key].display for key, _ in report.top_k[:limit]]


def validate_followup(question: str, topics: list[str]) -> bool:
    """True iff the question mentions at least one topic label
    (case-insensitive, markup-insensitive substring)."""
    haystack = normalize_label(question)
    return any(normalize_label(topic) in haystack for topic in topics if topic.strip())


@dataclass
class GrowthStep:
    index: int
    prompt: str
    prompt_source: str
    session: ReasoningSession
    subgraph: KnowledgeGraph
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "prompt": self.prompt,
            "prompt_source": self.prompt_source,
            "session": self.session.to_json(),
            "subgraph": graph_to_json(self.subgraph),
            "warnings": self.warnings,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "GrowthStep":
        return cls(
            index=doc["index"],
            prompt=doc["prompt"],
            prompt_source=doc["prompt_source"],
            session=ReasoningSession.from_json(doc["session"]),
            subgraph=graph_from_json(doc["subgraph"]),
            warnings=doc.get("warnings", []),
        )


@dataclass
class GardenSession:
    seed_prompt: str
    mode: str = AUTONOMOUS
    session_id: str = field(default_factory=lambda: uuid.uuid4().hex[:12])
    steps: list[GrowthStep] = field(default_factory=list)
    integrated: KnowledgeGraph = field(default_factory=KnowledgeGraph)
    max_steps: int = 100
    summary: GraphSummary | None = None

    def step_ref(self, index: int) -> StepRef:
        return StepRef(self.session_id, index)

    def to_json(self) -> dict:
        return {
            "format": GARDEN_FORMAT,
            "id": self.session_id,
            "seed_prompt": self.seed_prompt,
            "mode": self.mode,
            "max_steps": self.max_steps,
            "step_count": len(self.steps),
        }


class GardenStore:
    """Directory-backed persistence; one subdirectory per session id."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def session_dir(self, session_id: str) -> Path:
        return self.root / session_id

    def list_sessions(self) -> list[str]:
        return sorted(
            p.name for p in self.root.iterdir() if (p / "session.json").exists()
        )

    def save(self, session: GardenSession) -> None:
        base = self.session_dir(session.session_id)
        (base / "steps").mkdir(parents=True, exist_ok=True)
        (base / "session.json").write_text(
            json.dumps(session.to_json(), indent=2), encoding="utf-8"
        )
        for step in session.steps:
            path = base / "steps" / f"{step.index:03d}.json"
            if not path.exists():
                path.write_text(json.dumps(step.to_json(), indent=2), encoding="utf-8")
        (base / "integrated.json").write_text(
            json.dumps(graph_to_json(session.integrated), indent=2), encoding="utf-8"
        )
        (base / "integrated.graphml").write_text(
            to_graphml(session.integrated), encoding="utf-8"
        )

    def save_step(self, session: GardenSession, step: GrowthStep) -> None:
        base = self.session_dir(session.session_id)
        (base / "steps").mkdir(parents=True, exist_ok=True)
        path = base / "steps" / f"{step.index:03d}.json"
        path.write_text(json.dumps(step.to_json(), indent=2), encoding="utf-8")
        (base / "session.json").write_text(
            json.dumps(session.to_json(), indent=2), encoding="utf-8"
        )
        (base / "integrated.json").write_text(
            json.dumps(graph_to_json(session.integrated), indent=2), encoding="utf-8"
        )
        (base / "integrated.graphml").write_text(
            to_graphml(session.integrated), encoding="utf-8"
        )

    def load(self, session_id: str) -> GardenSession:
        base = self.session_dir(session_id)
        meta_path = base / "session.json"
        if not meta_path.exists():
            raise KeyError(f"unknown session {session_id!r}")
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        if meta.get("format") != GARDEN_FORMAT:
            raise ValueError(f"unsupported session format {meta.get('format')!r}")
        session = GardenSession(
            seed_prompt=meta["seed_prompt"],
            mode=meta["mode"],
            session_id=meta["id"],
            max_steps=meta.get("max_steps", 100),
        )
        for path in sorted((base / "steps").glob("*.json")):
            step = GrowthStep.from_json(json.loads(path.read_text(encoding="utf-8")))
            session.steps.append(step)
            session.integrated = merge(session.integrated, step.subgraph)
        return session


def _run_step(
    session: GardenSession,
    prompt: str,
    source: str,
    gateway,
    cfg: SessionConfig,
    gateway_cfg,
    warnings: list[str] | None = None,
) -> GrowthStep:
    index = len(session.steps)
    reasoning = run_session(
        prompt, cfg, gateway, gateway_cfg, provenance=session.step_ref(index)
    )
    step = GrowthStep(
        index=index,
        prompt=prompt,
        prompt_source=source,
        session=reasoning,
        subgraph=reasoning.merged_graph,
        warnings=list(warnings or []),
    )
    session.steps.append(step)
    session.integrated = merge(session.integrated, step.subgraph)
    return step


def grow_step(
    session: GardenSession,
    next_prompt: str | None,
    gateway,
    cfg: SessionConfig | None = None,
    gateway_cfg=None,
    store: GardenStore | None = None,
    topic_limit: int = DEFAULT_TOPIC_LIMIT,
    followup_template: str = FOLLOWUP_TEMPLATE,
) -> GrowthStep:
    """Append one growth step.  A provided prompt makes a steered (human)
    step; otherwise a follow-up question is generated from the integrated
    graph, validated, retried once, then accepted with a warning."""
    from .gateway import GatewayConfig

    cfg = cfg or SessionConfig()
    gateway_cfg = gateway_cfg or GatewayConfig()
    if len(session.steps) >= session.max_steps:
        raise StepLimitReached(f"session already has {session.max_steps} steps")

    if not session.steps:
        step = _run_step(session, session.seed_prompt, SEED, gateway, cfg, gateway_cfg)
        if store:
            store.save_step(session, step)
        return step

    warnings: list[str] = []
    if next_prompt is not None:
        prompt, source = next_prompt, HUMAN
    else:
        topics = topic_labels(session.integrated, topic_limit)
        if not topics:
            raise EmptyGraph("autonomous step requires a non-empty integrated graph")
        followup_request = build_followup_prompt(
            graph_to_topic_string(session.integrated, topic_limit), followup_template
        )
        from .gateway import request_for

        question = gateway.complete(
            request_for(cfg.critic_role, gateway_cfg, followup_request)
        ).content.strip()
        if not validate_followup(question, topics):
            retry = gateway.complete(
                request_for(cfg.critic_role, gateway_cfg, followup_request)
            ).content.strip()
            if validate_followup(retry, topics):
                question = retry
            else:
                warnings.append(
                    "follow-up question mentions no known topic; proceeding anyway"
                )
                question = retry
        prompt, source = question, AUTONOMOUS

    step = _run_step(session, prompt, source, gateway, cfg, gateway_cfg, warnings)
    if store:
        store.save_step(session, step)
    return step


def run_autonomous(
    seed_prompt: str,
    iterations: int,
    gateway,
    cfg: SessionConfig | None = None,
    gateway_cfg=None,
    store: GardenStore | None = None,
    mode: str = AUTONOMOUS,
) -> GardenSession:
    """Seed step plus `iterations` autonomous steps; attaches a summary."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    session = GardenSession(
        seed_prompt=seed_prompt, mode=mode, max_steps=iterations + 1
    )
    grow_step(session, None, gateway, cfg, gateway_cfg, store)  # seed
    for _ in range(iterations):
        grow_step(session, None, gateway, cfg, gateway_cfg, store)
    session.summary = summarize(session.integrated)
    if store:
        store.save(session)
    return session
