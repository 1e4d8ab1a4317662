"""Recursive critique/improve/regenerate reasoning loop.

One session: an initial structured response, N refinement rounds (critic
feedback, improved thinking, regenerated response), then either the last
response or an integration of all responses as the final answer.  All graphs
parsed along the way merge into the session graph.
"""

from __future__ import annotations

import json
import re
import uuid
from dataclasses import dataclass, field

from .gateway import GatewayError, request_for
from .graph import KnowledgeGraph, StepRef, from_triples, merge, to_json as graph_to_json, from_json as graph_from_json
from .reasoning import (
    ReasoningTrace,
    parse_response,
    serialize_trace,
    thinking_text,
)

SESSION_FORMAT = "gpfo-session/1"

# Outbound prompt templates.  Byte-exact contracts: the golden files under
# tests/fixtures pin every character, including trailing spaces.
CRITIQUE_TEMPLATE = (
    "I will show you a question and a thought process. \n"
    "\n"
    "Your task is to critique the thought process and provide suggestions to "
    "improve it to better answer the question in a logical, well-reasoned manner.\n"
    "\n"
    "Question: {question}\n"
    "\n"
    "Thought process: {think}\n"
    "\n"
    "Provide feedback and suggestions for how to improve the thought process, "
    "and nothing else. The feedback is:\n"
)

IMPROVEMENT_TEMPLATE = (
    "I will show you a thought process and feedback. Carefully implement the "
    "feedback and improve the thought process by addressing all suggestions, "
    "but keep the overall structure the same.\n"
    "\n"
    "Thought process: {think}\n"
    "\n"
    "Feedback: {reflect}\n"
    "\n"
    "Provide the improved thought process, and nothing else. The revised "
    "thought process is:\n"
)

INTEGRATION_HEADER = (
    "I will show you a question and several possible answers. \n"
    "\n"
    "QUESTION: {question}\n"
    "\n"
)

INTEGRATION_FOOTER = (
    "\n"
    "Carefully incorporate all ideas presented in the answer candidates into "
    "a very detailed, final answer. \n"
    "\n"
    "Do not repeat the question. You directly begin your response with the "
    "final answer to the question. \n"
    "\n"
    "The answer is:\n"
)

# Framing for re-injecting improved thinking into the reasoner: the task is
# re-asked and the assistant turn is primed with the revised thinking region,
# so the model continues into the answer.  Pinned by a golden file.
REGENERATION_PRIMER = "<|thinking|>\n{think}\n<|/thinking|>\n\n"


class EmptyAnswers(ValueError):
    pass


def fill_template(template: str, mapping: dict[str, str]) -> str:
    """Single-pass placeholder substitution: braces inside substituted values
    are never re-expanded."""
    return re.sub(
        r"\{(" + "|".join(map(re.escape, mapping)) + r")\}",
        lambda m: mapping[m.group(1)],
        template,
    )


class EngineError(RuntimeError):
    """Gateway failure mid-session; carries the partial session."""

    def __init__(self, message: str, partial: "ReasoningSession"):
        super().__init__(message)
        self.partial = partial


@dataclass
class SessionConfig:
    iterations: int = 0
    integrate: bool = False
    include_initial_in_integration: bool = True
    reasoner_role: str = "reasoner"
    critic_role: str = "critic"

    def __post_init__(self) -> None:
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")


@dataclass
class IterationRecord:
    index: int
    response_raw: str
    trace: ReasoningTrace
    critique: str | None = None
    improved_thinking: str | None = None

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "response_raw": self.response_raw,
            "critique": self.critique,
            "improved_thinking": self.improved_thinking,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "IterationRecord":
        raw = doc["response_raw"]
        return cls(
            index=doc["index"],
            response_raw=raw,
            trace=parse_response(raw),
            critique=doc.get("critique"),
            improved_thinking=doc.get("improved_thinking"),
        )


@dataclass
class ReasoningSession:
    task: str
    session_id: str = field(default_factory=lambda: uuid.uuid4().hex[:12])
    records: list[IterationRecord] = field(default_factory=list)
    final_answer: str = ""
    merged_graph: KnowledgeGraph = field(default_factory=KnowledgeGraph)
    integrated: bool = False
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "format": SESSION_FORMAT,
            "id": self.session_id,
            "task": self.task,
            "integrated": self.integrated,
            "final_answer": self.final_answer,
            "records": [r.to_json() for r in self.records],
            "graph": graph_to_json(self.merged_graph),
            "warnings": self.warnings,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ReasoningSession":
        session = cls(
            task=doc["task"],
            session_id=doc["id"],
            records=[IterationRecord.from_json(r) for r in doc["records"]],
            final_answer=doc["final_answer"],
            merged_graph=graph_from_json(doc["graph"]),
            integrated=doc.get("integrated", False),
            warnings=doc.get("warnings", []),
        )
        return session

    def to_jsonl(self) -> str:
        """One JSON object per line: header, then one line per record."""
        lines = [
            json.dumps(
                {
                    "format": SESSION_FORMAT,
                    "id": self.session_id,
                    "task": self.task,
                    "integrated": self.integrated,
                    "final_answer": self.final_answer,
                    "graph": graph_to_json(self.merged_graph),
                    "warnings": self.warnings,
                }
            )
        ]
        lines.extend(json.dumps(r.to_json()) for r in self.records)
        return "\n".join(lines) + "\n"


def build_critique_prompt(question: str, think: str) -> str:
    """The critic template with {question}/{think} substituted literally."""
    return fill_template(CRITIQUE_TEMPLATE, {"question": question, "think": think})


def build_improvement_prompt(think: str, reflect: str) -> str:
    return fill_template(IMPROVEMENT_TEMPLATE, {"think": think, "reflect": reflect})


def build_integration_prompt(question: str, answers: list[str]) -> str:
    if not answers:
        raise EmptyAnswers("integration requires at least one answer")
    body = "".join(f"ANSWER #{k}: {answer}\n" for k, answer in enumerate(answers))
    return fill_template(INTEGRATION_HEADER, {"question": question}) + body + INTEGRATION_FOOTER


def extract_final_answer(session: ReasoningSession) -> str:
    return session.final_answer


def _record_graph(session: ReasoningSession, record: IterationRecord, step: StepRef) -> None:
    subgraph = from_triples(record.trace.graph_block, step)
    session.merged_graph = merge(session.merged_graph, subgraph)


def run_session(
    task: str,
    cfg: SessionConfig,
    gateway,
    gateway_cfg=None,
    provenance: StepRef | None = None,
) -> ReasoningSession:
    """Run one full session against `gateway`.

    `provenance`, when given, tags every parsed graph element (used by garden
    steps); otherwise each record gets its own (session-id, index) tag.
    Gateway failures raise EngineError with the partial session attached.
    """
    from .gateway import GatewayConfig

    if gateway_cfg is None:
        gateway_cfg = GatewayConfig()
    session = ReasoningSession(task=task)

    def step_ref(index: int) -> StepRef:
        return provenance or StepRef(session.session_id, index)

    def ask(role: str, content: str, primer: str | None = None) -> str:
        try:
            return gateway.complete(request_for(role, gateway_cfg, content, primer)).content
        except GatewayError as exc:
            raise EngineError(f"gateway failure during session: {exc}", session) from exc

    raw = ask(cfg.reasoner_role, task)
    trace = parse_response(raw)
    record = IterationRecord(0, raw, trace)
    session.records.append(record)
    session.warnings.extend(trace.warnings)
    _record_graph(session, record, step_ref(0))

    for i in range(1, cfg.iterations + 1):
        previous = session.records[-1]
        think = thinking_text(previous.trace, previous.response_raw)
        if not previous.trace.thinking_present:
            session.warnings.append(
                f"record {previous.index} has no thinking region; critiquing full text"
            )
        critique = ask(cfg.critic_role, build_critique_prompt(task, think))
        improved = ask(cfg.critic_role, build_improvement_prompt(think, critique))
        primer = fill_template(REGENERATION_PRIMER, {"think": improved})
        continuation = ask(cfg.reasoner_role, task, primer)
        raw_i = primer + continuation
        trace_i = parse_response(raw_i)
        record_i = IterationRecord(i, raw_i, trace_i, critique, improved)
        session.records.append(record_i)
        session.warnings.extend(trace_i.warnings)
        _record_graph(session, record_i, step_ref(i))

    if cfg.integrate:
        answers = [r.trace.final_answer for r in session.records]
        if not cfg.include_initial_in_integration and len(answers) > 1:
            answers = answers[1:]
        session.final_answer = ask(
            cfg.critic_role, build_integration_prompt(task, answers)
        )
        session.integrated = True
    else:
        session.final_answer = session.records[-1].trace.final_answer
    return session
