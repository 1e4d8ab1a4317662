"""Knowledge-graph reasoning workbench."""

__version__ = "0.1.0"

from .graph import KnowledgeGraph, StepRef, from_triples, merge  # noqa: F401
from .reasoning import ReasoningTrace, Triple, parse_response, serialize_trace  # noqa: F401
