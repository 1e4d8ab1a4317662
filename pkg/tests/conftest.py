from __future__ import annotations

import random
from pathlib import Path

import pytest

from graphgarden.graph import KnowledgeGraph, StepRef

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


def load_fixture(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


def random_digraph(rng: random.Random, n: int, p: float = 0.35) -> KnowledgeGraph:
    """Random directed graph over n nodes; deterministic for a seeded rng."""
    g = KnowledgeGraph()
    step = StepRef("rnd", 0)
    for i in range(n):
        g.add_node(f"n{i}", step)
    for i in range(n):
        for j in range(n):
            if i != j and rng.random() < p:
                g.add_edge(f"n{i}", "R", f"n{j}", step=step)
    return g


def random_undirected(rng: random.Random, n: int, p: float = 0.4) -> KnowledgeGraph:
    g = KnowledgeGraph()
    step = StepRef("rnd", 0)
    for i in range(n):
        g.add_node(f"n{i}", step)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                g.add_edge(f"n{i}", "R", f"n{j}", step=step)
    return g
