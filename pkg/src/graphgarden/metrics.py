"""Analysis suite for knowledge graphs.

Directed metrics (PageRank, domain prestige, in/out degree) run on the
directed edges; clustering, betweenness, paths, components, communities and
the bridging coefficient run on the simple undirected view.  Every report is
deterministic: values are computed without RNG and top-k ties break by node
key ascending.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field

from .graph import KnowledgeGraph, UndirectedView, induced_undirected

DEFAULT_DAMPING = 0.85
DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITERS = 100
DEFAULT_TOP_K = 5


class EmptyGraph(ValueError):
    pass


@dataclass
class MetricReport:
    metric: str
    values: dict[str, float]
    top_k: list[tuple[str, float]]
    converged: bool = True

    def to_json(self) -> dict:
        return {
            "metric": self.metric,
            "values": {k: self.values[k] for k in sorted(self.values)},
            "top_k": [[node, value] for node, value in self.top_k],
        }

    def to_table(self, display: dict[str, str] | None = None) -> str:
        lines = [f"{self.metric}", "-" * len(self.metric)]
        for node, value in self.top_k:
            label = display.get(node, node) if display else node
            lines.append(f"{label:<40} {value:.6g}")
        return "\n".join(lines)


def _report(metric: str, values: dict[str, float], k: int, converged: bool = True) -> MetricReport:
    ranked = sorted(values.items(), key=lambda item: (-item[1], item[0]))
    return MetricReport(metric, values, ranked[:k], converged)


def degree(g: KnowledgeGraph, k: int = DEFAULT_TOP_K) -> MetricReport:
    view = induced_undirected(g)
    return _report("degree", {n: float(view.degree(n)) for n in g.nodes}, k)


def in_degree(g: KnowledgeGraph, k: int = DEFAULT_TOP_K) -> MetricReport:
    values = {n: 0.0 for n in g.nodes}
    for (_, dst, _) in g.edges:
        values[dst] += 1.0
    return _report("in_degree", values, k)


def out_degree(g: KnowledgeGraph, k: int = DEFAULT_TOP_K) -> MetricReport:
    values = {n: 0.0 for n in g.nodes}
    for (src, _, _) in g.edges:
        values[src] += 1.0
    return _report("out_degree", values, k)


def pagerank(
    g: KnowledgeGraph,
    damping: float = DEFAULT_DAMPING,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    k: int = DEFAULT_TOP_K,
) -> MetricReport:
    """Power iteration with uniform teleportation; dangling nodes spread
    their mass uniformly each sweep."""
    if not 0.0 < damping < 1.0:
        raise ValueError("damping must lie in (0, 1)")
    if tol <= 0:
        raise ValueError("tol must be positive")
    nodes = sorted(g.nodes)
    n = len(nodes)
    if n == 0:
        raise EmptyGraph("pagerank over an empty graph")

    out_links: dict[str, list[str]] = {node: [] for node in nodes}
    for (src, dst, _) in g.edges:
        out_links[src].append(dst)

    rank = {node: 1.0 / n for node in nodes}
    converged = False
    for _ in range(max_iters):
        dangling_mass = sum(rank[node] for node in nodes if not out_links[node])
        nxt = {node: (1.0 - damping) / n + damping * dangling_mass / n for node in nodes}
        for node in nodes:
            links = out_links[node]
            if links:
                share = damping * rank[node] / len(links)
                for dst in links:
                    nxt[dst] += share
        delta = sum(abs(nxt[node] - rank[node]) for node in nodes)
        rank = nxt
        if delta < tol:
            converged = True
            break
    return _report("pagerank", rank, k, converged)


def bridging_coefficient(g: KnowledgeGraph, k: int = DEFAULT_TOP_K) -> MetricReport:
    """BC(v) = (1/deg(v)) / sum over neighbors of 1/deg(u); 0 when isolated."""
    view = induced_undirected(g)
    values = {}
    for node in g.nodes:
        deg = view.degree(node)
        if deg == 0:
            values[node] = 0.0
            continue
        inv_neighbors = sum(1.0 / view.degree(u) for u in view.neighbors[node])
        values[node] = (1.0 / deg) / inv_neighbors
    return _report("bridging_coefficient", values, k)


def domain_prestige(g: KnowledgeGraph, k: int = DEFAULT_TOP_K) -> MetricReport:
    """Fraction of other nodes from which each node is reachable."""
    nodes = sorted(g.nodes)
    n = len(nodes)
    if n < 2:
        return _report("domain_prestige", {node: 0.0 for node in nodes}, k)
    reverse: dict[str, list[str]] = {node: [] for node in nodes}
    for (src, dst, _) in g.edges:
        if src != dst:
            reverse[dst].append(src)
    values = {}
    for node in nodes:
        seen = {node}
        queue = deque([node])
        while queue:
            current = queue.popleft()
            for pred in reverse[current]:
                if pred not in seen:
                    seen.add(pred)
                    queue.append(pred)
        values[node] = (len(seen) - 1) / (n - 1)
    return _report("domain_prestige", values, k)


def clustering_coefficients(g: KnowledgeGraph, k: int = DEFAULT_TOP_K) -> MetricReport:
    view = induced_undirected(g)
    values = {}
    for node in g.nodes:
        neighbors = view.neighbors[node]
        deg = len(neighbors)
        if deg < 2:
            values[node] = 0.0
            continue
        links = 0
        ordered = sorted(neighbors)
        for i, u in enumerate(ordered):
            for v in ordered[i + 1:]:
                if v in view.neighbors[u]:
                    links += 1
        values[node] = 2.0 * links / (deg * (deg - 1))
    return _report("clustering", values, k)


def betweenness(g: KnowledgeGraph, k: int = DEFAULT_TOP_K) -> MetricReport:
    """Brandes accumulation on the undirected view, unnormalized; each
    unordered pair counts once."""
    view = induced_undirected(g)
    nodes = sorted(g.nodes)
    scores = {node: 0.0 for node in nodes}
    for source in nodes:
        stack: list[str] = []
        preds: dict[str, list[str]] = {node: [] for node in nodes}
        sigma = {node: 0.0 for node in nodes}
        sigma[source] = 1.0
        dist = {node: -1 for node in nodes}
        dist[source] = 0
        queue = deque([source])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in sorted(view.neighbors[v]):
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        dependency = {node: 0.0 for node in nodes}
        while stack:
            w = stack.pop()
            for v in preds[w]:
                dependency[v] += (sigma[v] / sigma[w]) * (1.0 + dependency[w])
            if w != source:
                scores[w] += dependency[w]
    # undirected: each pair was visited from both endpoints
    return _report("betweenness", {node: score / 2.0 for node, score in scores.items()}, k)


def connected_components(g: KnowledgeGraph) -> list[set[str]]:
    view = induced_undirected(g)
    seen: set[str] = set()
    components = []
    for node in sorted(g.nodes):
        if node in seen:
            continue
        comp = {node}
        queue = deque([node])
        seen.add(node)
        while queue:
            current = queue.popleft()
            for neighbor in view.neighbors[current]:
                if neighbor not in seen:
                    seen.add(neighbor)
                    comp.add(neighbor)
                    queue.append(neighbor)
        components.append(comp)
    components.sort(key=lambda c: (-len(c), min(c)))
    return components


def path_length_histogram(g: KnowledgeGraph) -> dict[int, int]:
    """Hop-count histogram over unordered pairs in the largest component
    of the undirected view."""
    components = connected_components(g)
    if not components:
        return {}
    largest = sorted(components[0])
    view = induced_undirected(g)
    histogram: Counter[int] = Counter()
    for source in largest:
        dist = {source: 0}
        queue = deque([source])
        while queue:
            v = queue.popleft()
            for w in view.neighbors[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
        for target, hops in dist.items():
            if source < target:
                histogram[hops] += 1
    return dict(sorted(histogram.items()))


def modularity(view: UndirectedView, partition: list[set[str]]) -> float:
    m = view.link_count()
    if m == 0:
        return 0.0
    score = 0.0
    for community in partition:
        internal = 0
        total_degree = 0
        for node in community:
            total_degree += view.degree(node)
            internal += sum(1 for u in view.neighbors[node] if u in community)
        internal //= 2
        score += internal / m - (total_degree / (2.0 * m)) ** 2
    return score


def communities(g: KnowledgeGraph) -> list[tuple[set[str], str]]:
    """Deterministic greedy modularity maximization (agglomerative merge of
    connected community pairs, best partition along the merge path).  The
    central node of a community is its highest-degree member, ties by key."""
    view = induced_undirected(g)
    nodes = sorted(g.nodes)
    if not nodes:
        return []
    if view.link_count() == 0:
        return [({node}, node) for node in nodes]

    parts: dict[str, set[str]] = {node: {node} for node in nodes}
    best_partition = [set(c) for c in parts.values()]
    best_q = modularity(view, best_partition)

    while len(parts) > 1:
        current_q = modularity(view, list(parts.values()))
        best_merge: tuple[float, str, str] | None = None
        labels = sorted(parts)
        for i, a in enumerate(labels):
            for b in labels[i + 1:]:
                if not any(u in view.neighbors[v] for v in parts[a] for u in parts[b]):
                    continue
                merged = list(parts.values())
                merged.remove(parts[a])
                merged.remove(parts[b])
                merged.append(parts[a] | parts[b])
                gain = modularity(view, merged) - current_q
                if best_merge is None or gain > best_merge[0] + 1e-12:
                    best_merge = (gain, a, b)
        if best_merge is None:
            break  # only disconnected communities remain
        _, a, b = best_merge
        parts[a] = parts[a] | parts[b]
        del parts[b]
        q = current_q + best_merge[0]
        if q > best_q + 1e-12:
            best_q = q
            best_partition = [set(c) for c in parts.values()]

    def central(community: set[str]) -> str:
        return min(community, key=lambda node: (-view.degree(node), node))

    result = [(community, central(community)) for community in best_partition]
    result.sort(key=lambda item: (-len(item[0]), min(item[0])))
    return result


@dataclass
class GraphSummary:
    degree_histogram: dict[int, int] = field(default_factory=dict)
    clustering_histogram: dict[float, int] = field(default_factory=dict)
    betweenness: dict[str, float] = field(default_factory=dict)
    path_length_histogram: dict[int, int] = field(default_factory=dict)
    components: list[set[str]] = field(default_factory=list)
    communities: list[tuple[set[str], str]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "degree_histogram": {str(k): v for k, v in self.degree_histogram.items()},
            "clustering_histogram": {f"{k:.1f}": v for k, v in self.clustering_histogram.items()},
            "betweenness": {k: self.betweenness[k] for k in sorted(self.betweenness)},
            "path_length_histogram": {str(k): v for k, v in self.path_length_histogram.items()},
            "components": [sorted(c) for c in self.components],
            "communities": [
                {"nodes": sorted(c), "central": central} for c, central in self.communities
            ],
        }


def _bin_clustering(values: dict[str, float]) -> dict[float, int]:
    bins: Counter[float] = Counter()
    for value in values.values():
        edge = min(int(value * 10), 9) / 10.0
        bins[edge] += 1
    return dict(sorted(bins.items()))


def summarize(g: KnowledgeGraph) -> GraphSummary:
    if not g.nodes:
        return GraphSummary()
    view = induced_undirected(g)
    degree_histogram: Counter[int] = Counter(view.degree(node) for node in g.nodes)
    clustering = clustering_coefficients(g)
    return GraphSummary(
        degree_histogram=dict(sorted(degree_histogram.items())),
        clustering_histogram=_bin_clustering(clustering.values),
        betweenness=betweenness(g).values,
        path_length_histogram=path_length_histogram(g),
        components=connected_components(g),
        communities=communities(g),
    )


ALL_METRICS = {
    "degree": degree,
    "in_degree": in_degree,
    "out_degree": out_degree,
    "pagerank": pagerank,
    "bridging": bridging_coefficient,
    "prestige": domain_prestige,
    "clustering": clustering_coefficients,
    "betweenness": betweenness,
}
