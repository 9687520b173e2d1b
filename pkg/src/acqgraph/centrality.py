"""Node centrality measures and ranked reporting.

Self-loops are ignored everywhere in this module. Path-based measures
(betweenness, closeness) use hop distances; spectral measures (eigenvector,
PageRank, HITS) treat edge weights as connection strengths.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Hashable, Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix

from acqgraph._parallel import chunks, ordered_map
from acqgraph.errors import ConvergenceError, DegenerateSpectrumError, UndefinedValueError
from acqgraph.graph import AttributedGraph, sort_key
from acqgraph.metrics import hop_distances, strong_components

Node = Hashable

# Fixed so that the float reduction order never depends on the worker count.
SOURCE_CHUNK = 64


class Metric(str, Enum):
    DEGREE = "degree"
    WEIGHTED_DEGREE = "weighted_degree"
    BETWEENNESS = "betweenness"
    CLOSENESS = "closeness"
    EIGENVECTOR = "eigenvector"
    PAGERANK = "pagerank"
    AUTHORITY = "authority"

    @property
    def label(self) -> str:
        return METRIC_LABELS[self]


METRIC_LABELS = {
    Metric.DEGREE: "Degree centrality",
    Metric.WEIGHTED_DEGREE: "Weighted degree centrality",
    Metric.BETWEENNESS: "Betweenness centrality",
    Metric.CLOSENESS: "Closeness centrality",
    Metric.EIGENVECTOR: "Eigenvector centrality",
    Metric.PAGERANK: "PageRank centrality",
    Metric.AUTHORITY: "Authority centrality",
}


@dataclass
class CentralityVector:
    metric: Metric
    values: dict[Node, float]
    params: dict[str, Any] = field(default_factory=dict)
    hubs: dict[Node, float] | None = None
    iterations: int | None = None


def _adjacency(g: AttributedGraph) -> dict[Node, list[Node]]:
    """Loop-free successor lists in canonical node order."""
    return {u: sorted((v for v in g.successors(u) if v != u), key=sort_key) for u in g.sorted_nodes()}


def degree_centrality(g: AttributedGraph, flavor: str = "total", normalized: bool = True) -> CentralityVector:
    n = len(g)
    scale = 1.0 / (n - 1) if normalized and n > 1 else (1.0 if not normalized else 0.0)
    values = {}
    for u in g.nodes:
        out = sum(1 for v in g.successors(u) if v != u)
        if not g.directed:
            d = out
        else:
            inn = sum(1 for v in g.predecessors(u) if v != u)
            d = {"in": inn, "out": out, "total": inn + out}[flavor]
        values[u] = d * scale
    return CentralityVector(Metric.DEGREE, values, {"flavor": flavor, "normalized": normalized})


def weighted_degree(g: AttributedGraph, flavor: str = "total") -> CentralityVector:
    """Sum of incident edge weights (in, out or both)."""
    if flavor not in ("in", "out", "total"):
        raise ValueError(f"unknown flavor {flavor!r}")
    values = {}
    for u in g.nodes:
        out = sum(w for v, w in g.successors(u).items() if v != u)
        if not g.directed:
            values[u] = float(out)
            continue
        inn = sum(w for v, w in g.predecessors(u).items() if v != u)
        values[u] = float({"in": inn, "out": out, "total": inn + out}[flavor])
    return CentralityVector(Metric.WEIGHTED_DEGREE, values, {"flavor": flavor})


# -- betweenness -------------------------------------------------------------


def _single_source_dependency(adj: dict[Node, list[Node]], s: Node) -> dict[Node, float]:
    dist = {s: 0}
    sigma = {s: 1}
    preds: dict[Node, list[Node]] = {s: []}
    order = []
    queue = deque([s])
    while queue:
        v = queue.popleft()
        order.append(v)
        for w in adj[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                sigma[w] = 0
                preds[w] = []
                queue.append(w)
            if dist[w] == dist[v] + 1:
                sigma[w] += sigma[v]
                preds[w].append(v)
    delta = dict.fromkeys(order, 0.0)
    for w in reversed(order):
        coeff = (1.0 + delta[w]) / sigma[w]
        for v in preds[w]:
            delta[v] += sigma[v] * coeff
    delta.pop(s)
    return delta


def betweenness(g: AttributedGraph, normalized: bool = True, workers: int = 1) -> CentralityVector:
    """Shortest-path betweenness by dependency accumulation over hop distances.

    Normalized by (n-1)(n-2) for digraphs and (n-1)(n-2)/2 for undirected graphs.
    """
    adj = _adjacency(g)
    sources = list(adj)

    def run(block: Sequence[Node]) -> dict[Node, float]:
        acc: dict[Node, float] = {}
        for s in block:
            for v, d in _single_source_dependency(adj, s).items():
                acc[v] = acc.get(v, 0.0) + d
        return acc

    partials = ordered_map(run, chunks(sources, SOURCE_CHUNK), workers)
    values = dict.fromkeys(sources, 0.0)
    for part in partials:
        for v, d in part.items():
            values[v] += d
    n = len(sources)
    # Each undirected pair is counted from both endpoints.
    if not g.directed:
        values = {v: x / 2 for v, x in values.items()}
    if normalized:
        pairs = (n - 1) * (n - 2) if g.directed else (n - 1) * (n - 2) / 2
        values = {v: (x / pairs if pairs > 0 else 0.0) for v, x in values.items()}
    return CentralityVector(Metric.BETWEENNESS, values, {"normalized": normalized})


def closeness(g: AttributedGraph, workers: int = 1) -> CentralityVector:
    """(r / sum of incoming distances) scaled by r / (n - 1), r = nodes that reach u.

    The second factor is the Wasserman-Faust correction that keeps values
    comparable across components. Nodes nobody reaches score 0.
    """
    nodes = g.sorted_nodes()
    n = len(nodes)

    def run(block: Sequence[Node]) -> list[float]:
        d = hop_distances(g, block, nodes, undirected=not g.directed, reverse=g.directed)
        out = []
        for row in d:
            finite = row[np.isfinite(row)]
            total = int(finite.astype(np.int64).sum())
            reach = len(finite) - 1
            out.append((reach / total) * (reach / (n - 1)) if total > 0 else 0.0)
        return out

    scores = [x for part in ordered_map(run, chunks(nodes, SOURCE_CHUNK), workers) for x in part]
    return CentralityVector(Metric.CLOSENESS, dict(zip(nodes, scores)))


# -- spectral measures -------------------------------------------------------


def weighted_matrix(g: AttributedGraph, nodes: Sequence[Node] | None = None) -> csr_matrix:
    """Loop-free weighted adjacency ``A[u, v] = w(u, v)`` (symmetric when undirected)."""
    nodes = list(nodes) if nodes is not None else g.sorted_nodes()
    pos = {u: i for i, u in enumerate(nodes)}
    rows, cols, data = [], [], []
    for (u, v), w in g.edges.items():
        if u == v:
            continue
        rows.append(pos[u])
        cols.append(pos[v])
        data.append(float(w))
        if not g.directed:
            rows.append(pos[v])
            cols.append(pos[u])
            data.append(float(w))
    n = len(nodes)
    return csr_matrix((data, (rows, cols)), shape=(n, n))


def _power_iterate(step, n: int, tolerance: float, max_iterations: int, what: str) -> tuple[np.ndarray, int]:
    x = np.full(n, 1.0 / math.sqrt(n))
    for it in range(1, max_iterations + 1):
        y = step(x)
        norm = np.linalg.norm(y)
        if norm == 0:
            raise DegenerateSpectrumError(f"{what}: iterate collapsed to the zero vector")
        y /= norm
        if np.abs(y - x).sum() < tolerance:
            return y, it
        x = y
    raise ConvergenceError(f"{what} did not converge in {max_iterations} iterations", iterations=max_iterations)


def eigenvector(
    g: AttributedGraph, tolerance: float = 1e-10, max_iterations: int = 10_000
) -> CentralityVector:
    """Principal eigenvector of the weighted adjacency, via power iteration.

    A node's score sums the scores of nodes pointing *to* it. Iterating on
    ``I + A^T`` has the same eigenvectors and avoids oscillation on bipartite
    structure. The result is non-negative with unit Euclidean norm.

    Raises:
        DegenerateSpectrumError: the loop-free graph has no edges, or is an
            acyclic digraph (nilpotent adjacency, no positive eigenvalue).
        ConvergenceError: ``max_iterations`` exhausted.
    """
    nodes = g.sorted_nodes()
    if g.number_of_edges() - g.self_loops() == 0:
        raise DegenerateSpectrumError("eigenvector centrality needs at least one non-loop edge")
    if g.directed and all(len(c) == 1 for c in strong_components(_without_loops(g))):
        raise DegenerateSpectrumError("acyclic digraph: adjacency is nilpotent")
    mt = weighted_matrix(g, nodes).T.tocsr()
    x, its = _power_iterate(lambda v: v + mt @ v, len(nodes), tolerance, max_iterations, "eigenvector")
    x = np.maximum(x, 0.0)
    x /= np.linalg.norm(x)
    params = {"tolerance": tolerance, "max_iterations": max_iterations}
    return CentralityVector(Metric.EIGENVECTOR, dict(zip(nodes, x.tolist())), params, iterations=its)


def _without_loops(g: AttributedGraph) -> AttributedGraph:
    if g.self_loops() == 0:
        return g
    return AttributedGraph(
        g.directed, {u: a for u, a in g.node_items()}, {e: w for e, w in g.edges.items() if e[0] != e[1]}
    )


def pagerank(
    g: AttributedGraph,
    alpha: float = 0.85,
    tolerance: float = 1e-12,
    max_iterations: int = 1000,
) -> CentralityVector:
    """PageRank with weight-proportional transitions.

    ``x_i = alpha * sum_j (w_ji / s_j) x_j + alpha * D / n + (1 - alpha) / n``,
    where ``s_j`` is the out-weight of ``j`` and ``D`` the mass on dangling
    nodes, which is spread uniformly.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    nodes = g.sorted_nodes()
    n = len(nodes)
    if n == 0:
        raise UndefinedValueError("PageRank of an empty graph")
    a = weighted_matrix(g, nodes)
    out_w = np.asarray(a.sum(axis=1)).ravel()
    dangling = out_w == 0
    inv = np.divide(1.0, out_w, out=np.zeros_like(out_w), where=~dangling)
    pt = (csr_matrix(a.multiply(inv[:, None]))).T.tocsr()
    x = np.full(n, 1.0 / n)
    teleport = (1.0 - alpha) / n
    for it in range(1, max_iterations + 1):
        y = alpha * (pt @ x) + (alpha * x[dangling].sum() / n + teleport)
        y /= y.sum()
        if np.abs(y - x).sum() < tolerance:
            params = {"alpha": alpha, "tolerance": tolerance, "max_iterations": max_iterations}
            return CentralityVector(Metric.PAGERANK, dict(zip(nodes, y.tolist())), params, iterations=it)
        x = y
    raise ConvergenceError(f"PageRank did not converge in {max_iterations} iterations", iterations=max_iterations)


def authority(
    g: AttributedGraph, tolerance: float = 1e-12, max_iterations: int = 10_000
) -> CentralityVector:
    """HITS authority scores (principal eigenvector of ``A^T A``); hubs are attached."""
    nodes = g.sorted_nodes()
    if g.number_of_edges() - g.self_loops() == 0:
        raise DegenerateSpectrumError("authority centrality needs at least one non-loop edge")
    a = weighted_matrix(g, nodes)
    at = a.T.tocsr()
    x, its = _power_iterate(lambda v: at @ (a @ v), len(nodes), tolerance, max_iterations, "authority")
    x = np.maximum(x, 0.0)
    x /= np.linalg.norm(x)
    h = a @ x
    hn = np.linalg.norm(h)
    h = h / hn if hn > 0 else h
    params = {"tolerance": tolerance, "max_iterations": max_iterations}
    return CentralityVector(
        Metric.AUTHORITY, dict(zip(nodes, x.tolist())), params, hubs=dict(zip(nodes, h.tolist())), iterations=its
    )


def compute(
    g: AttributedGraph,
    metric: Metric | str,
    alpha: float = 0.85,
    tolerance: float | None = None,
    max_iterations: int | None = None,
    workers: int = 1,
) -> CentralityVector:
    metric = Metric(metric)
    iter_kw: dict[str, Any] = {}
    if tolerance is not None:
        iter_kw["tolerance"] = tolerance
    if max_iterations is not None:
        iter_kw["max_iterations"] = max_iterations
    if metric is Metric.DEGREE:
        return degree_centrality(g)
    if metric is Metric.WEIGHTED_DEGREE:
        return weighted_degree(g)
    if metric is Metric.BETWEENNESS:
        return betweenness(g, workers=workers)
    if metric is Metric.CLOSENESS:
        return closeness(g, workers=workers)
    if metric is Metric.EIGENVECTOR:
        return eigenvector(g, **iter_kw)
    if metric is Metric.PAGERANK:
        return pagerank(g, alpha=alpha, **iter_kw)
    return authority(g, **iter_kw)


@dataclass(frozen=True)
class RankRow:
    metric: str
    node: Node
    value: float
    rank: int


def rank_table(vectors: Iterable[CentralityVector], k: int) -> list[RankRow]:
    """Top-``k`` nodes per metric, highest first, ties broken by node key."""
    vectors = list(vectors)
    if vectors:
        base = set(vectors[0].values)
        for vec in vectors[1:]:
            if set(vec.values) != base:
                raise ValueError("centrality vectors cover different node sets")
    rows = []
    for vec in vectors:
        ranked = sorted(vec.values.items(), key=lambda kv: (-kv[1], sort_key(kv[0])))
        for r, (node, value) in enumerate(ranked[: max(k, 0)], start=1):
            rows.append(RankRow(Metric(vec.metric).value, node, value, r))
    return rows
