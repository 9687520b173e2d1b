"""Structural metrics and assortativity coefficients.

Clustering, transitivity and path metrics ignore weights and direction (they run
on the undirected, loop-free view). Assortativity counts edge weights as
multiplicities. Undefined values raise :class:`UndefinedValueError`; the record
helpers turn them into ``None``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any, Callable, Hashable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from acqgraph._parallel import chunks, ordered_map
from acqgraph.errors import UndefinedValueError
from acqgraph.graph import AttributedGraph, sort_key

Node = Hashable

# Sources per BFS batch; bounds the dense distance block at BATCH x n.
BFS_BATCH = 256


def density(g: AttributedGraph) -> float:
    """Distinct non-loop edges over possible pairs (ordered pairs when directed)."""
    n = len(g)
    if n < 2:
        raise UndefinedValueError(f"density needs at least 2 nodes, got {n}")
    m = g.number_of_edges() - g.self_loops()
    if g.directed:
        return m / (n * (n - 1))
    return 2 * m / (n * (n - 1))


def _triangle_counts(adj: dict[Node, set[Node]]) -> dict[Node, int]:
    """Number of edges among each node's neighbours."""
    out = {}
    for v, nbrs in adj.items():
        links = 0
        for u in nbrs:
            links += len(nbrs & adj[u])
        out[v] = links // 2
    return out


def transitivity(g: AttributedGraph) -> float:
    """3 x triangles / connected triples; 0 when there are no triples."""
    adj = g.simple_neighbors()
    tri = _triangle_counts(adj)
    closed = sum(tri.values())  # each triangle is seen from all 3 corners
    triples = sum(len(n) * (len(n) - 1) // 2 for n in adj.values())
    if triples == 0:
        return 0.0
    return closed / triples


def local_clustering(g: AttributedGraph) -> dict[Node, float]:
    adj = g.simple_neighbors()
    tri = _triangle_counts(adj)
    out = {}
    for v, nbrs in adj.items():
        d = len(nbrs)
        out[v] = 0.0 if d < 2 else 2 * tri[v] / (d * (d - 1))
    return out


def avg_clustering(g: AttributedGraph) -> float:
    """Mean unweighted local clustering; nodes of degree < 2 contribute 0."""
    if len(g) == 0:
        raise UndefinedValueError("average clustering of an empty graph")
    return math.fsum(local_clustering(g).values()) / len(g)


# -- connectivity ------------------------------------------------------------


@dataclass(frozen=True)
class Components:
    """Component partitions, each sorted by size (desc) then smallest member."""

    weak: list[list[Node]]
    strong: list[list[Node]] | None

    @property
    def largest_wcc(self) -> list[Node]:
        return self.weak[0] if self.weak else []

    @property
    def largest_scc(self) -> list[Node]:
        return self.strong[0] if self.strong else []


def _canonical(parts: list[list[Node]]) -> list[list[Node]]:
    parts = [sorted(p, key=sort_key) for p in parts]
    parts.sort(key=lambda p: (-len(p), sort_key(p[0])))
    return parts


def weak_components(g: AttributedGraph) -> list[list[Node]]:
    adj = g.simple_neighbors()
    seen: set[Node] = set()
    parts = []
    for s in g.sorted_nodes():
        if s in seen:
            continue
        seen.add(s)
        comp, stack = [s], [s]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    comp.append(w)
                    stack.append(w)
        parts.append(comp)
    return _canonical(parts)


def strong_components(g: AttributedGraph) -> list[list[Node]]:
    """Tarjan's algorithm, iterative to avoid recursion limits."""
    index: dict[Node, int] = {}
    low: dict[Node, int] = {}
    on_stack: set[Node] = set()
    stack: list[Node] = []
    parts: list[list[Node]] = []
    counter = 0
    for root in g.sorted_nodes():
        if root in index:
            continue
        work = [(root, iter(g.successors(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(g.successors(w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                parts.append(comp)
    return _canonical(parts)


def components(g: AttributedGraph) -> Components:
    return Components(weak_components(g), strong_components(g) if g.directed else None)


# -- shortest paths ----------------------------------------------------------


def _csr(g: AttributedGraph, nodes: Sequence[Node], undirected: bool) -> csr_matrix:
    pos = {u: i for i, u in enumerate(nodes)}
    rows, cols = [], []
    for (u, v) in g.edges:
        if u == v or u not in pos or v not in pos:
            continue
        rows.append(pos[u])
        cols.append(pos[v])
        if undirected or not g.directed:
            rows.append(pos[v])
            cols.append(pos[u])
    n = len(nodes)
    data = np.ones(len(rows), dtype=np.float64)
    m = csr_matrix((data, (rows, cols)), shape=(n, n))
    m.data[:] = 1.0  # duplicates summed by the constructor; hop distances only
    return m


def hop_distances(
    g: AttributedGraph,
    sources: Sequence[Node],
    nodes: Sequence[Node] | None = None,
    undirected: bool = True,
    reverse: bool = False,
) -> np.ndarray:
    """Unweighted BFS distances, one row per source (``inf`` when unreachable).

    ``reverse=True`` measures distances *into* each source on a digraph.
    """
    nodes = list(nodes) if nodes is not None else g.sorted_nodes()
    pos = {u: i for i, u in enumerate(nodes)}
    adj = _csr(g, nodes, undirected)
    if reverse:
        adj = adj.T.tocsr()
    idx = [pos[s] for s in sources]
    if not idx:
        return np.zeros((0, len(nodes)))
    return shortest_path(adj, method="D", directed=True, unweighted=True, indices=idx)


def _distance_sum(adj: csr_matrix, idx: Sequence[int]) -> int:
    d = shortest_path(adj, method="D", directed=True, unweighted=True, indices=list(idx))
    finite = d[np.isfinite(d)]
    return int(finite.astype(np.int64).sum())


def avg_shortest_path(
    g: AttributedGraph,
    workers: int = 1,
    sample: int | None = None,
    seed: int = 0,
) -> float:
    """Mean hop distance over ordered pairs of the largest (weak) component.

    With ``sample`` set, only that many seeded random sources are used and the
    result is an approximation.
    """
    comp = weak_components(g)
    if not comp or len(comp[0]) < 2:
        raise UndefinedValueError("largest component has fewer than 2 nodes")
    nodes = comp[0]
    n = len(nodes)
    adj = _csr(g.induced_subgraph(nodes), nodes, undirected=True)
    sources = list(range(n))
    if sample is not None and sample < n:
        rng = np.random.default_rng(seed)
        sources = sorted(rng.choice(n, size=sample, replace=False).tolist())
    sums = ordered_map(lambda idx: _distance_sum(adj, idx), chunks(sources, BFS_BATCH), workers)
    return sum(sums) / (len(sources) * (n - 1))


# -- structure record --------------------------------------------------------


@dataclass
class StructureRecord:
    density: float | None
    transitivity: float | None
    avg_clustering: float | None
    avg_shortest_path: float | None
    largest_wcc_size: int
    largest_scc_size: int | None
    n_wcc: int

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def defined(fn: Callable[..., float], *args, **kwargs) -> float | None:
    """Evaluate a metric, mapping :class:`UndefinedValueError` to ``None``."""
    try:
        return fn(*args, **kwargs)
    except UndefinedValueError:
        return None


def structure(g: AttributedGraph, workers: int = 1) -> StructureRecord:
    comps = components(g)
    return StructureRecord(
        density=defined(density, g),
        transitivity=defined(transitivity, g) if len(g) else None,
        avg_clustering=defined(avg_clustering, g),
        avg_shortest_path=defined(avg_shortest_path, g, workers=workers),
        largest_wcc_size=len(comps.largest_wcc),
        largest_scc_size=len(comps.largest_scc) if comps.strong is not None else None,
        n_wcc=len(comps.weak),
    )


# -- assortativity -----------------------------------------------------------


@dataclass(frozen=True)
class MixingMatrix:
    labels: list[Any]
    e: np.ndarray

    @property
    def a(self) -> np.ndarray:
        return self.e.sum(axis=1)

    @property
    def b(self) -> np.ndarray:
        return self.e.sum(axis=0)


def _node_values(g: AttributedGraph, attribute: str) -> dict[Node, Any]:
    values = {}
    for u, attrs in g.node_items():
        if attribute not in attrs:
            raise UndefinedValueError(f"node {u!r} lacks attribute {attribute!r}")
        values[u] = attrs[attribute]
    return values


def _oriented_edges(g: AttributedGraph) -> list[tuple[Node, Node, float]]:
    """Weighted (source, target) pairs; undirected edges contribute both ways at half weight."""
    out = []
    for (u, v), w in g.edges.items():
        if g.directed or u == v:
            out.append((u, v, float(w)))
        else:
            out.append((u, v, w / 2))
            out.append((v, u, w / 2))
    return out


def mixing_matrix(g: AttributedGraph, attribute: str) -> MixingMatrix:
    values = _node_values(g, attribute)
    labels = sorted(set(values.values()), key=lambda x: (type(x).__name__, x))
    pos = {lab: i for i, lab in enumerate(labels)}
    k = len(labels)
    cells: dict[tuple[int, int], list[float]] = {}
    for u, v, w in _oriented_edges(g):
        cells.setdefault((pos[values[u]], pos[values[v]]), []).append(w)
    total = math.fsum(w for ws in cells.values() for w in ws)
    if total == 0:
        raise UndefinedValueError("assortativity of a graph without edges")
    e = np.zeros((k, k))
    for (i, j), ws in cells.items():
        e[i, j] = math.fsum(ws) / total
    return MixingMatrix(labels, e)


def assortativity_categorical(g: AttributedGraph, attribute: str) -> float:
    """Newman's discrete assortativity r = (tr e - sum a_i b_i) / (1 - sum a_i b_i)."""
    mm = mixing_matrix(g, attribute)
    e = mm.e
    a = [math.fsum(row) for row in e]
    b = [math.fsum(col) for col in e.T]
    trace = math.fsum(np.diag(e))
    ab = math.fsum(x * y for x, y in zip(a, b))
    if ab >= 1.0:
        raise UndefinedValueError(f"all edge endpoints share one {attribute!r} value")
    return (trace - ab) / (1.0 - ab)


def _weighted_pearson(pairs: list[tuple[float, float, float]], what: str) -> float:
    if not pairs:
        raise UndefinedValueError("assortativity of a graph without edges")
    wsum = math.fsum(w for _, _, w in pairs)
    mx = math.fsum(w * x for x, _, w in pairs) / wsum
    my = math.fsum(w * y for _, y, w in pairs) / wsum
    sxx = math.fsum(w * (x - mx) ** 2 for x, _, w in pairs)
    syy = math.fsum(w * (y - my) ** 2 for _, y, w in pairs)
    if sxx == 0 or syy == 0:
        raise UndefinedValueError(f"{what} has zero variance over edge endpoints")
    sxy = math.fsum(w * (x - mx) * (y - my) for x, y, w in pairs)
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def assortativity_numeric(g: AttributedGraph, attribute: str) -> float:
    """Weighted Pearson correlation of attribute values across edge endpoints."""
    values = _node_values(g, attribute)
    pairs = [(float(values[u]), float(values[v]), w) for u, v, w in _oriented_edges(g)]
    return _weighted_pearson(pairs, attribute)


def degrees(g: AttributedGraph, flavor: str = "total") -> dict[Node, int]:
    """Unweighted, loop-free degree: ``in``, ``out`` or ``total`` (in + out)."""
    if flavor not in ("in", "out", "total"):
        raise ValueError(f"unknown degree flavor {flavor!r}")
    out = {}
    for u in g.nodes:
        d_out = sum(1 for v in g.successors(u) if v != u)
        if not g.directed:
            out[u] = d_out
            continue
        d_in = sum(1 for v in g.predecessors(u) if v != u)
        out[u] = {"in": d_in, "out": d_out, "total": d_in + d_out}[flavor]
    return out


def assortativity_degree(g: AttributedGraph, flavor: str = "total") -> float:
    if g.number_of_edges() == 0:
        raise UndefinedValueError("degree assortativity needs at least one edge")
    deg = degrees(g, flavor)
    pairs = [(float(deg[u]), float(deg[v]), w) for u, v, w in _oriented_edges(g)]
    return _weighted_pearson(pairs, "degree")


# Assortativity features: display name -> (kind, attribute)
ASSORTATIVITY_FEATURES: dict[str, tuple[str, str | None]] = {
    "Country": ("categorical", "country"),
    "Region": ("categorical", "region"),
    "City": ("categorical", "city"),
    "Category group": ("categorical", "category_group"),
    "Category": ("categorical", "category"),
    "Founding date (year-month)": ("numeric", "founded_month"),
    "Node degree": ("degree", None),
}


def assortativity_table(g: AttributedGraph, degree_flavor: str = "total") -> dict[str, float | None]:
    """Every assortativity feature for one graph; ``None`` where undefined or unavailable."""
    out: dict[str, float | None] = {}
    for name, (kind, attr) in ASSORTATIVITY_FEATURES.items():
        if kind == "categorical":
            out[name] = defined(assortativity_categorical, g, attr)
        elif kind == "numeric":
            out[name] = defined(assortativity_numeric, g, attr)
        else:
            out[name] = defined(assortativity_degree, g, degree_flavor)
    return out
