"""Louvain modularity maximization and community summaries.

Directed graphs are symmetrized first (antiparallel weights summed, loops
dropped), since modularity is defined here for undirected weighted graphs.
"""

from __future__ import annotations

import math
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Any, Hashable, Mapping, Sequence

from acqgraph.errors import UndefinedValueError
from acqgraph.graph import AttributedGraph, sort_key, undirected_view

Node = Hashable

MIN_GAIN = 1e-12


@dataclass
class Partition:
    """Node -> community id, ids dense from 0 (0 is the largest community)."""

    assignment: dict[Node, int]
    modularity: float
    pass_modularity: list[float] = field(default_factory=list)

    @property
    def n_communities(self) -> int:
        return len(set(self.assignment.values()))

    def communities(self) -> list[list[Node]]:
        groups: dict[int, list[Node]] = defaultdict(list)
        for u, c in self.assignment.items():
            groups[c].append(u)
        return [sorted(groups[c], key=sort_key) for c in sorted(groups)]


def _weighted_adjacency(g: AttributedGraph) -> dict[Node, dict[Node, float]]:
    und = undirected_view(g)
    adj: dict[Node, dict[Node, float]] = {u: {} for u in und.sorted_nodes()}
    for (u, v), w in und.edges.items():
        adj[u][v] = float(w)
        adj[v][u] = float(w)
    return adj


def modularity(g: AttributedGraph, assignment: Mapping[Node, Any], resolution: float = 1.0) -> float:
    """Q = sum_c [ in_c / 2m - resolution * (tot_c / 2m)^2 ] on the undirected view.

    ``in_c`` counts each internal edge twice; ``tot_c`` is the summed degree.
    """
    adj = _weighted_adjacency(g)
    missing = [u for u in adj if u not in assignment]
    if missing:
        raise ValueError(f"assignment misses {len(missing)} node(s), e.g. {missing[0]!r}")
    two_m = math.fsum(w for nbrs in adj.values() for w in nbrs.values())
    if two_m == 0:
        raise UndefinedValueError("modularity of a graph without edges")
    inner: dict[Any, list[float]] = defaultdict(list)
    tot: dict[Any, list[float]] = defaultdict(list)
    for u, nbrs in adj.items():
        cu = assignment[u]
        for v, w in nbrs.items():
            tot[cu].append(w)
            if assignment[v] == cu:
                inner[cu].append(w)
    return math.fsum(
        math.fsum(inner[c]) / two_m - resolution * (math.fsum(tot[c]) / two_m) ** 2 for c in tot
    )


class _Level:
    """Compact integer graph used inside one Louvain level."""

    def __init__(self, n: int, nbrs: list[dict[int, float]], loops: list[float]):
        self.n = n
        self.nbrs = nbrs  # non-loop neighbours
        self.loops = loops  # self-loop weight (internal weight of aggregated nodes)
        self.k = [math.fsum(nbrs[i].values()) + 2 * loops[i] for i in range(n)]
        self.two_m = math.fsum(self.k)


def _move_nodes(level: _Level, comm: list[int], resolution: float, rng: random.Random) -> bool:
    """Local-move phase; returns True if any node changed community."""
    tot = defaultdict(float)
    for i in range(level.n):
        tot[comm[i]] += level.k[i]
    order = list(range(level.n))
    rng.shuffle(order)
    moved_any = False
    improved = True
    two_m = level.two_m
    while improved:
        improved = False
        for i in order:
            ci = comm[i]
            ki = level.k[i]
            links: dict[int, float] = defaultdict(float)
            for j, w in level.nbrs[i].items():
                links[comm[j]] += w
            tot[ci] -= ki
            # gain of inserting i into c, up to a constant shared by all c
            best_c = ci
            best_gain = links.get(ci, 0.0) - resolution * tot[ci] * ki / two_m
            for c in sorted(links):
                gain = links[c] - resolution * tot[c] * ki / two_m
                if gain > best_gain + MIN_GAIN:
                    best_c, best_gain = c, gain
            tot[best_c] += ki
            if best_c != ci:
                comm[i] = best_c
                improved = True
                moved_any = True
    return moved_any


def _aggregate(level: _Level, comm: list[int]) -> tuple[_Level, list[int]]:
    labels = {c: i for i, c in enumerate(sorted(set(comm)))}
    mapping = [labels[c] for c in comm]
    n = len(labels)
    nbrs: list[dict[int, float]] = [defaultdict(float) for _ in range(n)]
    loops = [0.0] * n
    for i in range(level.n):
        ci = mapping[i]
        loops[ci] += level.loops[i]
        for j, w in level.nbrs[i].items():
            cj = mapping[j]
            if ci == cj:
                loops[ci] += w / 2  # each internal edge is visited from both ends
            else:
                nbrs[ci][cj] += w
    return _Level(n, [dict(d) for d in nbrs], loops), mapping


def _canonical_ids(assignment: dict[Node, int]) -> dict[Node, int]:
    groups: dict[int, list[Node]] = defaultdict(list)
    for u, c in assignment.items():
        groups[c].append(u)
    ordered = sorted(groups.values(), key=lambda m: (-len(m), min(sort_key(u) for u in m)))
    out = {}
    for cid, members in enumerate(ordered):
        for u in members:
            out[u] = cid
    return out


def louvain(g: AttributedGraph, resolution: float = 1.0, seed: int = 0) -> Partition:
    """Two-phase Louvain: local moves, then aggregation, until no pass improves.

    Visit order within each level is shuffled by ``random.Random(seed)``, so a
    fixed seed gives a fixed partition. ``pass_modularity`` records Q on the
    original graph after every pass.
    """
    adj = _weighted_adjacency(g)
    nodes = list(adj)
    if not any(adj[u] for u in nodes):
        raise ValueError("Louvain needs at least one non-loop edge")
    pos = {u: i for i, u in enumerate(nodes)}
    level = _Level(
        len(nodes),
        [{pos[v]: w for v, w in adj[u].items()} for u in nodes],
        [0.0] * len(nodes),
    )
    rng = random.Random(seed)
    membership = list(range(len(nodes)))  # original node -> current level node
    history: list[float] = []
    while True:
        comm = list(range(level.n))
        moved = _move_nodes(level, comm, resolution, rng)
        if not moved:
            break
        level, mapping = _aggregate(level, comm)
        membership = [mapping[membership[i]] for i in range(len(nodes))]
        history.append(modularity(g, dict(zip(nodes, membership)), resolution))
    assignment = _canonical_ids(dict(zip(nodes, membership)))
    q = modularity(g, assignment, resolution)
    if not history:
        history.append(q)
    return Partition(assignment, q, history)


def top_communities(g: AttributedGraph, partition: Partition, k: int) -> AttributedGraph:
    """Induced subgraph on the ``k`` largest communities (ties by community id)."""
    sizes = Counter(partition.assignment.values())
    chosen = {c for c, _ in sorted(sizes.items(), key=lambda cs: (-cs[1], cs[0]))[: max(k, 0)]}
    return g.induced_subgraph(u for u, c in partition.assignment.items() if c in chosen)


def community_summary(
    g: AttributedGraph, partition: Partition, attributes: Sequence[str] = ("category", "region", "country")
) -> list[dict[str, Any]]:
    """Size, share of nodes and modal attribute values (with fractions) per community."""
    n = len(partition.assignment)
    out = []
    for cid, members in enumerate(partition.communities()):
        modal: dict[str, Any] = {}
        for attr in attributes:
            vals = Counter(g.attrs(u)[attr] for u in members if attr in g.attrs(u))
            if not vals:
                continue
            value, count = min(vals.items(), key=lambda kv: (-kv[1], str(kv[0])))
            modal[attr] = {"value": value, "fraction": count / len(members)}
        out.append({"community": cid, "size": len(members), "fraction": len(members) / n, "modal": modal})
    return out
