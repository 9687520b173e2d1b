"""Attributed graph representation and the five network builders.

All analytics in the package work on :class:`AttributedGraph`, a small
immutable weighted graph with per-node attribute maps. Edge weights count
multiplicity, so there are never parallel edges.
"""

from __future__ import annotations

import hashlib
import os
import xml.etree.ElementTree as ET
from collections import defaultdict
from enum import Enum
from itertools import combinations
from types import MappingProxyType
from typing import Any, Hashable, Iterable, Iterator, Mapping

import numpy as np

from acqgraph.errors import DataError
from acqgraph.ingest import AcquisitionEvent, OrgRecord

Node = Hashable


class NetworkKind(str, Enum):
    ACQUISITION = "acquisition"
    COMMON_ACQUIRER = "common-acquirer"
    COMMON_ACQUIREE = "common-acquiree"
    CROSS_CITY = "cross-city"
    CROSS_BORDER = "cross-border"

    @property
    def directed(self) -> bool:
        return self in (NetworkKind.ACQUISITION, NetworkKind.CROSS_CITY, NetworkKind.CROSS_BORDER)


def sort_key(node: Node) -> tuple:
    # Total order over mixed key types: group by type name, then natural order.
    return (type(node).__name__, node)


class AttributedGraph:
    """Immutable directed or undirected weighted graph with node attributes.

    Parameters
    ----------
    directed : bool
        Orientation of every edge.
    nodes : mapping or iterable
        Node keys, optionally mapped to attribute dicts.
    edges : mapping or iterable
        ``{(u, v): weight}`` or ``(u, v, weight)`` triples. Undirected edges are
        stored canonically with ``u <= v``; repeated pairs aggregate their weights.

    Weights must be positive integers. Endpoints must be declared nodes.
    """

    __slots__ = ("directed", "_nodes", "_edges", "_succ", "_pred")

    def __init__(
        self,
        directed: bool,
        nodes: Mapping[Node, Mapping[str, Any]] | Iterable[Node] = (),
        edges: Mapping[tuple[Node, Node], int] | Iterable[tuple[Node, Node, int]] = (),
    ):
        self.directed = bool(directed)
        if isinstance(nodes, Mapping):
            self._nodes = {u: MappingProxyType(dict(a or {})) for u, a in nodes.items()}
        else:
            self._nodes = {u: MappingProxyType({}) for u in nodes}
        items = edges.items() if isinstance(edges, Mapping) else (((u, v), w) for u, v, w in edges)
        agg: dict[tuple[Node, Node], int] = {}
        for (u, v), w in items:
            if u not in self._nodes or v not in self._nodes:
                raise ValueError(f"edge ({u!r}, {v!r}) references an undeclared node")
            if int(w) != w or w < 1:
                raise ValueError(f"edge ({u!r}, {v!r}) weight must be a positive integer, got {w!r}")
            if not self.directed and sort_key(v) < sort_key(u):
                u, v = v, u
            agg[(u, v)] = agg.get((u, v), 0) + int(w)
        self._edges = agg
        self._succ: dict[Node, dict[Node, int]] = {u: {} for u in self._nodes}
        self._pred: dict[Node, dict[Node, int]] = self._succ if not self.directed else {u: {} for u in self._nodes}
        for (u, v), w in agg.items():
            self._succ[u][v] = w
            self._pred[v][u] = w

    # -- basic queries -------------------------------------------------------

    @property
    def nodes(self) -> tuple[Node, ...]:
        return tuple(self._nodes)

    @property
    def edges(self) -> Mapping[tuple[Node, Node], int]:
        return MappingProxyType(self._edges)

    def __len__(self) -> int:
        return len(self._nodes)

    def __contains__(self, node: object) -> bool:
        return node in self._nodes

    def __iter__(self) -> Iterator[Node]:
        return iter(self._nodes)

    def __repr__(self) -> str:
        kind = "directed" if self.directed else "undirected"
        return f"<AttributedGraph {kind} n={len(self._nodes)} m={len(self._edges)}>"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AttributedGraph):
            return NotImplemented
        return (
            self.directed == other.directed
            and {u: dict(a) for u, a in self._nodes.items()} == {u: dict(a) for u, a in other._nodes.items()}
            and self._edges == other._edges
        )

    __hash__ = None  # type: ignore[assignment]

    def attrs(self, node: Node) -> Mapping[str, Any]:
        return self._nodes[node]

    def node_items(self) -> Iterator[tuple[Node, Mapping[str, Any]]]:
        return iter(self._nodes.items())

    def number_of_edges(self) -> int:
        return len(self._edges)

    def total_weight(self) -> int:
        return sum(self._edges.values())

    def has_edge(self, u: Node, v: Node) -> bool:
        return v in self._succ.get(u, ())

    def weight(self, u: Node, v: Node) -> int:
        return self._succ[u].get(v, 0)

    def successors(self, u: Node) -> Mapping[Node, int]:
        """Out-neighbours with weights (all neighbours when undirected)."""
        return self._succ[u]

    def predecessors(self, u: Node) -> Mapping[Node, int]:
        return self._pred[u]

    def sorted_nodes(self) -> list[Node]:
        return sorted(self._nodes, key=sort_key)

    def edge_triples(self) -> list[tuple[Node, Node, int]]:
        return sorted(((u, v, w) for (u, v), w in self._edges.items()), key=lambda t: (sort_key(t[0]), sort_key(t[1])))

    def self_loops(self) -> int:
        return sum(1 for u, v in self._edges if u == v)

    def content_hash(self) -> str:
        """SHA-256 over the canonically sorted node list and (u, v, w) triples."""
        h = hashlib.sha256()
        h.update(b"directed\n" if self.directed else b"undirected\n")
        for u in self.sorted_nodes():
            h.update(f"n\t{u!r}\n".encode())
        for u, v, w in self.edge_triples():
            h.update(f"e\t{u!r}\t{v!r}\t{w}\n".encode())
        return h.hexdigest()

    def simple_neighbors(self) -> dict[Node, set[Node]]:
        """Undirected, loop-free, unweighted adjacency sets."""
        adj: dict[Node, set[Node]] = {u: set() for u in self._nodes}
        for u, v in self._edges:
            if u != v:
                adj[u].add(v)
                adj[v].add(u)
        return adj

    def induced_subgraph(self, keep: Iterable[Node]) -> "AttributedGraph":
        keep_set = {u for u in keep if u in self._nodes}
        nodes = {u: a for u, a in self._nodes.items() if u in keep_set}
        edges = {(u, v): w for (u, v), w in self._edges.items() if u in keep_set and v in keep_set}
        return AttributedGraph(self.directed, nodes, edges)


# -- dyad indexing -----------------------------------------------------------


def dyad_pairs(k: np.ndarray, n: int, directed: bool) -> tuple[np.ndarray, np.ndarray]:
    """Map linear dyad indices to node index pairs (ordered i != j, or i < j)."""
    k = np.asarray(k, dtype=np.int64)
    if directed:
        i = k // max(n - 1, 1)
        j = k % max(n - 1, 1)
        return i, j + (j >= i)
    r = np.arange(n, dtype=np.int64)
    starts = r * n - r * (r + 1) // 2
    i = np.searchsorted(starts, k, side="right") - 1
    return i, k - starts[i] + i + 1


def dyad_index(i: np.ndarray, j: np.ndarray, n: int, directed: bool) -> np.ndarray:
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    if directed:
        return i * (n - 1) + j - (j > i)
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    return lo * n - lo * (lo + 1) // 2 + (hi - lo - 1)


def n_dyads(n: int, directed: bool) -> int:
    return n * (n - 1) if directed else n * (n - 1) // 2



# -- builders ----------------------------------------------------------------


def org_attributes(rec: OrgRecord) -> dict[str, Any]:
    attrs: dict[str, Any] = {
        "country": rec.country,
        "region": rec.region,
        "city": rec.city,
        "founded_month": rec.founded_month,
    }
    if rec.primary_category is not None:
        attrs["category"] = rec.primary_category
    if rec.primary_category_group is not None:
        attrs["category_group"] = rec.primary_category_group
    return attrs


def _lookup(orgs: Mapping[str, OrgRecord], oid: str) -> OrgRecord:
    try:
        return orgs[oid]
    except KeyError:
        raise DataError(f"event references unknown organization {oid!r}") from None


def build_acquisition(orgs: Mapping[str, OrgRecord], events: Iterable[AcquisitionEvent]) -> AttributedGraph:
    """Directed company network: an edge acquirer -> acquiree, weight = number of events."""
    nodes: dict[str, dict[str, Any]] = {}
    edges: dict[tuple[str, str], int] = defaultdict(int)
    for e in events:
        for oid in (e.acquirer_id, e.acquiree_id):
            if oid not in nodes:
                nodes[oid] = org_attributes(_lookup(orgs, oid))
        edges[(e.acquirer_id, e.acquiree_id)] += 1
    return AttributedGraph(True, nodes, edges)


def _co_occurrence(groups: Mapping[str, set[str]], members: Iterable[str], orgs) -> AttributedGraph:
    nodes = {m: (org_attributes(_lookup(orgs, m)) if orgs is not None else {}) for m in members}
    edges: dict[tuple[str, str], int] = defaultdict(int)
    for key in sorted(groups):
        for x, y in combinations(sorted(groups[key]), 2):
            edges[(x, y)] += 1
    return AttributedGraph(False, nodes, edges)


def build_common_acquirer(
    events: Iterable[AcquisitionEvent], orgs: Mapping[str, OrgRecord] | None = None
) -> AttributedGraph:
    """Undirected projection onto acquirees; weight(x, y) = number of shared acquirers.

    ``orgs`` is optional and only used to attach node attributes.
    """
    by_acquirer: dict[str, set[str]] = defaultdict(set)
    acquirees: dict[str, None] = {}
    for e in events:
        by_acquirer[e.acquirer_id].add(e.acquiree_id)
        acquirees.setdefault(e.acquiree_id)
    return _co_occurrence(by_acquirer, acquirees, orgs)


def build_common_acquiree(
    events: Iterable[AcquisitionEvent], orgs: Mapping[str, OrgRecord] | None = None
) -> AttributedGraph:
    """Undirected projection onto acquirers; weight(x, y) = number of shared acquirees."""
    by_acquiree: dict[str, set[str]] = defaultdict(set)
    acquirers: dict[str, None] = {}
    for e in events:
        by_acquiree[e.acquiree_id].add(e.acquirer_id)
        acquirers.setdefault(e.acquirer_id)
    return _co_occurrence(by_acquiree, acquirers, orgs)


def city_key(rec: OrgRecord) -> str:
    # Region and country disambiguate homonymous cities.
    return f"{rec.city}, {rec.region}, {rec.country}"


def _geo_network(orgs, events, key_fn, attr_fn) -> AttributedGraph:
    nodes: dict[str, dict[str, Any]] = {}
    edges: dict[tuple[str, str], int] = defaultdict(int)
    for e in events:
        src, dst = _lookup(orgs, e.acquirer_id), _lookup(orgs, e.acquiree_id)
        ks, kd = key_fn(src), key_fn(dst)
        nodes.setdefault(ks, attr_fn(src))
        nodes.setdefault(kd, attr_fn(dst))
        edges[(ks, kd)] += 1
    return AttributedGraph(True, nodes, edges)


def build_cross_city(orgs: Mapping[str, OrgRecord], events: Iterable[AcquisitionEvent]) -> AttributedGraph:
    """Directed city network keyed by (city, region, country); same-city deals become self-loops."""
    return _geo_network(
        orgs, events, city_key, lambda r: {"city": r.city, "region": r.region, "country": r.country}
    )


def build_cross_border(orgs: Mapping[str, OrgRecord], events: Iterable[AcquisitionEvent]) -> AttributedGraph:
    """Directed country network; domestic deals become self-loops."""
    return _geo_network(orgs, events, lambda r: r.country, lambda r: {"country": r.country})


def build_network(
    kind: NetworkKind | str, orgs: Mapping[str, OrgRecord], events: Iterable[AcquisitionEvent]
) -> AttributedGraph:
    kind = NetworkKind(kind)
    if kind is NetworkKind.ACQUISITION:
        return build_acquisition(orgs, events)
    if kind is NetworkKind.COMMON_ACQUIRER:
        return build_common_acquirer(events, orgs)
    if kind is NetworkKind.COMMON_ACQUIREE:
        return build_common_acquiree(events, orgs)
    if kind is NetworkKind.CROSS_CITY:
        return build_cross_city(orgs, events)
    return build_cross_border(orgs, events)


def undirected_view(g: AttributedGraph) -> AttributedGraph:
    """Collapse antiparallel edges (weights summed) and drop self-loops."""
    edges: dict[tuple[Node, Node], int] = defaultdict(int)
    for (u, v), w in g.edges.items():
        if u == v:
            continue
        if sort_key(v) < sort_key(u):
            u, v = v, u
        edges[(u, v)] += w
    return AttributedGraph(False, {u: a for u, a in g.node_items()}, edges)


def total_degree(g: AttributedGraph, u: Node) -> int:
    """Number of distinct non-loop edges at ``u`` (in + out when directed)."""
    if g.directed:
        return sum(1 for v in g.successors(u) if v != u) + sum(1 for v in g.predecessors(u) if v != u)
    return sum(1 for v in g.successors(u) if v != u)


def subgraph_top_degree(g: AttributedGraph, k: int) -> AttributedGraph:
    """Induced subgraph on the ``k`` nodes of largest total degree (ties by node key)."""
    if k < 0:
        raise ValueError("k must be non-negative")
    ranked = sorted(g.nodes, key=lambda u: (-total_degree(g, u), sort_key(u)))
    return g.induced_subgraph(ranked[:k])


# -- serialization -----------------------------------------------------------

_GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"


def _graphml_type(value: Any) -> str:
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, int):
        return "long"
    if isinstance(value, float):
        return "double"
    return "string"


def to_graphml(g: AttributedGraph) -> str:
    """GraphML document; integer attributes are typed ``long``, text ``string``.

    Node ids are written as ``str(key)``, so non-string keys come back as strings.
    """
    ET.register_namespace("", _GRAPHML_NS)
    root = ET.Element(f"{{{_GRAPHML_NS}}}graphml")
    attr_types: dict[str, str] = {}
    for _, attrs in g.node_items():
        for name, value in attrs.items():
            t = _graphml_type(value)
            if attr_types.setdefault(name, t) != t:
                attr_types[name] = "string"
    ids = {}
    for i, name in enumerate(sorted(attr_types)):
        ids[name] = f"d{i}"
        ET.SubElement(
            root,
            f"{{{_GRAPHML_NS}}}key",
            {"id": f"d{i}", "for": "node", "attr.name": name, "attr.type": attr_types[name]},
        )
    ET.SubElement(
        root, f"{{{_GRAPHML_NS}}}key", {"id": "weight", "for": "edge", "attr.name": "weight", "attr.type": "long"}
    )
    graph = ET.SubElement(
        root, f"{{{_GRAPHML_NS}}}graph", {"id": "G", "edgedefault": "directed" if g.directed else "undirected"}
    )
    for u in g.sorted_nodes():
        el = ET.SubElement(graph, f"{{{_GRAPHML_NS}}}node", {"id": str(u)})
        for name in sorted(g.attrs(u)):
            d = ET.SubElement(el, f"{{{_GRAPHML_NS}}}data", {"key": ids[name]})
            value = g.attrs(u)[name]
            d.text = str(value).lower() if isinstance(value, bool) else str(value)
    for u, v, w in g.edge_triples():
        el = ET.SubElement(graph, f"{{{_GRAPHML_NS}}}edge", {"source": str(u), "target": str(v)})
        ET.SubElement(el, f"{{{_GRAPHML_NS}}}data", {"key": "weight"}).text = str(w)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"


def _from_graphml_text(text: str | None, typ: str) -> Any:
    text = text or ""
    if typ in ("long", "int"):
        return int(text)
    if typ in ("double", "float"):
        return float(text)
    if typ == "boolean":
        return text.strip().lower() == "true"
    return text


def from_graphml(source: str | os.PathLike) -> AttributedGraph:
    """Read a GraphML file (or document string) written by :func:`to_graphml`."""
    if isinstance(source, str) and source.lstrip().startswith("<"):
        root = ET.fromstring(source)
    else:
        root = ET.parse(source).getroot()
    ns = {"g": _GRAPHML_NS}
    keys = {
        k.get("id"): (k.get("attr.name"), k.get("attr.type", "string"), k.get("for"))
        for k in root.findall("g:key", ns)
    }
    graph = root.find("g:graph", ns)
    if graph is None:
        raise DataError("GraphML document has no <graph> element")
    directed = graph.get("edgedefault", "directed") == "directed"
    nodes: dict[str, dict[str, Any]] = {}
    for el in graph.findall("g:node", ns):
        attrs = {}
        for d in el.findall("g:data", ns):
            name, typ, _ = keys[d.get("key")]
            attrs[name] = _from_graphml_text(d.text, typ)
        nodes[el.get("id")] = attrs
    edges: dict[tuple[str, str], int] = defaultdict(int)
    for el in graph.findall("g:edge", ns):
        w = 1
        for d in el.findall("g:data", ns):
            if keys[d.get("key")][0] == "weight":
                w = int(d.text)
        edges[(el.get("source"), el.get("target"))] += w
    return AttributedGraph(directed, nodes, edges)


def _dot_quote(value: Any) -> str:
    s = str(value).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{s}"'


def to_dot(g: AttributedGraph, node_colors: Mapping[Node, str] | None = None) -> str:
    """Graphviz DOT text with ``weight`` edge attributes and optional fill colours."""
    head = "digraph" if g.directed else "graph"
    arrow = "->" if g.directed else "--"
    lines = [f"{head} G {{"]
    for u in g.sorted_nodes():
        attrs = {k: g.attrs(u)[k] for k in sorted(g.attrs(u))}
        if node_colors and u in node_colors:
            attrs["style"] = "filled"
            attrs["fillcolor"] = node_colors[u]
        body = ", ".join(f"{k}={_dot_quote(v)}" for k, v in attrs.items())
        lines.append(f"  {_dot_quote(u)}" + (f" [{body}];" if body else ";"))
    for u, v, w in g.edge_triples():
        lines.append(f"  {_dot_quote(u)} {arrow} {_dot_quote(v)} [weight={w}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
