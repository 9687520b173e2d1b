"""Run the analyses on one network and render summary tables.

Every section of an :class:`AnalysisBundle` records the content hash of the
graph it was computed on, so a bundle can be checked for mixed inputs.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Sequence

from acqgraph import baseline as _baseline
from acqgraph import centrality as _centrality
from acqgraph import community as _community
from acqgraph import ergm as _ergm
from acqgraph._parallel import ordered_map
from acqgraph._seeds import derive_seed
from acqgraph.errors import AcqGraphError, DataError
from acqgraph.graph import AttributedGraph, NetworkKind, build_network
from acqgraph.ingest import AcquisitionEvent, OrgRecord
from acqgraph.metrics import assortativity_table, structure

SECTIONS = ("structure", "centrality", "assortativity", "communities", "baseline", "ergm")
OPTIONAL_SECTIONS = SECTIONS[1:]

STRUCTURE_LABELS = {
    "density": "Density",
    "transitivity": "Transitivity",
    "avg_clustering": "Average clustering coefficient",
    "avg_shortest_path": "Average shortest path length",
    "largest_wcc_size": "Largest weakly connected component size",
    "largest_scc_size": "Largest strongly connected component size",
    "n_wcc": "Number of weakly connected components",
}

_ERGM_TERMS_BY_KIND = {
    NetworkKind.CROSS_CITY: "edges,match:country,match:region",
    NetworkKind.CROSS_BORDER: "edges",
}
_COMMUNITY_ATTRS_BY_KIND = {
    NetworkKind.CROSS_CITY: ("region", "country"),
    NetworkKind.CROSS_BORDER: ("country",),
}


@dataclass(frozen=True)
class AnalysisOptions:
    sections: tuple[str, ...] = OPTIONAL_SECTIONS
    top_k: int = 10
    metrics: tuple[str, ...] = tuple(m.value for m in _centrality.Metric)
    baseline_samples: int = 10
    resolution: float = 1.0
    ergm_terms: str | None = None
    ergm_case_control: float | None = None
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        unknown = set(self.sections) - set(OPTIONAL_SECTIONS)
        if unknown:
            raise ValueError(f"unknown section(s): {', '.join(sorted(unknown))}")
        for m in self.metrics:
            _centrality.Metric(m)

    def to_dict(self) -> dict[str, Any]:
        return {
            "sections": list(self.sections),
            "top_k": self.top_k,
            "metrics": list(self.metrics),
            "baseline_samples": self.baseline_samples,
            "resolution": self.resolution,
            "ergm_terms": self.ergm_terms,
            "ergm_case_control": self.ergm_case_control,
            "seed": self.seed,
        }


@dataclass
class AnalysisBundle:
    network_kind: str
    graph_hash: str
    n_nodes: int
    n_edges: int
    structure: dict[str, Any] | None = None
    baseline: dict[str, Any] | None = None
    centralities: dict[str, Any] | None = None
    assortativity: dict[str, Any] | None = None
    communities: dict[str, Any] | None = None
    ergm: dict[str, Any] | None = None
    errors: dict[str, str] = field(default_factory=dict)

    SECTION_FIELDS = ("structure", "baseline", "centralities", "assortativity", "communities", "ergm")

    def to_dict(self) -> dict[str, Any]:
        d = {
            "network_kind": self.network_kind,
            "graph_hash": self.graph_hash,
            "n_nodes": self.n_nodes,
            "n_edges": self.n_edges,
            "errors": dict(sorted(self.errors.items())),
        }
        for name in self.SECTION_FIELDS:
            value = getattr(self, name)
            if value is not None:
                d[name] = value
        return d

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AnalysisBundle":
        bundle = cls(
            network_kind=data["network_kind"],
            graph_hash=data["graph_hash"],
            n_nodes=data["n_nodes"],
            n_edges=data["n_edges"],
            errors=dict(data.get("errors", {})),
            **{name: data.get(name) for name in cls.SECTION_FIELDS},
        )
        bundle.check_hashes()
        return bundle

    def check_hashes(self) -> None:
        for name in self.SECTION_FIELDS:
            sec = getattr(self, name)
            if sec is not None and sec.get("graph_hash") != self.graph_hash:
                raise DataError(f"section {name!r} was computed on a different graph")


# -- sections ----------------------------------------------------------------


def _structure_section(g: AttributedGraph, opts: AnalysisOptions) -> dict[str, Any]:
    rec = structure(g, workers=opts.workers).to_dict()
    rows = [
        {"property": label, "value": rec[key]}
        for key, label in STRUCTURE_LABELS.items()
        if not (key == "largest_scc_size" and rec[key] is None)
    ]
    if not g.directed:
        wcc = STRUCTURE_LABELS["largest_wcc_size"]
        for r in rows:
            if r["property"] == wcc:
                r["property"] = _baseline.UNDIRECTED_WCC_LABEL
    return {"record": rec, "rows": rows}


def _baseline_section(g: AttributedGraph, opts: AnalysisOptions) -> dict[str, Any]:
    cmp = _baseline.compare(
        g, n_samples=opts.baseline_samples, seed=derive_seed(opts.seed, "baseline"), workers=opts.workers
    )
    return cmp.to_dict()


def _centrality_section(g: AttributedGraph, opts: AnalysisOptions) -> dict[str, Any]:
    vectors = []
    failures = {}
    for m in opts.metrics:
        try:
            vectors.append(_centrality.compute(g, m, workers=opts.workers))
        except AcqGraphError as exc:
            failures[m] = str(exc)
    rows = [
        {
            "metric": r.metric,
            "label": _centrality.Metric(r.metric).label,
            "rank": r.rank,
            "node": r.node,
            "value": r.value,
        }
        for r in _centrality.rank_table(vectors, opts.top_k)
    ]
    return {"top_k": opts.top_k, "rows": rows, "failed": failures}


def _assortativity_section(g: AttributedGraph, opts: AnalysisOptions) -> dict[str, Any]:
    table = assortativity_table(g)
    return {"rows": [{"feature": k, "coefficient": v} for k, v in table.items()]}


def _communities_section(g: AttributedGraph, opts: AnalysisOptions, kind: NetworkKind) -> dict[str, Any]:
    part = _community.louvain(g, resolution=opts.resolution, seed=derive_seed(opts.seed, "communities"))
    attrs = _COMMUNITY_ATTRS_BY_KIND.get(kind, ("category", "region", "country"))
    summary = _community.community_summary(g, part, attrs)[: opts.top_k]
    return {
        "n_communities": part.n_communities,
        "modularity": part.modularity,
        "pass_modularity": part.pass_modularity,
        "resolution": opts.resolution,
        "rows": summary,
    }


def _ergm_section(g: AttributedGraph, opts: AnalysisOptions, kind: NetworkKind) -> dict[str, Any]:
    terms = opts.ergm_terms or _ERGM_TERMS_BY_KIND.get(kind, _ergm.DEFAULT_TERMS)
    sampling: Any = "exact"
    if opts.ergm_case_control is not None:
        sampling = _ergm.CaseControl(opts.ergm_case_control, derive_seed(opts.seed, "ergm"))
    design = _ergm.build_design(g, terms, sampling)
    return _ergm.summarize(_ergm.fit(design), design)


def _runner(name: str, g: AttributedGraph, opts: AnalysisOptions, kind: NetworkKind) -> Callable[[], dict]:
    table: dict[str, Callable[[], dict]] = {
        "structure": lambda: _structure_section(g, opts),
        "baseline": lambda: _baseline_section(g, opts),
        "centrality": lambda: _centrality_section(g, opts),
        "assortativity": lambda: _assortativity_section(g, opts),
        "communities": lambda: _communities_section(g, opts, kind),
        "ergm": lambda: _ergm_section(g, opts, kind),
    }
    return table[name]


_FIELD_OF = {"centrality": "centralities"}


def analyze_graph(g: AttributedGraph, kind: NetworkKind | str, options: AnalysisOptions | None = None) -> AnalysisBundle:
    opts = options or AnalysisOptions()
    kind = NetworkKind(kind)
    h = g.content_hash()
    bundle = AnalysisBundle(kind.value, h, len(g), g.number_of_edges())
    wanted = ["structure"] + [s for s in OPTIONAL_SECTIONS if s in opts.sections]

    # Sections run side by side; their inner loops stay sequential.
    inner = replace(opts, workers=1) if opts.workers > 1 else opts

    def run(name: str) -> tuple[dict | None, str | None]:
        try:
            return _runner(name, g, inner, kind)(), None
        except (AcqGraphError, ValueError) as exc:
            return None, f"{type(exc).__name__}: {exc}"

    for name, (result, err) in zip(wanted, ordered_map(run, wanted, opts.workers)):
        if err is not None:
            bundle.errors[name] = err
        else:
            setattr(bundle, _FIELD_OF.get(name, name), {"graph_hash": h, **_jsonable(result)})
    return bundle


def analyze(
    network_kind: NetworkKind | str,
    orgs: Mapping[str, OrgRecord],
    events: Sequence[AcquisitionEvent],
    options: AnalysisOptions | None = None,
) -> AnalysisBundle:
    """Build the requested network from cleaned data and run the configured sections.

    A failing section leaves its field empty and records the error message in
    ``bundle.errors``; the other sections are still returned.
    """
    return analyze_graph(build_network(network_kind, orgs, events), network_kind, options)


def _jsonable(value: Any) -> Any:
    """Plain JSON types: tuples become lists, numpy scalars become Python numbers."""
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return value.item()
    return value


# -- rendering ---------------------------------------------------------------


def render(bundle: AnalysisBundle, fmt: str = "json") -> str:
    if fmt == "json":
        return to_json(bundle)
    if fmt == "markdown":
        return to_markdown(bundle)
    if fmt == "csv":
        return to_csv(bundle)
    raise ValueError(f"unknown format {fmt!r}; expected json, csv or markdown")


def to_json(bundle: AnalysisBundle) -> str:
    return json.dumps(bundle.to_dict(), indent=2, sort_keys=True) + "\n"


def parse_json(text: str) -> AnalysisBundle:
    return AnalysisBundle.from_dict(json.loads(text))


def _cell(value: Any) -> str:
    if value is None:
        return "undefined"
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        if math.isinf(value) or math.isnan(value):
            return str(value)
        if value == int(value) and abs(value) < 1e15:
            return f"{value:.1f}"
        return f"{value:.4g}" if abs(value) < 1e-3 else f"{value:.4f}"
    return str(value)


def _md_table(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> list[str]:
    out = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    out += ["| " + " | ".join(_cell(v) for v in row) + " |" for row in rows]
    return out + [""]


def _tables(bundle: AnalysisBundle) -> list[tuple[str, list[str], list[list[Any]]]]:
    """(title, header, rows) for every populated section, in a fixed order."""
    tables = []
    if bundle.structure is not None:
        tables.append(
            ("Network structure", ["Property", "Value"], [[r["property"], r["value"]] for r in bundle.structure["rows"]])
        )
    if bundle.baseline is not None:
        tables.append(
            (
                "Comparison with Erdős–Rényi baseline",
                ["Property", "Network", "Baseline (mean)", "Baseline (first draw)"],
                [[r["property"], r["network"], r["baseline"], r["baseline_first_draw"]] for r in bundle.baseline["rows"]],
            )
        )
    if bundle.centralities is not None:
        tables.append(
            (
                "Central nodes",
                ["Metric", "Rank", "Node", "Value"],
                [[r["label"], r["rank"], r["node"], r["value"]] for r in bundle.centralities["rows"]],
            )
        )
    if bundle.assortativity is not None:
        tables.append(
            (
                "Assortativity coefficients",
                ["Feature", "Coefficient"],
                [[r["feature"], r["coefficient"]] for r in bundle.assortativity["rows"]],
            )
        )
    if bundle.communities is not None:
        rows = []
        for r in bundle.communities["rows"]:
            modal = "; ".join(f"{a}={m['value']} ({m['fraction']:.2f})" for a, m in r["modal"].items())
            rows.append([r["community"], r["size"], r["fraction"], modal])
        tables.append(("Communities", ["Community", "Size", "Fraction", "Modal attributes"], rows))
    if bundle.ergm is not None:
        tables.append(
            (
                "ERGM estimates",
                ["Term", "Estimate", "Std. error", "p", "Signif."],
                [[r["label"], r["estimate"], r["std_err"], r["p"], r["stars"]] for r in bundle.ergm["rows"]],
            )
        )
    return tables


def to_markdown(bundle: AnalysisBundle) -> str:
    lines = [
        f"# Analysis of the {bundle.network_kind} network",
        "",
        f"Nodes: {bundle.n_nodes}. Edges: {bundle.n_edges}. Graph hash: `{bundle.graph_hash}`.",
        "",
    ]
    for title, header, rows in _tables(bundle):
        lines += [f"## {title}", ""] + _md_table(header, rows)
    if bundle.communities is not None:
        lines += [f"Modularity: {_cell(bundle.communities['modularity'])}", ""]
    if bundle.ergm is not None:
        lines += [f"AIC: {_cell(bundle.ergm['aic'])}. Log-likelihood: {_cell(bundle.ergm['log_likelihood'])}.", ""]
    if bundle.errors:
        lines += ["## Errors", ""] + [f"- {k}: {v}" for k, v in sorted(bundle.errors.items())] + [""]
    return "\n".join(lines)


def to_csv(bundle: AnalysisBundle) -> str:
    """Long format: one ``table,row,column,value`` line per cell (full float precision)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["table", "row", "column", "value"])
    for title, header, rows in _tables(bundle):
        for i, row in enumerate(rows):
            for col, value in zip(header, row):
                w.writerow([title, i, col, "undefined" if value is None else (repr(value) if isinstance(value, float) else value)])
    for k, v in sorted(bundle.errors.items()):
        w.writerow(["Errors", k, "message", v])
    return buf.getvalue()
