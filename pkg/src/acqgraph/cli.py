"""``acqgraph`` command line.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure
(non-convergence or a degenerate spectrum). Diagnostics go to stderr.
Every subcommand writes its files plus one ``manifest.json`` into ``--out``.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

from acqgraph import __version__
from acqgraph._parallel import THREADS_ENV, default_workers
from acqgraph._seeds import derive_seed
from acqgraph.errors import ConvergenceError, DataError, DegenerateSpectrumError
from acqgraph.graph import NetworkKind, build_network, sort_key, subgraph_top_degree, to_dot, to_graphml
from acqgraph.ingest import ACQS_FILE, DESCS_FILE, ORGS_FILE, load_dataset, parse_month, write_tables

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
MANIFEST_FILE = "manifest.json"
INPUT_FILES = (ORGS_FILE, ACQS_FILE, DESCS_FILE)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        raise UsageError(f"{self.prog}: error: {message}")


# -- manifest ----------------------------------------------------------------


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class RunManifest:
    subcommand: str
    options: dict[str, Any]
    seeds: dict[str, int] = field(default_factory=dict)
    input_hashes: dict[str, str] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    tool_version: str = __version__
    started: str = field(default_factory=_now)
    finished: str | None = None

    def add_inputs(self, data_dir: str | os.PathLike) -> None:
        for name in INPUT_FILES:
            p = Path(data_dir) / name
            if p.exists():
                self.input_hashes[name] = _sha256(p)

    def write(self, out_dir: Path) -> None:
        self.finished = _now()
        body = {
            "tool_version": self.tool_version,
            "subcommand": self.subcommand,
            "options": self.options,
            "seeds": self.seeds,
            "input_hashes": self.input_hashes,
            "outputs": sorted(self.outputs),
            "started": self.started,
            "finished": self.finished,
        }
        (out_dir / MANIFEST_FILE).write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")


class _Out:
    """Output directory that records what it writes."""

    def __init__(self, path: str | os.PathLike, manifest: RunManifest):
        self.dir = Path(path)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.manifest = manifest

    def write(self, name: str, text: str) -> Path:
        p = self.dir / name
        p.write_text(text, encoding="utf-8")
        self.manifest.outputs.append(name)
        return p

    def json(self, name: str, obj: Any) -> Path:
        return self.write(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")


# -- helpers -----------------------------------------------------------------


def _load(args) -> tuple[dict, list]:
    orgs, events, _ = load_dataset(args.data, infer_categories=args.category_inference == "on")
    return orgs, events


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _num(v: Any) -> str:
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else str(v)


def _month_arg(text: str) -> int:
    m = parse_month(text)
    if m is None:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM, got {text!r}")
    return m


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _sampling(text: str | None) -> float | None:
    """``exact`` -> None; ``cc:RATIO`` -> RATIO."""
    if text is None or text == "exact":
        return None
    kind, sep, ratio = text.partition(":")
    try:
        value = float(ratio)
    except ValueError:
        value = -1.0
    if kind != "cc" or not sep or value <= 0:
        raise UsageError(f"--sampling expects exact or cc:RATIO with RATIO > 0, got {text!r}")
    return value


def _homophily(items: Sequence[str]) -> dict[str, float]:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--homophily expects ATTR=STRENGTH, got {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--homophily strength must be a number, got {value!r}") from None
    return out


# -- subcommands -------------------------------------------------------------


def cmd_ingest(args, out: _Out) -> None:
    orgs, events, report = load_dataset(args.data, infer_categories=args.category_inference == "on")
    out.manifest.add_inputs(args.data)
    write_tables(orgs, events, out.dir)
    out.manifest.outputs += list(INPUT_FILES)
    out.write("cleaning_report.json", report.to_json())
    print(
        f"kept {report.rows_out} of {report.rows_in} acquisitions and {report.orgs_out} organizations",
        file=sys.stderr,
    )


def cmd_synth(args, out: _Out) -> None:
    from acqgraph.synthgen import SynthConfig, generate

    base: dict[str, Any] = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read config {args.config}: {exc}") from None
    flags = {
        "n_orgs": args.n_orgs,
        "n_events": args.n_events,
        "n_countries": args.n_countries,
        "n_regions": args.n_regions,
        "n_cities": args.n_cities,
        "n_categories": args.n_categories,
        "n_category_groups": args.n_category_groups,
    }
    base.update({k: v for k, v in flags.items() if v is not None})
    if args.homophily:
        base["homophily"] = {**base.get("homophily", {}), **_homophily(args.homophily)}
    if args.founding_range:
        base["founding_range"] = args.founding_range
    for name in ("missing_dates", "bad_type", "duplicates", "self", "incomplete"):
        value = getattr(args, f"inject_{name}")
        if value:
            base[f"inject_{name}"] = value
    if args.seed_given or "seed" not in base:
        base["seed"] = derive_seed(args.seed, "synth")
    try:
        config = SynthConfig.from_dict(base)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid synth configuration: {exc}") from None
    data = generate(config)
    for name, text in data.tables().items():
        out.write(name, text)
    out.json(
        "synth_truth.json",
        {
            "config": config.to_dict(),
            "truth": data.truth,
            "expected_removals": data.expected_removals,
            "n_events": len(data.events),
        },
    )
    out.manifest.seeds["synth"] = config.seed


def cmd_analyze(args, out: _Out) -> None:
    from acqgraph.report import OPTIONAL_SECTIONS, AnalysisOptions, analyze, render

    sections = tuple(_csv_list(args.with_)) if args.with_ is not None else OPTIONAL_SECTIONS
    try:
        opts = AnalysisOptions(
            sections=sections,
            top_k=args.top_k,
            baseline_samples=args.baseline_samples,
            resolution=args.resolution,
            ergm_terms=args.terms,
            ergm_case_control=_sampling(args.sampling),
            seed=args.seed,
            workers=args.threads,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    orgs, events = _load(args)
    out.manifest.add_inputs(args.data)
    bundle = analyze(args.network, orgs, events, opts)
    ext = {"json": "json", "csv": "csv", "markdown": "md"}[args.format]
    out.write(f"analysis.{ext}", render(bundle, args.format))
    out.manifest.seeds.update({k: derive_seed(args.seed, k) for k in ("baseline", "communities", "ergm")})
    for section, message in sorted(bundle.errors.items()):
        print(f"warning: {section}: {message}", file=sys.stderr)


def cmd_metrics(args, out: _Out) -> None:
    from acqgraph.metrics import assortativity_table, structure

    orgs, events = _load(args)
    out.manifest.add_inputs(args.data)
    g = build_network(args.network, orgs, events)
    rec = structure(g, workers=args.threads).to_dict()
    out.json(
        "metrics.json",
        {"graph_hash": g.content_hash(), "structure": rec, "assortativity": assortativity_table(g)},
    )


def cmd_centrality(args, out: _Out) -> None:
    from acqgraph.centrality import Metric, compute, rank_table

    names = [n for item in (args.metric or []) for n in _csv_list(item)]
    try:
        metrics = [Metric(n) for n in names] if names else list(Metric)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    orgs, events = _load(args)
    out.manifest.add_inputs(args.data)
    g = build_network(args.network, orgs, events)
    vectors = [
        compute(g, m, alpha=args.alpha, tolerance=args.tol, max_iterations=args.max_iter, workers=args.threads)
        for m in metrics
    ]
    nodes = g.sorted_nodes()
    out.write(
        "centrality.csv",
        _csv(["node"] + [m.value for m in metrics], ([u] + [_num(v.values[u]) for v in vectors] for u in nodes)),
    )
    ranked = rank_table(vectors, args.top)
    out.write("ranked.csv", _csv(["node", "metric", "value", "rank"], ([r.node, r.metric, _num(r.value), r.rank] for r in ranked)))
    out.json(
        "ranked.json",
        {
            "graph_hash": g.content_hash(),
            "rows": [{"node": r.node, "metric": r.metric, "value": r.value, "rank": r.rank} for r in ranked],
        },
    )


def cmd_communities(args, out: _Out) -> None:
    from acqgraph.community import community_summary, louvain

    orgs, events = _load(args)
    out.manifest.add_inputs(args.data)
    g = build_network(args.network, orgs, events)
    seed = derive_seed(args.seed, "communities")
    out.manifest.seeds["communities"] = seed
    part = louvain(g, resolution=args.resolution, seed=seed)
    out.write("partition.csv", _csv(["node", "community"], sorted(part.assignment.items(), key=lambda kv: sort_key(kv[0]))))
    attrs = [a for a in ("category", "region", "country") if all(a in g.attrs(u) for u in g)]
    out.json(
        "communities.json",
        {
            "graph_hash": g.content_hash(),
            "modularity": part.modularity,
            "pass_modularity": part.pass_modularity,
            "n_communities": part.n_communities,
            "summary": community_summary(g, part, attrs)[: args.top_k],
        },
    )


def cmd_baseline(args, out: _Out) -> None:
    from acqgraph.baseline import compare

    orgs, events = _load(args)
    out.manifest.add_inputs(args.data)
    g = build_network(args.network, orgs, events)
    seed = derive_seed(args.seed, "baseline")
    out.manifest.seeds["baseline"] = seed
    cmp = compare(g, n_samples=args.samples, seed=seed, workers=args.threads)
    out.json("baseline.json", {"graph_hash": g.content_hash(), **cmp.to_dict()})


def cmd_ergm(args, out: _Out) -> None:
    from acqgraph import ergm

    orgs, events = _load(args)
    out.manifest.add_inputs(args.data)
    g = build_network(args.network, orgs, events)
    sampling: Any = "exact"
    ratio = _sampling(args.sampling)
    if ratio is not None:
        seed = derive_seed(args.seed, "ergm")
        out.manifest.seeds["ergm"] = seed
        sampling = ergm.CaseControl(ratio, seed)
    try:
        terms = ergm.parse_terms(args.terms)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    design = ergm.build_design(g, terms, sampling)
    result = ergm.fit(design, tolerance=args.tolerance, max_iterations=args.max_iterations)
    out.json("ergm.json", {"graph_hash": g.content_hash(), **ergm.summarize(result, design)})


def cmd_temporal(args, out: _Out) -> None:
    from acqgraph.temporal import series_export, snapshot_series

    orgs, events = _load(args)
    out.manifest.add_inputs(args.data)
    if args.from_ is None or args.to is None:
        months = [e.date_month for e in events]
        if not months:
            raise DataError("no events to derive the month range from; pass --from and --to")
    start = args.from_ if args.from_ is not None else min(months)
    end = args.to if args.to is not None else max(months)
    if start > end:
        raise UsageError("--from must not be after --to")
    series = snapshot_series(
        orgs, events, start, end, window=args.window, workers=args.threads, aspl_sample=args.aspl_sample, seed=args.seed
    )
    out.write("series.csv", series_export(series))
    if series.approximate or series.notes:
        out.json("series_notes.json", {"approximate": series.approximate, "notes": series.notes})


def cmd_export(args, out: _Out) -> None:
    orgs, events = _load(args)
    out.manifest.add_inputs(args.data)
    g = build_network(args.network, orgs, events)
    if args.top_degree is not None:
        g = subgraph_top_degree(g, args.top_degree)
    stem = args.network
    if args.format == "graphml":
        out.write(f"{stem}.graphml", to_graphml(g))
    else:
        colors = None
        if args.color_by_community and g.number_of_edges():
            from acqgraph.community import louvain

            palette = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
            part = louvain(g, seed=derive_seed(args.seed, "communities"))
            colors = {u: palette[c % len(palette)] for u, c in part.assignment.items()}
        out.write(f"{stem}.dot", to_dot(g, colors))


# -- parser ------------------------------------------------------------------


def _global_options(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--threads", type=int, default=d, help=f"worker threads (default: ${THREADS_ENV} or all cores)")
    p.add_argument("--seed", type=int, default=d, help="root seed for every stochastic step (default 0)")


def _data_options(p: argparse.ArgumentParser, network: bool = True) -> None:
    p.add_argument("--data", required=True, help="directory with organizations/acquisitions/descriptions CSVs")
    p.add_argument(
        "--category-inference",
        choices=("on", "off"),
        default="on",
        help="infer primary categories from descriptions (off: use the primary_* columns)",
    )
    if network:
        p.add_argument("--network", choices=[k.value for k in NetworkKind], default=NetworkKind.ACQUISITION.value)
    p.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="acqgraph", description="Acquisition-network analytics.")
    parser.add_argument("--version", action="version", version=f"acqgraph {__version__}")
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def add(name: str, fn: Callable, help_text: str, network: bool = True, data: bool = True) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text)
        _global_options(p, suppress=True)
        if data:
            _data_options(p, network)
        p.set_defaults(func=fn)
        return p

    add("ingest", cmd_ingest, "clean raw tables and write them back with primary categories", network=False)

    p = add("synth", cmd_synth, "generate a synthetic dataset", data=False)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="JSON file with SynthConfig fields; flags override it")
    for flag in ("n-orgs", "n-events", "n-countries", "n-regions", "n-cities", "n-categories", "n-category-groups"):
        p.add_argument(f"--{flag}", type=int)
    p.add_argument("--homophily", nargs="*", default=[], metavar="ATTR=STRENGTH")
    p.add_argument("--founding-range", nargs=2, metavar=("FROM", "TO"))
    for name in ("missing-dates", "bad-type", "duplicates", "self", "incomplete"):
        p.add_argument(f"--inject-{name}", type=int, default=0, help="number of defect rows to plant")

    p = add("analyze", cmd_analyze, "run the configured analyses on one network")
    p.add_argument(
        "--with",
        dest="with_",
        help="comma list of centrality,assortativity,communities,baseline,ergm (default: all)",
    )
    p.add_argument("--format", choices=("json", "csv", "markdown"), default="json")
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--baseline-samples", type=int, default=10)
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--terms", help="ERGM terms, e.g. edges,match:country,absdiff:founded_month")
    p.add_argument("--sampling", default="exact", help="ERGM dyads: exact or cc:RATIO (case-control)")

    add("metrics", cmd_metrics, "structure metrics and assortativity")

    p = add("centrality", cmd_centrality, "centrality vectors for every node")
    p.add_argument("--metric", action="append", help="metric name; repeatable or comma list (default: all)")
    p.add_argument("--alpha", type=float, default=0.85, help="PageRank damping")
    p.add_argument("--tol", type=float, help="iteration tolerance for spectral metrics")
    p.add_argument("--max-iter", type=int, help="iteration cap for spectral metrics")
    p.add_argument("--top", type=int, default=10, help="rows per metric in the ranked output")

    p = add("communities", cmd_communities, "Louvain partition and community summary")
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--top-k", type=int, default=10)

    p = add("baseline", cmd_baseline, "compare with matched Erdős–Rényi graphs")
    p.add_argument("--samples", type=int, default=10)

    p = add("ergm", cmd_ergm, "fit a dyad-independent ERGM")
    p.add_argument("--terms", default=None, help="comma list of edges, match:ATTR, absdiff:ATTR")
    p.add_argument("--sampling", default="exact", help="exact or cc:RATIO (case-control)")
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.add_argument("--max-iterations", type=int, default=100)

    p = add("temporal", cmd_temporal, "monthly snapshot metrics of the acquisition network", network=False)
    p.add_argument("--from", dest="from_", type=_month_arg)
    p.add_argument("--to", type=_month_arg)
    p.add_argument("--window", type=int, help="sliding window in months (default: cumulative)")
    p.add_argument("--aspl-sample", type=int, help="approximate path length from this many sources")

    p = add("export", cmd_export, "write a network as GraphML or DOT")
    p.add_argument("--format", choices=("graphml", "dot"), default="graphml")
    p.add_argument("--top-degree", type=int, help="keep only the K nodes of largest degree")
    p.add_argument("--color-by-community", action="store_true")
    return parser


def _resolve(args: argparse.Namespace) -> dict[str, Any]:
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 0
    if args.threads is None:
        args.threads = default_workers()
    if args.threads < 1:
        raise UsageError("--threads must be at least 1")
    if args.command == "ergm" and args.terms is None:
        from acqgraph.ergm import DEFAULT_TERMS

        args.terms = DEFAULT_TERMS
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "seed_given")}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        options = _resolve(args)
        manifest = RunManifest(args.command, options, seeds={"root": args.seed})
        out = _Out(args.out, manifest)
        args.func(args, out)
        manifest.write(out.dir)
        return EXIT_OK
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConvergenceError, DegenerateSpectrumError) as exc:
        term = getattr(exc, "term", None)
        print(f"numerical error: {exc}" + (f" (term: {term})" if term else ""), file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
