"""Monthly snapshots of the acquisition network.

The snapshot at month ``t`` holds every event dated at or before ``t``
(cumulative mode) or, with ``window=w``, the events in ``(t - w, t]``.
"""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Mapping

from acqgraph._parallel import ordered_map
from acqgraph.errors import DataError
from acqgraph.graph import AttributedGraph, org_attributes
from acqgraph.ingest import AcquisitionEvent, OrgRecord, month_label, parse_month
from acqgraph.metrics import avg_clustering, avg_shortest_path, defined, density, weak_components

SERIES_COLUMNS = ("month", "density", "avg_clustering", "avg_shortest_path", "n_wcc", "n_nodes", "n_edges")


@dataclass(frozen=True)
class SnapshotPoint:
    month: int
    density: float | None
    avg_clustering: float | None
    avg_shortest_path: float | None
    n_wcc: int
    n_nodes: int
    n_edges: int


@dataclass
class SnapshotSeries:
    start_month: int
    points: list[SnapshotPoint]
    window: int | None = None
    aspl_sample: int | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def approximate(self) -> bool:
        return self.aspl_sample is not None

    @property
    def months(self) -> list[int]:
        return [p.month for p in self.points]


def snapshot_metrics(
    g: AttributedGraph, month: int, aspl_sample: int | None = None, seed: int = 0
) -> SnapshotPoint:
    return SnapshotPoint(
        month=month,
        density=defined(density, g),
        avg_clustering=defined(avg_clustering, g),
        avg_shortest_path=defined(avg_shortest_path, g, sample=aspl_sample, seed=seed),
        n_wcc=len(weak_components(g)),
        n_nodes=len(g),
        n_edges=g.number_of_edges(),
    )


def _graph_at(
    orgs: Mapping[str, OrgRecord], by_month: Mapping[int, list[AcquisitionEvent]], lo: int, hi: int
) -> AttributedGraph:
    nodes: dict[str, dict[str, Any]] = {}
    edges: dict[tuple[str, str], int] = defaultdict(int)
    for m in sorted(k for k in by_month if lo <= k <= hi):
        for e in by_month[m]:
            for oid in (e.acquirer_id, e.acquiree_id):
                if oid not in nodes:
                    if oid not in orgs:
                        raise DataError(f"event references unknown organization {oid!r}")
                    nodes[oid] = org_attributes(orgs[oid])
            edges[(e.acquirer_id, e.acquiree_id)] += 1
    return AttributedGraph(True, nodes, edges)


def snapshot_series(
    orgs: Mapping[str, OrgRecord],
    events: Iterable[AcquisitionEvent],
    start_month: int,
    end_month: int,
    window: int | None = None,
    workers: int = 1,
    aspl_sample: int | None = None,
    seed: int = 0,
) -> SnapshotSeries:
    """Structure metrics for every month in ``[start_month, end_month]``.

    Months in which the snapshot's event set does not change reuse the previous
    point; every other month is rebuilt from its events and measured afresh.
    ``aspl_sample`` switches the path length to a seeded source sample and
    marks the series approximate.
    """
    if start_month > end_month:
        raise ValueError(f"start month {month_label(start_month)} is after end month {month_label(end_month)}")
    if window is not None and window < 1:
        raise ValueError("window must be at least one month")
    by_month: dict[int, list[AcquisitionEvent]] = defaultdict(list)
    for e in events:
        by_month[e.date_month].append(e)
    first_event = min(by_month, default=None)

    months = list(range(start_month, end_month + 1))

    def bounds(t: int) -> tuple[int, int]:
        lo = -(1 << 62) if window is None else t - window + 1
        return lo, t

    # Distinct event sets only need one measurement each.
    def key(t: int) -> tuple[int, ...]:
        lo, hi = bounds(t)
        return tuple(m for m in sorted(by_month) if lo <= m <= hi)

    keys = [key(t) for t in months]
    distinct: dict[tuple[int, ...], int] = {}
    for t, k in zip(months, keys):
        distinct.setdefault(k, t)

    def measure(t: int) -> SnapshotPoint:
        lo, hi = bounds(t)
        return snapshot_metrics(_graph_at(orgs, by_month, lo, hi), t, aspl_sample, seed)

    reps = list(distinct.values())
    measured = dict(zip(reps, ordered_map(measure, reps, workers)))
    points = []
    for t, k in zip(months, keys):
        p = measured[distinct[k]]
        points.append(p if p.month == t else SnapshotPoint(t, *list(asdict(p).values())[1:]))

    notes = []
    if first_event is None or first_event > end_month:
        notes.append("no events at or before the end month; every snapshot is empty")
    if aspl_sample is not None:
        notes.append(f"avg_shortest_path approximated from {aspl_sample} sampled sources")
    return SnapshotSeries(start_month, points, window, aspl_sample, notes)


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def series_export(series: SnapshotSeries) -> str:
    """CSV text: one row per month, ``YYYY-MM`` month labels, empty cells for nulls."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SERIES_COLUMNS)
    for p in series.points:
        w.writerow([month_label(p.month)] + [_fmt(getattr(p, c)) for c in SERIES_COLUMNS[1:]])
    return buf.getvalue()


def series_parse(text: str) -> SnapshotSeries:
    """Inverse of :func:`series_export` (window and sampling metadata are not stored)."""
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != SERIES_COLUMNS:
        raise DataError(f"series header must be {','.join(SERIES_COLUMNS)}")
    points = []
    for row in reader:
        month = parse_month(row["month"])
        if month is None:
            raise DataError(f"bad month label {row['month']!r} on line {reader.line_num}")

        def opt(name: str) -> float | None:
            return float(row[name]) if row[name] != "" else None

        points.append(
            SnapshotPoint(
                month,
                opt("density"),
                opt("avg_clustering"),
                opt("avg_shortest_path"),
                int(row["n_wcc"]),
                int(row["n_nodes"]),
                int(row["n_edges"]),
            )
        )
    start = points[0].month if points else 0
    return SnapshotSeries(start, points)
