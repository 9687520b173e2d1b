from __future__ import annotations

from hypothesis import given
from hypothesis import strategies as st

import pytest

from _data import events, orgs
from acqgraph.errors import DataError
from acqgraph.graph import build_acquisition
from acqgraph.metrics import structure
from acqgraph.temporal import SERIES_COLUMNS, snapshot_series, series_export, series_parse

ORGS = orgs(*"ABCDEFGH")


def test_events_in_one_month_give_constant_series():
    s = snapshot_series(ORGS, events(("A", "B", 10), ("B", "C", 10)), 10, 14)
    assert len({(p.density, p.n_edges, p.n_wcc) for p in s.points}) == 1
    assert s.months == list(range(10, 15))


def test_disjoint_pairs_in_consecutive_months_split_components():
    s = snapshot_series(ORGS, events(("A", "B", 20), ("C", "D", 21)), 20, 21)
    assert [p.n_wcc for p in s.points] == [1, 2]


def test_final_snapshot_equals_whole_dataset_structure():
    ev = events(("A", "B", 1), ("B", "C", 3), ("D", "E", 3), ("E", "A", 7), ("F", "G", 9))
    s = snapshot_series(ORGS, ev, 0, 9)
    rec = structure(build_acquisition(ORGS, ev))
    last = s.points[-1]
    assert (last.density, last.avg_clustering, last.avg_shortest_path, last.n_wcc) == (
        rec.density,
        rec.avg_clustering,
        rec.avg_shortest_path,
        rec.n_wcc,
    )


def test_sliding_window_drops_old_events():
    ev = events(("A", "B", 1), ("C", "D", 2))
    s = snapshot_series(ORGS, ev, 1, 3, window=1)
    assert [p.n_edges for p in s.points] == [1, 1, 0]
    assert s.points[2].density is None


def test_empty_stream_has_null_points_and_a_note():
    s = snapshot_series(ORGS, [], 5, 6)
    assert all(p.n_nodes == 0 and p.density is None for p in s.points)
    assert s.notes


def test_invalid_ranges_are_rejected():
    with pytest.raises(ValueError):
        snapshot_series(ORGS, [], 6, 5)
    with pytest.raises(ValueError):
        snapshot_series(ORGS, [], 5, 6, window=0)
    with pytest.raises(DataError):
        snapshot_series(ORGS, events(("A", "ghost", 5)), 5, 5)


def test_sampled_path_length_marks_series_approximate():
    s = snapshot_series(ORGS, events(("A", "B", 1), ("B", "C", 1)), 1, 1, aspl_sample=2)
    assert s.approximate and any("approximated" in n for n in s.notes)


def test_export_shape_and_null_cells():
    s = snapshot_series(ORGS, events(("A", "B", 2400)), 2399, 2400)
    lines = series_export(s).splitlines()
    assert lines[0] == ",".join(SERIES_COLUMNS)
    assert len(lines) == 3
    assert lines[1].startswith("1999-12,,")
    assert lines[2].startswith("2000-01,0.5,")


def test_export_round_trip():
    ev = events(("A", "B", 1), ("B", "C", 2), ("C", "A", 2), ("D", "E", 4))
    s = snapshot_series(ORGS, ev, 0, 5)
    assert series_parse(series_export(s)).points == s.points
    with pytest.raises(DataError):
        series_parse("month,density\n")


def test_thread_count_does_not_change_series():
    ev = events(*[(a, b, m) for m, (a, b) in enumerate(zip("ABCDEFG", "BCDEFGH"))])
    assert snapshot_series(ORGS, ev, 0, 8, workers=1).points == snapshot_series(ORGS, ev, 0, 8, workers=3).points


_stream = st.lists(
    st.tuples(st.sampled_from("ABCDEFGH"), st.sampled_from("ABCDEFGH"), st.integers(0, 12)).filter(
        lambda t: t[0] != t[1]
    ),
    max_size=20,
)


@given(_stream)
def test_cumulative_series_grows_monotonically(pairs):
    s = snapshot_series(ORGS, events(*pairs), 0, 12)
    for a, b in zip(s.points, s.points[1:]):
        assert b.n_nodes >= a.n_nodes and b.n_edges >= a.n_edges
