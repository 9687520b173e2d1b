from __future__ import annotations

import csv
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from acqgraph.errors import DataError
from acqgraph.ingest import (
    ACQ_COLUMNS,
    DESC_COLUMNS,
    ORG_COLUMNS,
    RULES,
    RawAcquisition,
    RawOrg,
    clean,
    join_list,
    load_dataset,
    month_index,
    month_label,
    parse_month,
    parse_tables,
    split_list,
    write_tables,
)

DEFECTS = Path(__file__).parent / "fixtures" / "defects"


def _write(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _dataset(tmp_path: Path, orgs, acqs, descs) -> Path:
    _write(tmp_path / "organizations.csv", ORG_COLUMNS, orgs)
    _write(tmp_path / "acquisitions.csv", ACQ_COLUMNS, acqs)
    _write(tmp_path / "descriptions.csv", DESC_COLUMNS, descs)
    return tmp_path


def _org(oid, city="Austin", cats="Software", groups="Software", founded="2005-03"):
    return (oid, f"Org {oid}", "USA", "Texas", city, cats, groups, founded)


def _raw_org(oid: str, **kw) -> RawOrg:
    base = dict(
        org_id=oid,
        name=oid,
        country="USA",
        region="Texas",
        city="Austin",
        category_list=("Software",),
        category_group_list=("Software",),
        founded_on="2001-01",
        description="software",
    )
    base.update(kw)
    return RawOrg(**base)


def _raw_acq(a: str, b: str, date: str = "2010-05-04", kind: str = "acquisition") -> RawAcquisition:
    return RawAcquisition(a, b, kind, date)


# -- months and lists --------------------------------------------------------


def test_month_index_round_trip():
    assert month_index(1800, 1) == 0
    assert month_label(month_index(2023, 7)) == "2023-07"
    assert parse_month("2010-02-28") == parse_month("2010-02") == month_index(2010, 2)


@pytest.mark.parametrize("text", ["", "   ", "2010", "2010-13", "abc", None])
def test_unusable_dates_parse_to_none(text):
    assert parse_month(text) is None


@given(st.integers(1800, 2200), st.integers(1, 12))
def test_month_label_inverts_index(year, month):
    idx = month_index(year, month)
    assert parse_month(month_label(idx)) == idx


def test_split_and_join_lists():
    assert split_list("Software, SaaS") == ["Software", "SaaS"]
    assert split_list("") == []
    assert split_list(join_list(["A", "B C"])) == ["A", "B C"]


# -- parse_tables ------------------------------------------------------------


def test_descriptions_are_left_joined(tmp_path):
    d = _dataset(
        tmp_path,
        [_org("a"), _org("b"), _org("c")],
        [],
        [("a", "alpha"), ("b", "beta")],
    )
    orgs, acqs = parse_tables(d / "organizations.csv", d / "acquisitions.csv", d / "descriptions.csv")
    assert [o.description for o in orgs] == ["alpha", "beta", ""]
    assert acqs == []


def test_quoted_list_field_becomes_two_items(tmp_path):
    d = _dataset(tmp_path, [_org("a", cats="Software, SaaS")], [], [("a", "x")])
    orgs, _ = parse_tables(d / "organizations.csv", d / "acquisitions.csv", d / "descriptions.csv")
    assert orgs[0].category_list == ("Software", "SaaS")


def test_duplicate_org_id_is_rejected(tmp_path):
    d = _dataset(tmp_path, [_org("a"), _org("a")], [], [])
    with pytest.raises(DataError, match="'a'"):
        parse_tables(d / "organizations.csv", d / "acquisitions.csv", d / "descriptions.csv")


def test_malformed_row_reports_line_number(tmp_path):
    d = _dataset(tmp_path, [_org("a")], [], [])
    with open(d / "acquisitions.csv", "a", encoding="utf-8") as fh:
        fh.write("a,b\n")
    with pytest.raises(DataError, match=":2"):
        parse_tables(d / "organizations.csv", d / "acquisitions.csv", d / "descriptions.csv")


def test_missing_file_is_a_data_error(tmp_path):
    with pytest.raises(DataError):
        load_dataset(tmp_path)


# -- clean -------------------------------------------------------------------


def test_defect_fixture_rule_attribution():
    orgs, events, report = load_dataset(DEFECTS)
    assert report.rows_in == 10
    assert report.rows_out == len(events) == 6
    assert report.removed_by_rule == {"date/type": 2, "dup": 1, "self-acquisition": 0, "incomplete-org": 1}
    assert "o8" not in orgs and "o9" not in orgs


def test_complete_unique_rows_are_all_kept():
    raw = [_raw_org(x) for x in "abc"]
    acqs = [_raw_acq("a", "b"), _raw_acq("b", "c"), _raw_acq("a", "c", "2011-01")]
    orgs, events, report = clean(raw, acqs)
    assert report.rows_out == report.rows_in == 3
    assert all(v == 0 for v in report.removed_by_rule.values())
    assert report.removal_fraction == 0.0


def test_same_month_different_day_collapses():
    raw = [_raw_org("a"), _raw_org("b")]
    _, events, report = clean(raw, [_raw_acq("a", "b", "2012-06-01"), _raw_acq("a", "b", "2012-06-29")])
    assert len(events) == 1
    assert report.removed_by_rule["dup"] == 1


def test_non_acquisition_type_is_dropped():
    raw = [_raw_org("a"), _raw_org("b")]
    _, events, report = clean(raw, [_raw_acq("a", "b", kind="merger")])
    assert events == [] and report.removed_by_rule["date/type"] == 1


def test_self_acquisition_is_dropped():
    _, events, report = clean([_raw_org("a")], [_raw_acq("a", "a")])
    assert events == [] and report.removed_by_rule["self-acquisition"] == 1


def test_unknown_org_counts_as_incomplete():
    _, events, report = clean([_raw_org("a")], [_raw_acq("a", "ghost")])
    assert events == [] and report.removed_by_rule["incomplete-org"] == 1


def test_first_matching_rule_wins():
    # dateless and self-referencing: attributed to the date rule only
    _, _, report = clean([_raw_org("a")], [_raw_acq("a", "a", date="")])
    assert report.removed_by_rule["date/type"] == 1
    assert report.removed_by_rule["self-acquisition"] == 0


_rows = st.lists(
    st.tuples(
        st.sampled_from("abcdx"),
        st.sampled_from("abcdx"),
        st.sampled_from(["2010-01-03", "2010-01-20", "2011-07", "", "2009"]),
        st.sampled_from(["acquisition", "acquisition", "merger"]),
    ),
    max_size=30,
)


@given(_rows)
def test_removal_counts_account_for_every_row(rows):
    raw_orgs = [_raw_org(x) for x in "abc"] + [_raw_org("d", city="")]
    acqs = [_raw_acq(a, b, date, kind) for a, b, date, kind in rows]
    orgs, events, report = clean(raw_orgs, acqs)
    assert report.rows_in == len(rows)
    assert report.rows_in == report.rows_out + sum(report.removed_by_rule.values())
    assert set(report.removed_by_rule) == set(RULES)
    keys = [(e.acquirer_id, e.acquiree_id, e.date_month) for e in events]
    assert len(keys) == len(set(keys))
    assert all(e.acquirer_id != e.acquiree_id for e in events)
    assert {e.acquirer_id for e in events} | {e.acquiree_id for e in events} <= set(orgs)


def test_cleaning_is_idempotent(tmp_path):
    orgs, events, _ = load_dataset(DEFECTS)
    write_tables(orgs, events, tmp_path)
    orgs2, events2, report2 = load_dataset(tmp_path)
    assert events2 == events
    assert orgs2 == orgs
    assert report2.rows_out == report2.rows_in
    assert sum(report2.removed_by_rule.values()) == 0


def test_inference_off_requires_primary_columns(tmp_path):
    orgs, events, _ = load_dataset(DEFECTS)
    write_tables(orgs, events, tmp_path)
    again, _, _ = load_dataset(tmp_path, infer_categories=False)
    assert again == orgs
    with pytest.raises(DataError, match="inference is off"):
        load_dataset(DEFECTS, infer_categories=False)
