"""Parsing and cleaning of the organizations / acquisitions / descriptions tables.

Dates are reduced to month resolution and encoded as a month index with
1800-01 as month 0, so ``index = year * 12 + (month - 1) - 1800 * 12``.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import os
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from acqgraph.errors import DataError

EPOCH_YEAR = 1800

ORG_COLUMNS = (
    "org_id",
    "name",
    "country",
    "region",
    "city",
    "category_list",
    "category_group_list",
    "founded_on",
)
OPTIONAL_ORG_COLUMNS = ("primary_category", "primary_category_group")
ACQ_COLUMNS = ("acquirer_id", "acquiree_id", "acquisition_type", "acquired_on")
DESC_COLUMNS = ("org_id", "description")

ORGS_FILE = "organizations.csv"
ACQS_FILE = "acquisitions.csv"
DESCS_FILE = "descriptions.csv"

RULE_DATE_TYPE = "date/type"
RULE_DUPLICATE = "dup"
RULE_SELF = "self-acquisition"
RULE_INCOMPLETE = "incomplete-org"
RULES = (RULE_DATE_TYPE, RULE_DUPLICATE, RULE_SELF, RULE_INCOMPLETE)


def month_index(year: int, month: int) -> int:
    """Encode a calendar month as an integer index (1800-01 is 0)."""
    if not 1 <= month <= 12:
        raise ValueError(f"month out of range: {month}")
    return year * 12 + (month - 1) - EPOCH_YEAR * 12


def month_label(index: int) -> str:
    """Inverse of :func:`month_index`, formatted as ``YYYY-MM``."""
    year, month0 = divmod(index + EPOCH_YEAR * 12, 12)
    return f"{year:04d}-{month0 + 1:02d}"


def parse_month(text: str | None) -> int | None:
    """Parse ``YYYY-MM`` or ``YYYY-MM-DD`` into a month index.

    Empty, unparseable and year-only values all yield ``None``.
    """
    if text is None:
        return None
    text = text.strip()
    parts = text.split("-")
    if len(parts) not in (2, 3) or not all(p.isdigit() for p in parts):
        return None
    if len(parts[0]) != 4 or len(parts[1]) != 2:
        return None
    year, month = int(parts[0]), int(parts[1])
    try:
        if len(parts) == 3:
            if len(parts[2]) != 2:
                return None
            _dt.date(year, month, int(parts[2]))
        return month_index(year, month)
    except ValueError:
        return None


def split_list(field_value: str) -> list[str]:
    """Split a comma-separated list field, dropping blanks."""
    return [tok.strip() for tok in field_value.split(",") if tok.strip()]


def join_list(items: Iterable[str]) -> str:
    return ",".join(items)


@dataclass(frozen=True)
class RawOrg:
    org_id: str
    name: str
    country: str
    region: str
    city: str
    category_list: tuple[str, ...]
    category_group_list: tuple[str, ...]
    founded_on: str
    description: str = ""
    primary_category: str | None = None
    primary_category_group: str | None = None
    line: int = 0


@dataclass(frozen=True)
class RawAcquisition:
    acquirer_id: str
    acquiree_id: str
    acquisition_type: str
    acquired_on: str
    line: int = 0


@dataclass(frozen=True)
class OrgRecord:
    org_id: str
    name: str
    country: str
    region: str
    city: str
    category_list: tuple[str, ...]
    category_group_list: tuple[str, ...]
    founded_month: int
    description: str
    primary_category: str | None = None
    primary_category_group: str | None = None


@dataclass(frozen=True, order=True)
class AcquisitionEvent:
    acquirer_id: str
    acquiree_id: str
    date_month: int
    acquisition_type: str = "acquisition"


@dataclass
class CleaningReport:
    """Per-rule removal counts over acquisition rows.

    ``rows_in == rows_out + sum(removed_by_rule.values())`` always holds because
    each removed row is attributed to the first rule that matches it.
    """

    rows_in: int
    rows_out: int
    removed_by_rule: dict[str, int]
    orgs_in: int = 0
    orgs_out: int = 0
    incomplete_orgs: int = 0

    @property
    def removal_fraction(self) -> float:
        if self.rows_in == 0:
            return 0.0
        return 1.0 - self.rows_out / self.rows_in

    def to_dict(self) -> dict:
        d = asdict(self)
        d["removal_fraction"] = self.removal_fraction
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _read_csv(path: str | os.PathLike, required: Sequence[str]) -> tuple[list[str], list[tuple[int, dict[str, str]]]]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: file not found")
    rows: list[tuple[int, dict[str, str]]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, strict=True)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, header row required") from None
        except csv.Error as exc:
            raise DataError(f"{path}:{reader.line_num}: malformed CSV ({exc})") from None
        header = [h.strip().lstrip("﻿") for h in header]
        missing = [c for c in required if c not in header]
        if missing:
            raise DataError(f"{path}: header lacks required column(s) {', '.join(missing)}")
        while True:
            try:
                values = next(reader)
            except StopIteration:
                break
            except csv.Error as exc:
                raise DataError(f"{path}:{reader.line_num}: malformed CSV ({exc})") from None
            if not values:
                continue
            if len(values) != len(header):
                raise DataError(
                    f"{path}:{reader.line_num}: expected {len(header)} fields, got {len(values)}"
                )
            rows.append((reader.line_num, dict(zip(header, values))))
    return header, rows


def parse_tables(
    org_path: str | os.PathLike,
    acq_path: str | os.PathLike,
    desc_path: str | os.PathLike,
) -> tuple[list[RawOrg], list[RawAcquisition]]:
    """Read the three input tables and left-join descriptions onto organizations.

    Rows are kept verbatim apart from splitting the two category list fields.

    Raises:
        DataError: on malformed rows (with line number), missing header
            columns, or duplicate ``org_id`` values.
    """
    org_header, org_rows = _read_csv(org_path, ORG_COLUMNS)
    _, acq_rows = _read_csv(acq_path, ACQ_COLUMNS)
    _, desc_rows = _read_csv(desc_path, DESC_COLUMNS)

    descriptions: dict[str, str] = {}
    for line, row in desc_rows:
        oid = row["org_id"]
        if oid in descriptions:
            raise DataError(f"{desc_path}:{line}: duplicate org_id {oid!r}")
        descriptions[oid] = row["description"]

    has_primary = {c: c in org_header for c in OPTIONAL_ORG_COLUMNS}
    orgs: list[RawOrg] = []
    seen: dict[str, int] = {}
    for line, row in org_rows:
        oid = row["org_id"]
        if oid in seen:
            raise DataError(f"{org_path}:{line}: duplicate org_id {oid!r} (first seen on line {seen[oid]})")
        seen[oid] = line
        orgs.append(
            RawOrg(
                org_id=oid,
                name=row["name"],
                country=row["country"],
                region=row["region"],
                city=row["city"],
                category_list=tuple(split_list(row["category_list"])),
                category_group_list=tuple(split_list(row["category_group_list"])),
                founded_on=row["founded_on"],
                description=descriptions.get(oid, ""),
                primary_category=(row["primary_category"].strip() or None) if has_primary["primary_category"] else None,
                primary_category_group=(row["primary_category_group"].strip() or None)
                if has_primary["primary_category_group"]
                else None,
                line=line,
            )
        )

    acqs = [
        RawAcquisition(
            acquirer_id=row["acquirer_id"],
            acquiree_id=row["acquiree_id"],
            acquisition_type=row["acquisition_type"],
            acquired_on=row["acquired_on"],
            line=line,
        )
        for line, row in acq_rows
    ]
    return orgs, acqs


def _complete(org: RawOrg) -> OrgRecord | None:
    founded = parse_month(org.founded_on)
    required = (org.country, org.region, org.city, org.description)
    if founded is None or not all(s.strip() for s in required):
        return None
    if not org.category_list or not org.category_group_list:
        return None
    return OrgRecord(
        org_id=org.org_id,
        name=org.name,
        country=org.country.strip(),
        region=org.region.strip(),
        city=org.city.strip(),
        category_list=tuple(org.category_list),
        category_group_list=tuple(org.category_group_list),
        founded_month=founded,
        description=org.description.strip(),
        primary_category=org.primary_category,
        primary_category_group=org.primary_category_group,
    )


def clean(
    raw_orgs: Sequence[RawOrg], raw_acqs: Sequence[RawAcquisition]
) -> tuple[dict[str, OrgRecord], list[AcquisitionEvent], CleaningReport]:
    """Apply the cleaning rules in order and attribute each removal to its first matching rule.

    1. drop acquisitions with an unusable date or a type other than ``acquisition``
    2. drop duplicates of (acquirer, acquiree, month), keeping the first in file order
    3. drop self-acquisitions
    4. drop acquisitions touching an organization with any required field missing
       (an id absent from the organizations table counts as missing everything)
    5. drop organizations no surviving acquisition refers to

    Returns:
        ``(orgs, events, report)`` where ``orgs`` maps org id to record in file
        order and ``events`` preserves file order.
    """
    removed = dict.fromkeys(RULES, 0)

    complete: dict[str, OrgRecord] = {}
    incomplete = 0
    for org in raw_orgs:
        rec = _complete(org)
        if rec is None:
            incomplete += 1
        else:
            complete[org.org_id] = rec

    seen: set[tuple[str, str, int]] = set()
    events: list[AcquisitionEvent] = []
    for acq in raw_acqs:
        month = parse_month(acq.acquired_on)
        if month is None or acq.acquisition_type.strip().lower() != "acquisition":
            removed[RULE_DATE_TYPE] += 1
            continue
        key = (acq.acquirer_id, acq.acquiree_id, month)
        if key in seen:
            removed[RULE_DUPLICATE] += 1
            continue
        seen.add(key)
        if acq.acquirer_id == acq.acquiree_id:
            removed[RULE_SELF] += 1
            continue
        if acq.acquirer_id not in complete or acq.acquiree_id not in complete:
            removed[RULE_INCOMPLETE] += 1
            continue
        events.append(AcquisitionEvent(acq.acquirer_id, acq.acquiree_id, month, "acquisition"))

    referenced = {e.acquirer_id for e in events} | {e.acquiree_id for e in events}
    orgs = {oid: rec for oid, rec in complete.items() if oid in referenced}
    report = CleaningReport(
        rows_in=len(raw_acqs),
        rows_out=len(events),
        removed_by_rule=removed,
        orgs_in=len(raw_orgs),
        orgs_out=len(orgs),
        incomplete_orgs=incomplete,
    )
    return orgs, events, report


def write_tables(
    orgs: Mapping[str, OrgRecord],
    events: Iterable[AcquisitionEvent],
    out_dir: str | os.PathLike,
) -> None:
    """Write cleaned data back in the input schema (month-resolution dates).

    Primary category columns are included so downstream runs can skip inference.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / ORGS_FILE).write_text(orgs_csv(orgs.values()), encoding="utf-8")
    (out / ACQS_FILE).write_text(acquisitions_csv(events), encoding="utf-8")
    (out / DESCS_FILE).write_text(descriptions_csv(orgs.values()), encoding="utf-8")


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def orgs_csv(orgs: Iterable[OrgRecord]) -> str:
    return _csv_text(
        ORG_COLUMNS + OPTIONAL_ORG_COLUMNS,
        (
            (
                o.org_id,
                o.name,
                o.country,
                o.region,
                o.city,
                join_list(o.category_list),
                join_list(o.category_group_list),
                month_label(o.founded_month),
                o.primary_category or "",
                o.primary_category_group or "",
            )
            for o in orgs
        ),
    )


def acquisitions_csv(events: Iterable[AcquisitionEvent]) -> str:
    return _csv_text(
        ACQ_COLUMNS,
        ((e.acquirer_id, e.acquiree_id, e.acquisition_type, month_label(e.date_month)) for e in events),
    )


def descriptions_csv(orgs: Iterable[OrgRecord]) -> str:
    return _csv_text(DESC_COLUMNS, ((o.org_id, o.description) for o in orgs))


def load_dataset(
    data_dir: str | os.PathLike, infer_categories: bool = True
) -> tuple[dict[str, OrgRecord], list[AcquisitionEvent], CleaningReport]:
    """Parse, clean and (optionally) infer primary categories for a data directory.

    With ``infer_categories=False`` the ``primary_category`` and
    ``primary_category_group`` columns must already be populated.
    """
    from acqgraph.catinfer import assign_primary

    d = Path(data_dir)
    raw_orgs, raw_acqs = parse_tables(d / ORGS_FILE, d / ACQS_FILE, d / DESCS_FILE)
    orgs, events, report = clean(raw_orgs, raw_acqs)
    if infer_categories:
        orgs = assign_primary(orgs)
    else:
        for rec in orgs.values():
            if rec.primary_category is None or rec.primary_category_group is None:
                raise DataError(
                    f"organization {rec.org_id!r} lacks primary_category/primary_category_group "
                    "and category inference is off"
                )
    return orgs, events, report


def with_primary(rec: OrgRecord, category: str, group: str) -> OrgRecord:
    return replace(rec, primary_category=category, primary_category_group=group)


__all__ = [
    "AcquisitionEvent",
    "CleaningReport",
    "OrgRecord",
    "RawAcquisition",
    "RawOrg",
    "clean",
    "load_dataset",
    "month_index",
    "month_label",
    "parse_month",
    "parse_tables",
    "write_tables",
]
