"""Seeded synthetic organizations, descriptions and acquisition events.

Every ordered pair of organizations becomes an acquisition independently with
probability ``expit(base + sum_a h_a * [same a] - h_f * |founded_i - founded_j|)``,
where ``h`` is :attr:`SynthConfig.homophily` and ``base`` is solved so the
expected number of events equals ``n_events``. The output therefore follows a
dyad-independent ERGM with known coefficients (see :attr:`SynthData.truth`).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from acqgraph.ingest import (
    ACQS_FILE,
    DESCS_FILE,
    ORGS_FILE,
    RULE_DATE_TYPE,
    RULE_DUPLICATE,
    RULE_INCOMPLETE,
    RULE_SELF,
    RULES,
    AcquisitionEvent,
    OrgRecord,
    acquisitions_csv,
    descriptions_csv,
    month_index,
    month_label,
    orgs_csv,
    parse_month,
)

CATEGORICAL = ("country", "region", "city", "category_group", "category")
NUMERIC = ("founded_month",)

# Generic filler for descriptions; never overlaps the generated category words.
NOISE_WORDS = (
    "platform", "solutions", "network", "data", "services", "mobile", "global", "digital",
    "smart", "tools", "enterprise", "analytics", "cloud", "customers", "teams", "secure",
    "marketplace", "automation", "insights", "community", "provider", "online", "growth",
    "infrastructure", "experience", "content", "payments", "workflow", "devices", "research",
)
_SYLLABLES = ("ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "ze", "fa", "gu", "ho", "pi", "be", "do", "xu")


def _words(count: int, syllables_per_word: int) -> list[str]:
    if count > len(_SYLLABLES) ** syllables_per_word:
        raise ValueError(f"cannot name {count} items with {syllables_per_word}-syllable words")
    out = []
    for k in range(count):
        parts = []
        for _ in range(syllables_per_word):
            k, r = divmod(k, len(_SYLLABLES))
            parts.append(_SYLLABLES[r])
        out.append("".join(parts).capitalize())
    return out


@dataclass(frozen=True)
class SynthConfig:
    n_orgs: int = 500
    n_events: int = 5000
    n_countries: int = 4
    n_regions: int = 12
    n_cities: int = 24
    n_categories: int = 30
    n_category_groups: int = 8
    homophily: Mapping[str, float] = field(default_factory=dict)
    founding_range: tuple[int, int] = (month_index(1990, 1), month_index(2023, 7))
    acquisition_end: int | None = None
    extra_categories: int = 2
    noise_words: int = 6
    seed: int = 0
    inject_missing_dates: int = 0
    inject_bad_type: int = 0
    inject_duplicates: int = 0
    inject_self: int = 0
    inject_incomplete: int = 0

    def __post_init__(self):
        counts = ("n_orgs", "n_countries", "n_regions", "n_cities", "n_categories", "n_category_groups")
        for name in counts:
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.n_orgs < 2:
            raise ValueError("n_orgs must be at least 2")
        if not self.n_countries <= self.n_regions <= self.n_cities:
            raise ValueError("nested geography needs n_countries <= n_regions <= n_cities")
        if self.n_category_groups > self.n_categories:
            raise ValueError("n_category_groups must not exceed n_categories")
        if self.n_events < 0:
            raise ValueError("n_events must be non-negative")
        dyads = self.n_orgs * (self.n_orgs - 1)
        if self.n_events >= dyads:
            raise ValueError(f"n_events={self.n_events} is infeasible with {dyads} ordered pairs")
        lo, hi = self.founding_range
        if lo > hi:
            raise ValueError("founding_range must be ordered")
        if self.acquisition_end is not None and self.acquisition_end < hi:
            raise ValueError("acquisition_end must not precede the end of founding_range")
        for key, value in self.homophily.items():
            if key not in CATEGORICAL + NUMERIC:
                raise ValueError(f"unknown homophily attribute {key!r}")
            if not value >= 0 or math.isinf(value):
                raise ValueError(f"homophily[{key}] must be finite and >= 0, got {value}")
        for name in ("extra_categories", "noise_words") + tuple(f for f in self.__dataclass_fields__ if f.startswith("inject_")):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def to_dict(self) -> dict[str, Any]:
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d["homophily"] = dict(sorted(self.homophily.items()))
        d["founding_range"] = [month_label(m) for m in self.founding_range]
        d["acquisition_end"] = None if self.acquisition_end is None else month_label(self.acquisition_end)
        return d

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SynthConfig":
        d = dict(data)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config key(s): {', '.join(sorted(unknown))}")

        def month(v: Any) -> int:
            if isinstance(v, int):
                return v
            m = parse_month(str(v))
            if m is None:
                raise ValueError(f"bad month {v!r}; expected YYYY-MM")
            return m

        if "founding_range" in d:
            lo, hi = d["founding_range"]
            d["founding_range"] = (month(lo), month(hi))
        if d.get("acquisition_end") is not None:
            d["acquisition_end"] = month(d["acquisition_end"])
        if "homophily" in d:
            d["homophily"] = {str(k): float(v) for k, v in d["homophily"].items()}
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "SynthConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class SynthData:
    config: SynthConfig
    orgs: dict[str, OrgRecord]
    events: list[AcquisitionEvent]
    base_rate: float
    truth: dict[str, float]
    extra_orgs: list[OrgRecord] = field(default_factory=list)
    extra_rows: list[tuple[str, str, str, str]] = field(default_factory=list)
    expected_removals: dict[str, int] = field(default_factory=lambda: dict.fromkeys(RULES, 0))

    def referenced_orgs(self) -> list[OrgRecord]:
        used = {e.acquirer_id for e in self.events} | {e.acquiree_id for e in self.events}
        used |= {r[0] for r in self.extra_rows} | {r[1] for r in self.extra_rows}
        return [o for o in self.orgs.values() if o.org_id in used] + self.extra_orgs

    def tables(self) -> dict[str, str]:
        """CSV text per file name; only organizations some row refers to are written."""
        orgs = self.referenced_orgs()
        acq = acquisitions_csv(self.events)
        if self.extra_rows:
            acq += "".join(",".join(r) + "\n" for r in self.extra_rows)
        return {ORGS_FILE: orgs_csv(orgs), ACQS_FILE: acq, DESCS_FILE: descriptions_csv(orgs)}

    def write(self, out_dir: str | os.PathLike) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {}
        for name, text in self.tables().items():
            p = out / name
            p.write_text(text, encoding="utf-8")
            paths[name] = p
        return paths


def _codes(rng: np.random.Generator, cfg: SynthConfig) -> dict[str, np.ndarray]:
    n = cfg.n_orgs
    city = rng.integers(0, cfg.n_cities, size=n)
    region = city % cfg.n_regions  # city c lies in region c mod R, region r in country r mod C
    country = region % cfg.n_countries
    category = rng.integers(0, cfg.n_categories, size=n)
    group = category % cfg.n_category_groups
    lo, hi = cfg.founding_range
    founded = rng.integers(lo, hi + 1, size=n)
    return {
        "country": country,
        "region": region,
        "city": city,
        "category": category,
        "category_group": group,
        "founded_month": founded,
    }


def _eta_row(codes: Mapping[str, np.ndarray], h: Mapping[str, float], i: int) -> np.ndarray:
    n = len(codes["country"])
    eta = np.zeros(n)
    for a in CATEGORICAL:
        if h.get(a, 0.0):
            eta += h[a] * (codes[a] == codes[a][i])
    if h.get("founded_month", 0.0):
        f = codes["founded_month"].astype(np.float64)
        eta -= h["founded_month"] * np.abs(f - f[i])
    return eta


def calibrate_base(codes: Mapping[str, np.ndarray], h: Mapping[str, float], n_events: int) -> float:
    """Intercept making the expected event count equal ``n_events``."""
    if n_events == 0:
        return -math.inf
    n = len(codes["country"])
    hist: dict[float, int] = {}
    for i in range(n):
        row = np.delete(_eta_row(codes, h, i), i)
        vals, counts = np.unique(row, return_counts=True)
        for v, c in zip(vals.tolist(), counts.tolist()):
            hist[v] = hist.get(v, 0) + c
    vals = np.fromiter(hist.keys(), dtype=np.float64)
    counts = np.fromiter(hist.values(), dtype=np.float64)

    def excess(b: float) -> float:
        return float(counts @ expit(b + vals)) - n_events

    lo, hi = -1.0, 1.0
    while excess(lo) > 0:
        lo *= 2
    while excess(hi) < 0:
        hi *= 2
    return brentq(excess, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500)


def generate(config: SynthConfig) -> SynthData:
    """Draw one synthetic dataset; identical configs give identical output."""
    cfg = config
    rng = np.random.default_rng(cfg.seed)
    codes = _codes(rng, cfg)
    h = {k: float(v) for k, v in cfg.homophily.items() if v}
    n = cfg.n_orgs
    width = len(str(n - 1))

    countries = [f"Country {chr(65 + k % 26)}{k // 26 or ''}" for k in range(cfg.n_countries)]
    regions = [f"Region {k:03d}" for k in range(cfg.n_regions)]
    cities = [f"City {k:03d}" for k in range(cfg.n_cities)]
    categories = _words(cfg.n_categories, 2)
    groups = [w + "ware" for w in _words(cfg.n_category_groups, 3)]
    assert not {c.lower() for c in categories + groups} & set(NOISE_WORDS)

    orgs: dict[str, OrgRecord] = {}
    ids = [f"org{i:0{width}d}" for i in range(n)]
    for i, oid in enumerate(ids):
        prim = int(codes["category"][i])
        k_extra = int(rng.integers(0, cfg.extra_categories + 1)) if cfg.n_categories > 1 else 0
        others = [int(c) for c in rng.permutation(cfg.n_categories)[: k_extra + 1] if c != prim][:k_extra]
        cats = sorted({categories[c] for c in [prim] + others})
        grps = sorted({groups[c % cfg.n_category_groups] for c in [prim] + others})
        words = list(rng.choice(NOISE_WORDS, size=cfg.noise_words)) + [
            categories[prim].lower(),
            groups[prim % cfg.n_category_groups].lower(),
        ]
        desc = " ".join(str(w) for w in rng.permutation(words))
        orgs[oid] = OrgRecord(
            org_id=oid,
            name=f"Org {i}",
            country=countries[int(codes["country"][i])],
            region=regions[int(codes["region"][i])],
            city=cities[int(codes["city"][i])],
            category_list=tuple(cats),
            category_group_list=tuple(grps),
            founded_month=int(codes["founded_month"][i]),
            description=desc[:1].upper() + desc[1:],
            primary_category=categories[prim],
            primary_category_group=groups[prim % cfg.n_category_groups],
        )

    base = calibrate_base(codes, h, cfg.n_events)
    end = cfg.acquisition_end if cfg.acquisition_end is not None else cfg.founding_range[1]
    founded = codes["founded_month"]
    events: list[AcquisitionEvent] = []
    if cfg.n_events:
        for i in range(n):
            p = expit(base + _eta_row(codes, h, i))
            p[i] = 0.0
            hits = np.flatnonzero(rng.random(n) < p)
            if not len(hits):
                continue
            start = np.maximum(founded[hits], founded[i])
            months = rng.integers(start, end + 1)
            for j, m in zip(hits.tolist(), months.tolist()):
                events.append(AcquisitionEvent(ids[i], ids[j], int(m)))

    truth = {"edges": base}
    for a in CATEGORICAL:
        truth[f"match:{a}"] = h.get(a, 0.0)
    truth["absdiff:founded_month"] = -h.get("founded_month", 0.0)

    data = SynthData(cfg, orgs, events, base, truth)
    _inject_defects(data, rng)
    return data


def _inject_defects(data: SynthData, rng: np.random.Generator) -> None:
    cfg = data.config
    ev = data.events
    if (cfg.inject_duplicates or cfg.inject_missing_dates or cfg.inject_bad_type) and not ev:
        raise ValueError("defect injection needs at least one generated event")
    rows = data.extra_rows
    exp = data.expected_removals

    def pick() -> AcquisitionEvent:
        return ev[int(rng.integers(0, len(ev)))]

    for _ in range(cfg.inject_missing_dates):
        e = pick()
        rows.append((e.acquirer_id, e.acquiree_id, "acquisition", ""))
        exp[RULE_DATE_TYPE] += 1
    for _ in range(cfg.inject_bad_type):
        e = pick()
        rows.append((e.acquirer_id, e.acquiree_id, "merger", month_label(e.date_month)))
        exp[RULE_DATE_TYPE] += 1
    for _ in range(cfg.inject_duplicates):
        e = pick()
        rows.append((e.acquirer_id, e.acquiree_id, "acquisition", month_label(e.date_month)))
        exp[RULE_DUPLICATE] += 1
    ids = list(data.orgs)
    for k in range(cfg.inject_self):
        oid = ids[int(rng.integers(0, len(ids)))]
        # distinct months keep repeated picks of one org from becoming duplicates
        rows.append((oid, oid, "acquisition", month_label(data.orgs[oid].founded_month + k)))
        exp[RULE_SELF] += 1
    for k in range(cfg.inject_incomplete):
        partner = data.orgs[ids[int(rng.integers(0, len(ids)))]]
        bad = replace(partner, org_id=f"incomplete{k}", name=f"Incomplete {k}", country="")
        data.extra_orgs.append(bad)
        month = month_label(max(partner.founded_month, bad.founded_month))
        rows.append((partner.org_id, bad.org_id, "acquisition", month))
        exp[RULE_INCOMPLETE] += 1
