from __future__ import annotations

import math
from dataclasses import replace

import pytest

from acqgraph.catinfer import assign_primary
from acqgraph.graph import build_acquisition
from acqgraph.ingest import load_dataset
from acqgraph.metrics import assortativity_categorical
from acqgraph.synthgen import SynthConfig, generate

SMALL = dict(n_orgs=200, n_events=600, n_categories=10, n_category_groups=4)


def _network(data):
    return build_acquisition(data.orgs, data.events)


def test_same_seed_gives_identical_tables():
    cfg = SynthConfig(**SMALL, homophily={"country": 1.0}, seed=3, inject_duplicates=2)
    assert generate(cfg).tables() == generate(cfg).tables()
    assert generate(cfg).tables() != generate(SynthConfig(**SMALL, homophily={"country": 1.0}, seed=4)).tables()


def _expected_events(data) -> float:
    """Sum of edge probabilities under the generating model, from the truth coefficients."""
    orgs = list(data.orgs.values())
    total = 0.0
    for a in orgs:
        for b in orgs:
            if a is b:
                continue
            eta = data.truth["edges"] + data.truth["absdiff:founded_month"] * abs(a.founded_month - b.founded_month)
            for attr, pa, pb in (
                ("country", a.country, b.country),
                ("region", a.region, b.region),
                ("city", a.city, b.city),
                ("category", a.primary_category, b.primary_category),
                ("category_group", a.primary_category_group, b.primary_category_group),
            ):
                eta += data.truth[f"match:{attr}"] * (pa == pb)
            total += 1 / (1 + math.exp(-eta))
    return total


def test_base_rate_hits_event_count_in_expectation():
    cfg = dict(SMALL, homophily={"country": 1.0, "category": 0.5, "founded_month": 0.003})
    data = generate(SynthConfig(**cfg, seed=1))
    assert math.isclose(_expected_events(data), 600, rel_tol=1e-6)
    counts = [len(generate(SynthConfig(**cfg, seed=s)).events) for s in range(20)]
    # Poisson-binomial spread is at most sqrt(600) per draw
    assert abs(sum(counts) / 20 - 600) <= 3 * math.sqrt(600 / 20)


def test_event_integrity():
    data = generate(SynthConfig(**SMALL, seed=1))
    keys = {(e.acquirer_id, e.acquiree_id) for e in data.events}
    assert len(keys) == len(data.events)
    for e in data.events:
        assert e.acquirer_id != e.acquiree_id
        founded = max(data.orgs[e.acquirer_id].founded_month, data.orgs[e.acquiree_id].founded_month)
        assert e.date_month >= founded


def test_very_strong_country_homophily_makes_every_deal_domestic():
    data = generate(SynthConfig(**SMALL, homophily={"country": 40.0}, seed=2))
    assert all(data.orgs[e.acquirer_id].country == data.orgs[e.acquiree_id].country for e in data.events)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_no_homophily_gives_near_zero_assortativity(seed):
    data = generate(SynthConfig(n_orgs=500, n_events=5000, seed=seed))
    g = _network(data)
    for attr in ("country", "region", "category_group"):
        assert abs(assortativity_categorical(g, attr)) < 0.05, attr


def test_country_assortativity_rises_with_homophily():
    for seed in range(3):
        rs = [
            assortativity_categorical(_network(generate(SynthConfig(**SMALL, homophily={"country": h}, seed=seed))), "country")
            for h in (0.0, 1.0, 2.5)
        ]
        assert rs[0] < rs[1] < rs[2], rs


def test_geography_and_categories_nest():
    data = generate(SynthConfig(**SMALL, seed=5))
    region_country, city_region, cat_group = {}, {}, {}
    for o in data.orgs.values():
        assert region_country.setdefault(o.region, o.country) == o.country
        assert city_region.setdefault(o.city, o.region) == o.region
        assert cat_group.setdefault(o.primary_category, o.primary_category_group) == o.primary_category_group
        assert o.primary_category in o.category_list


def test_descriptions_recover_primary_category():
    data = generate(SynthConfig(**SMALL, seed=6))
    stripped = {k: replace(o, primary_category=None, primary_category_group=None) for k, o in data.orgs.items()}
    inferred = assign_primary(stripped)
    assert all(inferred[k].primary_category == o.primary_category for k, o in data.orgs.items())
    assert all(inferred[k].primary_category_group == o.primary_category_group for k, o in data.orgs.items())


def test_truth_coefficients():
    data = generate(SynthConfig(**SMALL, homophily={"city": 0.5, "founded_month": 0.01}, seed=0))
    assert data.truth["match:city"] == 0.5
    assert data.truth["absdiff:founded_month"] == -0.01
    assert data.truth["edges"] == data.base_rate


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n_orgs=3, n_events=6),
        dict(n_orgs=1),
        dict(n_countries=5, n_regions=4),
        dict(n_category_groups=9, n_categories=8),
        dict(homophily={"colour": 1.0}),
        dict(homophily={"country": -1.0}),
        dict(founding_range=(2400, 2300)),
    ],
)
def test_invalid_configs_are_rejected(kwargs):
    with pytest.raises(ValueError):
        SynthConfig(**kwargs)


def test_config_dict_round_trip():
    cfg = SynthConfig(**SMALL, homophily={"country": 0.5}, acquisition_end=2800, seed=9)
    assert SynthConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        SynthConfig.from_dict({"bogus": 1})


def test_planted_defects_are_removed_by_their_rules(tmp_path):
    cfg = SynthConfig(
        **SMALL,
        seed=8,
        inject_missing_dates=3,
        inject_bad_type=2,
        inject_duplicates=4,
        inject_self=2,
        inject_incomplete=3,
    )
    data = generate(cfg)
    data.write(tmp_path)
    orgs, events, report = load_dataset(tmp_path)
    assert report.removed_by_rule == data.expected_removals
    assert report.removed_by_rule == {"date/type": 5, "dup": 4, "self-acquisition": 2, "incomplete-org": 3}
    assert sorted(events) == sorted(data.events)


def test_clean_output_loses_nothing(tmp_path):
    data = generate(SynthConfig(**SMALL, seed=10))
    data.write(tmp_path)
    _, events, report = load_dataset(tmp_path)
    assert report.rows_out == report.rows_in == len(data.events)
