from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from acqgraph.baseline import BaselineSpec, compare, generate_er, matched_spec
from acqgraph.errors import UndefinedValueError
from acqgraph.graph import AttributedGraph

K3 = AttributedGraph(True, range(3), {(u, v): 1 for u in range(3) for v in range(3) if u != v})
TRIANGLE = AttributedGraph(False, range(3), {(0, 1): 1, (1, 2): 1, (0, 2): 1})


def test_matched_spec_examples():
    assert matched_spec(K3).p == 1.0
    assert matched_spec(AttributedGraph(False, range(4))).p == 0.0
    path = AttributedGraph(True, range(4), {(0, 1): 1, (1, 2): 1, (2, 3): 1})
    assert matched_spec(path).p == 0.25
    with pytest.raises(UndefinedValueError):
        matched_spec(AttributedGraph(True, [0]))


def test_generate_er_extremes():
    assert generate_er(BaselineSpec(10, 0.0, True, 1)).number_of_edges() == 0
    k4 = generate_er(BaselineSpec(4, 1.0, False, 1))
    assert set(k4.edges) == {(u, v) for u in range(4) for v in range(4) if u < v}


def test_edge_count_follows_binomial():
    pairs = 100 * 99 // 2
    counts = np.array([generate_er(BaselineSpec(100, 0.5, False, s)).number_of_edges() for s in range(200)])
    sigma_mean = math.sqrt(pairs * 0.25 / 200)
    assert abs(counts.mean() - 0.5 * pairs) <= 3 * sigma_mean
    # the sample variance should also be in line with p(1 - p) per pair
    assert 0.7 < counts.var(ddof=1) / (pairs * 0.25) < 1.3


def test_directed_er_has_no_loops_and_ordered_pairs():
    g = generate_er(BaselineSpec(30, 0.3, True, 4))
    assert g.self_loops() == 0
    assert any((v, u) in g.edges for u, v in g.edges)


@given(st.integers(0, 60), st.floats(0, 1), st.booleans(), st.integers(0, 2**32))
def test_generate_er_is_reproducible(n, p, directed, seed):
    a = generate_er(BaselineSpec(n, p, directed, seed))
    b = generate_er(BaselineSpec(n, p, directed, seed))
    assert a.edges == b.edges and len(a) == n


def test_compare_on_complete_graph_is_identical():
    cmp = compare(TRIANGLE, n_samples=1, seed=0)
    assert cmp.real == cmp.baseline_first
    assert cmp.baseline_mean == cmp.real.to_dict()


def test_compare_is_deterministic_and_thread_invariant():
    g = generate_er(BaselineSpec(60, 0.05, True, 8))
    a = compare(g, n_samples=3, seed=5).to_dict()
    assert a == compare(g, n_samples=3, seed=5).to_dict()
    assert a == compare(g, n_samples=3, seed=5, workers=3).to_dict()
    assert a != compare(g, n_samples=3, seed=6).to_dict()


def test_undirected_rows_skip_strong_components():
    rows = compare(TRIANGLE, n_samples=1).rows()
    labels = [r["property"] for r in rows]
    assert not any("strongly" in s.lower() for s in labels)
    assert any("strongly" in s.lower() for s in (r["property"] for r in compare(K3, n_samples=1).rows()))


def test_invalid_specs_are_rejected():
    with pytest.raises(ValueError):
        BaselineSpec(3, 1.5, True)
    with pytest.raises(ValueError):
        compare(TRIANGLE, n_samples=0)
