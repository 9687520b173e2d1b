"""Erdős–Rényi baselines matched on node count and edge probability."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from acqgraph._parallel import ordered_map
from acqgraph.graph import AttributedGraph, dyad_pairs, n_dyads
from acqgraph.metrics import StructureRecord, density, structure

ROW_LABELS = {
    "density": "Density",
    "transitivity": "Transitivity",
    "avg_clustering": "Average clustering coefficient",
    "avg_shortest_path": "Average shortest path length",
    "largest_wcc_size": "Largest weakly connected component size",
    "largest_scc_size": "Largest strongly connected component size",
}
UNDIRECTED_WCC_LABEL = "Largest connected component size"


@dataclass(frozen=True)
class BaselineSpec:
    n: int
    p: float
    directed: bool
    seed: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be non-negative")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")


def matched_spec(g: AttributedGraph, seed: int = 0) -> BaselineSpec:
    return BaselineSpec(len(g), density(g), g.directed, seed)


def _pair_indices(total: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Indices in [0, total) each chosen independently with probability p.

    Uses geometric skips, so cost scales with the number of chosen pairs.
    """
    if p <= 0.0 or total == 0:
        return np.zeros(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(total, dtype=np.int64)
    picked = []
    pos = -1
    batch = min(max(16, int(total * p * 1.1) + 16), 1 << 20)
    while True:
        # clamp so huge skips at tiny p cannot overflow the running sum
        gaps = np.minimum(rng.geometric(p, size=batch), total + 1)
        idx = pos + np.cumsum(gaps)
        inside = idx[idx < total]
        picked.append(inside)
        if len(inside) < len(idx):
            break
        pos = int(idx[-1])
    return np.concatenate(picked)


def generate_er(spec: BaselineSpec) -> AttributedGraph:
    """G(n, p) over ordered (directed) or unordered pairs; no self-loops, nodes 0..n-1."""
    n = spec.n
    rng = np.random.default_rng(spec.seed)
    k = _pair_indices(n_dyads(n, spec.directed), spec.p, rng)
    i, j = dyad_pairs(k, n, spec.directed)
    edges = {(int(a), int(b)): 1 for a, b in zip(i.tolist(), j.tolist())}
    return AttributedGraph(spec.directed, range(n), edges)


def sample_seed(seed: int, index: int) -> int:
    """Sub-seed for baseline sample ``index``; independent of scheduling."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _mean(values: list[Any]) -> float | None:
    vals = [v for v in values if v is not None]
    return math.fsum(vals) / len(vals) if vals else None


def row_label(field_name: str, directed: bool) -> str:
    if field_name == "largest_wcc_size" and not directed:
        return UNDIRECTED_WCC_LABEL
    return ROW_LABELS[field_name]


@dataclass
class Comparison:
    real: StructureRecord
    baseline_mean: dict[str, float | None]
    baseline_first: StructureRecord
    spec: BaselineSpec
    n_samples: int

    def rows(self) -> list[dict[str, Any]]:
        """One row per property: name, real value, baseline mean, first draw."""
        out = []
        real = self.real.to_dict()
        first = self.baseline_first.to_dict()
        for name in ROW_LABELS:
            if name == "largest_scc_size" and not self.spec.directed:
                continue
            out.append(
                {
                    "property": row_label(name, self.spec.directed),
                    "network": real[name],
                    "baseline": self.baseline_mean[name],
                    "baseline_first_draw": first[name],
                }
            )
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "spec": {"n": self.spec.n, "p": self.spec.p, "directed": self.spec.directed, "seed": self.spec.seed},
            "n_samples": self.n_samples,
            "rows": self.rows(),
        }


def compare(g: AttributedGraph, n_samples: int = 10, seed: int = 0, workers: int = 1) -> Comparison:
    """Structure of ``g`` next to the mean structure over ``n_samples`` matched ER draws.

    Undefined metrics are averaged over the draws where they exist (``None`` if none).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    spec = matched_spec(g, seed)
    real = structure(g, workers=workers)

    def draw(i: int) -> StructureRecord:
        s = BaselineSpec(spec.n, spec.p, spec.directed, sample_seed(seed, i))
        return structure(generate_er(s))

    samples = ordered_map(draw, range(n_samples), workers)
    fields = samples[0].to_dict().keys()
    mean = {f: _mean([s.to_dict()[f] for s in samples]) for f in fields}
    return Comparison(real, mean, samples[0], spec, n_samples)
