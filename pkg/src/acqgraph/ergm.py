"""Dyad-independent exponential random graph models.

With only dyad-independent terms (edge count, attribute matches, absolute
attribute differences) the ERGM likelihood factorizes over dyads, so the MLE
is a (weighted) logistic regression of the edge indicator on per-dyad features.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.special import expit
from scipy.stats import norm

from acqgraph.errors import ConvergenceError, DataError
from acqgraph.graph import AttributedGraph, dyad_index, dyad_pairs, n_dyads

DEFAULT_DYAD_BUDGET = 20_000_000

TERM_LABELS = {
    "edges": "edges",
    "match:country": "Country",
    "match:region": "Region",
    "match:city": "City",
    "match:category_group": "Category group",
    "match:category": "Category",
    "absdiff:founded_month": "Founding date (year-month)",
}
DEFAULT_TERMS = ",".join(TERM_LABELS)


@dataclass(frozen=True)
class Term:
    kind: str  # "edges" | "match" | "absdiff"
    attribute: str | None = None

    def __post_init__(self):
        if self.kind not in ("edges", "match", "absdiff"):
            raise ValueError(f"unknown term kind {self.kind!r}")
        if (self.kind == "edges") != (self.attribute is None):
            raise ValueError("edges takes no attribute; match/absdiff require one")

    @property
    def name(self) -> str:
        return self.kind if self.attribute is None else f"{self.kind}:{self.attribute}"

    @property
    def label(self) -> str:
        return TERM_LABELS.get(self.name, self.name)

    @classmethod
    def parse(cls, text: str) -> "Term":
        text = text.strip()
        if text == "edges":
            return cls("edges")
        kind, sep, attr = text.partition(":")
        if not sep or not attr:
            raise ValueError(f"cannot parse term {text!r}; expected edges, match:ATTR or absdiff:ATTR")
        return cls(kind, attr)


def parse_terms(spec: str | Sequence[str]) -> list[Term]:
    items = spec.split(",") if isinstance(spec, str) else list(spec)
    return [Term.parse(t) for t in items if t.strip()]


@dataclass(frozen=True)
class CaseControl:
    """Keep every edge dyad plus ``ratio`` times as many sampled non-edges."""

    ratio: float
    seed: int = 0


@dataclass
class DyadDesign:
    terms: list[Term]
    X: np.ndarray
    y: np.ndarray
    weights: np.ndarray
    directed: bool
    n_nodes: int
    sampling: str = "exact"

    @property
    def n_rows(self) -> int:
        return len(self.y)


def _attribute_array(g: AttributedGraph, nodes: list, attr: str, numeric: bool) -> np.ndarray:
    values = []
    for u in nodes:
        a = g.attrs(u)
        if attr not in a:
            raise DataError(f"node {u!r} lacks attribute {attr!r} required by the ERGM design")
        values.append(a[attr])
    if numeric:
        return np.asarray(values, dtype=np.float64)
    codes: dict[Any, int] = {}
    return np.asarray([codes.setdefault(v, len(codes)) for v in values], dtype=np.int64)


def build_design(
    g: AttributedGraph,
    terms: Sequence[Term] | str,
    sampling: str | CaseControl = "exact",
    dyad_budget: int = DEFAULT_DYAD_BUDGET,
) -> DyadDesign:
    """Per-dyad feature rows and edge labels.

    Edges are binarized (present iff weight >= 1) and self-loops ignored.
    ``sampling="exact"`` enumerates every dyad; a :class:`CaseControl` keeps
    all edges and a seeded sample of non-edges, weighting each sampled
    non-edge by (total non-edges) / (sampled non-edges).
    """
    terms = parse_terms(terms) if isinstance(terms, str) else list(terms)
    nodes = g.sorted_nodes()
    n = len(nodes)
    pos = {u: i for i, u in enumerate(nodes)}
    columns = {}
    for t in terms:
        if t.attribute is not None and t.name not in columns:
            columns[t.name] = _attribute_array(g, nodes, t.attribute, numeric=t.kind == "absdiff")

    ei = np.asarray([pos[u] for (u, v) in g.edges if u != v], dtype=np.int64)
    ej = np.asarray([pos[v] for (u, v) in g.edges if u != v], dtype=np.int64)
    edge_idx = np.unique(dyad_index(ei, ej, n, g.directed)) if len(ei) else np.zeros(0, dtype=np.int64)
    total = n_dyads(n, g.directed)
    total_non = total - len(edge_idx)

    if sampling == "exact":
        if total > dyad_budget:
            raise DataError(
                f"exact design needs {total} dyads (budget {dyad_budget}); use case-control sampling"
            )
        k = np.arange(total, dtype=np.int64)
        y = np.zeros(total)
        y[edge_idx] = 1.0
        w = np.ones(total)
        label = "exact"
    elif isinstance(sampling, CaseControl):
        want = min(int(round(sampling.ratio * len(edge_idx))), total_non)
        rng = np.random.default_rng(sampling.seed)
        if want == total_non:
            if total > dyad_budget:
                raise DataError("case-control ratio covers every non-edge; graph too large to enumerate")
            non = np.setdiff1d(np.arange(total, dtype=np.int64), edge_idx)
        else:
            non = _sample_non_edges(rng, total, edge_idx, want)
        k = np.concatenate([edge_idx, non])
        y = np.concatenate([np.ones(len(edge_idx)), np.zeros(len(non))])
        nw = total_non / len(non) if len(non) else 1.0
        w = np.concatenate([np.ones(len(edge_idx)), np.full(len(non), nw)])
        label = f"case-control:{sampling.ratio:g}"
    else:
        raise ValueError(f"unknown sampling {sampling!r}")

    i, j = dyad_pairs(k, n, g.directed)
    X = np.empty((len(k), len(terms)))
    for c, t in enumerate(terms):
        if t.kind == "edges":
            X[:, c] = 1.0
        elif t.kind == "match":
            col = columns[t.name]
            X[:, c] = col[i] == col[j]
        else:
            col = columns[t.name]
            X[:, c] = np.abs(col[i] - col[j])
    return DyadDesign(terms, X, y, w, g.directed, n, label)


def _sample_non_edges(rng: np.random.Generator, total: int, edge_idx: np.ndarray, want: int) -> np.ndarray:
    excluded = set(edge_idx.tolist())
    chosen: dict[int, None] = {}
    while len(chosen) < want:
        for x in rng.integers(0, total, size=max(2 * (want - len(chosen)), 64)).tolist():
            if x not in excluded and x not in chosen:
                chosen[x] = None
                if len(chosen) == want:
                    break
    return np.fromiter(chosen, dtype=np.int64, count=want)


# -- likelihood --------------------------------------------------------------


def log_likelihood(design: DyadDesign, theta: np.ndarray) -> float:
    eta = design.X @ np.asarray(theta, dtype=np.float64)
    return float(np.sum(design.weights * (design.y * eta - np.logaddexp(0.0, eta))))


def score(design: DyadDesign, theta: np.ndarray) -> np.ndarray:
    """Gradient of :func:`log_likelihood` with respect to ``theta``."""
    p = expit(design.X @ np.asarray(theta, dtype=np.float64))
    return design.X.T @ (design.weights * (design.y - p))


def information(design: DyadDesign, theta: np.ndarray) -> np.ndarray:
    """Observed (= expected, canonical link) information matrix."""
    p = expit(design.X @ np.asarray(theta, dtype=np.float64))
    v = design.weights * p * (1.0 - p)
    return design.X.T @ (design.X * v[:, None])


@dataclass
class ErgmFit:
    terms: list[str]
    theta: np.ndarray
    std_err: np.ndarray
    log_likelihood: float
    aic: float
    converged: bool
    iterations: int
    extra: dict[str, Any] = field(default_factory=dict)


def _check_separation(design: DyadDesign) -> None:
    y = design.y
    if not (y > 0).any() or not (y == 0).any():
        raise ValueError("design needs at least one edge row and one non-edge row")
    for c, t in enumerate(design.terms):
        col = design.X[:, c]
        if t.kind == "edges":
            continue
        if np.all(col == col[0]):
            raise ConvergenceError(f"term {t.name} is constant over all dyads; information is singular", term=t.name)
        if t.kind == "match":
            for flag in (0.0, 1.0):
                ys = y[col == flag]
                if len(ys) and (ys.min() == ys.max()):
                    raise ConvergenceError(
                        f"term {t.name} perfectly separates edges from non-edges; MLE does not exist",
                        term=t.name,
                    )


def fit(design: DyadDesign, tolerance: float = 1e-8, max_iterations: int = 100) -> ErgmFit:
    """Maximum-likelihood estimate by damped Newton (IRLS) steps.

    Columns are rescaled by their maximum magnitude internally; estimates and
    standard errors are reported on the original scale. Converged when the
    largest coefficient change drops below ``tolerance``.

    Raises:
        ConvergenceError: separation, singular information, or no convergence.
    """
    _check_separation(design)
    X = design.X
    scale = np.abs(X).max(axis=0)
    scale[scale == 0] = 1.0
    scaled = DyadDesign(design.terms, X / scale, design.y, design.weights, design.directed, design.n_nodes)
    theta = np.zeros(X.shape[1])
    ll = log_likelihood(scaled, theta)
    for it in range(1, max_iterations + 1):
        g = score(scaled, theta)
        h = information(scaled, theta)
        try:
            if np.linalg.cond(h) > 1e13:
                raise np.linalg.LinAlgError
            step = np.linalg.solve(h, g)
        except np.linalg.LinAlgError:
            worst = design.terms[int(np.argmax(np.abs(theta)))].name if it > 1 else None
            raise ConvergenceError("information matrix is singular", iterations=it, term=worst) from None
        t = 1.0
        while True:
            cand = theta + t * step
            cand_ll = log_likelihood(scaled, cand)
            if cand_ll >= ll - 1e-12 * abs(ll) or t < 1e-10:
                break
            t /= 2
        delta = cand - theta
        theta, ll = cand, cand_ll
        if max(np.abs(delta).max(), np.abs(delta / scale).max()) < tolerance:
            cov = np.linalg.inv(information(scaled, theta)) / np.outer(scale, scale)
            beta = theta / scale
            k = len(beta)
            ll_orig = log_likelihood(design, beta)
            return ErgmFit(
                terms=[t.name for t in design.terms],
                theta=beta,
                std_err=np.sqrt(np.diag(cov)),
                log_likelihood=ll_orig,
                aic=2 * k - 2 * ll_orig,
                converged=True,
                iterations=it,
                extra={"sampling": design.sampling, "n_rows": design.n_rows},
            )
    worst = design.terms[int(np.argmax(np.abs(theta)))].name
    raise ConvergenceError(
        f"ERGM fit did not converge in {max_iterations} iterations (largest coefficient: {worst})",
        iterations=max_iterations,
        term=worst,
    )


def stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def summarize(fit_result: ErgmFit, design: DyadDesign | None = None) -> dict[str, Any]:
    """Per-term estimate, standard error, Wald z, two-sided p and significance stars."""
    rows = []
    labels = [t.label for t in design.terms] if design is not None else [
        TERM_LABELS.get(name, name) for name in fit_result.terms
    ]
    for name, label, est, se in zip(fit_result.terms, labels, fit_result.theta, fit_result.std_err):
        z = float(est / se) if se > 0 else math.inf
        p = float(2.0 * norm.sf(abs(z)))
        rows.append(
            {"term": name, "label": label, "estimate": float(est), "std_err": float(se), "z": z, "p": p, "stars": stars(p)}
        )
    return {
        "rows": rows,
        "log_likelihood": fit_result.log_likelihood,
        "aic": fit_result.aic,
        "converged": fit_result.converged,
        "iterations": fit_result.iterations,
        **fit_result.extra,
    }
