"""Primary category inference by bag-of-words cosine similarity.

Each organization lists several categories (alphabetically, so the order says
nothing about importance). The primary one is the candidate whose name is most
similar to the organization's description.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from typing import Mapping, Sequence

from acqgraph.ingest import OrgRecord, with_primary

_TOKEN = re.compile(r"[^0-9a-z]+")

TokenVector = Counter


def tokenize(text: str) -> Counter:
    """Lowercase, split on non-alphanumerics, count raw term frequencies."""
    return Counter(tok for tok in _TOKEN.split(text.lower()) if tok)


def cosine(a: Mapping[str, int], b: Mapping[str, int]) -> float:
    if not a or not b:
        return 0.0
    if len(b) < len(a):
        a, b = b, a
    dot = sum(c * b.get(tok, 0) for tok, c in a.items())
    if dot == 0:
        return 0.0
    na = math.sqrt(sum(c * c for c in a.values()))
    nb = math.sqrt(sum(c * c for c in b.values()))
    return min(1.0, dot / (na * nb))


def infer_primary(description: str, candidates: Sequence[str]) -> str:
    """Return the candidate most similar to ``description``.

    Ties go to the earlier candidate in list order; because the scan keeps the
    first maximum, the result is total and order-stable.
    """
    if not candidates:
        raise ValueError("candidates must be non-empty")
    desc = tokenize(description)
    best, best_sim = candidates[0], -1.0
    for cand in candidates:
        sim = cosine(desc, tokenize(cand))
        if sim > best_sim:
            best, best_sim = cand, sim
    return best


def assign_primary(orgs: Mapping[str, OrgRecord]) -> dict[str, OrgRecord]:
    """Fill ``primary_category`` and ``primary_category_group`` for every record."""
    out: dict[str, OrgRecord] = {}
    for oid, rec in orgs.items():
        cat = infer_primary(rec.description, rec.category_list)
        grp = infer_primary(rec.description, rec.category_group_list)
        out[oid] = with_primary(rec, cat, grp)
    return out
