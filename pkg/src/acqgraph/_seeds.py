"""Labeled sub-seeds derived from one root seed."""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(root: int, label: str) -> int:
    """Stable 32-bit seed for the component named ``label``."""
    tag = int.from_bytes(hashlib.sha256(label.encode()).digest()[:8], "little")
    return int(np.random.SeedSequence([int(root), tag]).generate_state(1)[0])
