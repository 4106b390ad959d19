"""Deterministic seed derivation.

Every command expands a single user-visible seed into per-task child seeds via
``numpy.random.SeedSequence`` spawn keys, so running cells in any order (or in
parallel) cannot change results.
"""

from __future__ import annotations

import numpy as np


def derive_seed(root: int, *path: int) -> int:
    """Child seed for the task addressed by ``path`` under ``root``."""
    ss = np.random.SeedSequence(entropy=int(root), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(2, dtype=np.uint32).view(np.uint64)[0])
