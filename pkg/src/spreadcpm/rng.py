"""Counter-based random streams.

Every random draw in an experiment comes from a generator keyed by
``(master_seed, point, trial, purpose)``, so results do not depend on the
order in which trials are executed.
"""

from __future__ import annotations

import numpy as np

PURPOSES = ("message", "noise", "phase", "nbi", "tie", "nbi-freq", "chips")


def stream(master_seed: int, point: int, trial: int, purpose: str) -> np.random.Generator:
    if purpose not in PURPOSES:
        raise ValueError(f"unknown stream purpose {purpose!r}")
    key = (int(point), int(trial), PURPOSES.index(purpose))
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=key))


def experiment_stream(master_seed: int, purpose: str) -> np.random.Generator:
    """Stream for draws made once per experiment (shared by all grid points)."""
    return stream(master_seed, -1 & 0xFFFFFFFF, 0, purpose)
