"""Named, independent random streams for a single simulation run.

Each purpose draws from its own Philox generator keyed off the run seed, so
consuming more numbers in one stream never shifts another.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PURPOSES = ("requester", "ability", "volunteer", "server")


@dataclass(frozen=True)
class Streams:
    requester: np.random.Generator
    ability: np.random.Generator
    volunteer: np.random.Generator
    server: np.random.Generator


def make_streams(seed: int) -> Streams:
    """Derive the four per-purpose generators for ``seed``."""
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    gens = {
        name: np.random.Generator(
            np.random.Philox(np.random.SeedSequence(seed, spawn_key=(i,)))
        )
        for i, name in enumerate(PURPOSES)
    }
    return Streams(**gens)
