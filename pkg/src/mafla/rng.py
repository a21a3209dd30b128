"""Deterministic, splittable random streams keyed by (seed, stream_id).

Two streams with distinct (seed, stream_id) pairs are statistically
independent (SeedSequence spawn keys); the same pair always reproduces a
bit-identical sequence. ``child(k)`` derives further independent
substreams, which samplers use to separate noise draws from acceptance
draws so that adjusted and unadjusted runs can share noise bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0
    path: tuple = ()

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed,
                                    spawn_key=(self.stream_id, *self.path))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *ks: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self.path + tuple(ks))


def as_generator(rng) -> np.random.Generator:
    """Accept an RngStream, a Generator, or a bare int seed."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise TypeError(f"cannot interpret {type(rng).__name__} as a random stream")
