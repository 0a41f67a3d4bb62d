"""Deterministic random streams.

Every stochastic component (masking, dropout, sampling, shuffling, init)
draws from its own named child stream so that adding draws to one consumer
never shifts the sequence seen by another. The generator is PCG64 and child
seeds are derived with BLAKE2b over ``"<seed>/<name>"``, so a given
``(seed, name)`` pair yields the same draw sequence on any platform.
"""

from __future__ import annotations

import hashlib

import numpy as np


class Rng:
    """A seeded PCG64 stream with named, independently seeded children."""

    def __init__(self, seed: int, _path: str = ""):
        if not 0 <= int(seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.path = _path
        self.gen = np.random.Generator(np.random.PCG64(self.seed))

    def child(self, name: str) -> "Rng":
        """Derive an independent stream for one named consumer."""
        path = f"{self.path}/{name}" if self.path else name
        digest = hashlib.blake2b(
            f"{self.seed}/{name}".encode("utf-8"), digest_size=8
        ).digest()
        child_seed = int.from_bytes(digest, "little")
        return Rng(child_seed, _path=path)

    # Thin pass-throughs so call sites read like plain numpy.
    def random(self, size=None):
        return self.gen.random(size)

    def integers(self, low, high=None, size=None):
        return self.gen.integers(low, high, size=size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.gen.normal(loc, scale, size)

    def permutation(self, n: int) -> np.ndarray:
        return self.gen.permutation(n)

    def choice(self, a, size=None, replace=True):
        return self.gen.choice(a, size=size, replace=replace)

    def __repr__(self):
        return f"Rng(seed={self.seed}, path={self.path!r})"
