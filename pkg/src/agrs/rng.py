"""Shared randomness: a reproducible stream of uniform variates.

Encoder and decoder construct the same :class:`SharedRandomness` from a seed
and read variates in the same order.  The generator is numpy's Philox
(counter based) keyed through a ``SeedSequence``; per-trial substreams put the
trial path into the sequence's ``spawn_key``, so

    SharedRandomness.substream(master, 3, 7)

reproduces ``Philox(SeedSequence(entropy=master, spawn_key=(3, 7)))`` exactly.
Every other random quantity (dithers, normals, discrete draws) is derived
from these uniforms by inversion.
"""
from __future__ import annotations

import numpy as np

_BLOCK = 64


class SharedRandomness:
    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        if seed < 0 or seed >= 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        self._gen = np.random.Generator(np.random.Philox(seq))
        self._buf = np.empty(0)
        self._i = 0
        self.position = 0

    @classmethod
    def substream(cls, master_seed: int, *index: int) -> "SharedRandomness":
        return cls(master_seed, tuple(index))

    def uniform(self) -> float:
        """Next variate in [0, 1)."""
        if self._i >= len(self._buf):
            # block reads give the same sequence as scalar reads
            self._buf = self._gen.random(_BLOCK)
            self._i = 0
        u = float(self._buf[self._i])
        self._i += 1
        self.position += 1
        return u

    def dither(self) -> float:
        """Next variate in [-1/2, 1/2)."""
        return self.uniform() - 0.5

    def uniforms(self, n: int) -> list[float]:
        return [self.uniform() for _ in range(n)]

    def skip(self, n: int) -> None:
        for _ in range(n):
            self.uniform()

    def __repr__(self) -> str:
        return f"SharedRandomness(seed={self.seed}, path={self.path}, position={self.position})"
