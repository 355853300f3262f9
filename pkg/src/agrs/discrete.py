"""Finite target/proposal pairs with exact mass summation."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .rng import SharedRandomness


class DiscretePair:
    """Q and P on atoms 0..n-1.  Superlevel sets include ties (r >= L)."""

    def __init__(self, q: Sequence[float], p: Sequence[float]):
        q = [float(v) for v in q]
        p = [float(v) for v in p]
        if len(q) != len(p) or not q:
            raise ValueError("q and p must be nonempty and of equal length")
        if any(v < 0 for v in q + p):
            raise ValueError("masses must be nonnegative")
        if any(qi > 0 and pi == 0 for qi, pi in zip(q, p)):
            raise ValueError("Q must be absolutely continuous w.r.t. P")
        qs, ps = math.fsum(q), math.fsum(p)
        self.q = [v / qs for v in q]
        self.p = [v / ps for v in p]
        self.n = len(q)
        self._r = [qi / pi if pi > 0 else 0.0 for qi, pi in zip(self.q, self.p)]

    @classmethod
    def random(cls, rng: np.random.Generator, n: int) -> "DiscretePair":
        return cls(rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n)))

    def ratio(self, x: int) -> float:
        return self._r[x]

    def target_mass_above(self, level: float) -> float:
        return math.fsum(q for q, r in zip(self.q, self._r) if r >= level)

    def proposal_mass_above(self, level: float) -> float:
        return math.fsum(p for p, r in zip(self.p, self._r) if r >= level)

    def proposal_mass_of_bound(self, bound) -> float:
        if bound is None:
            return 1.0
        return math.fsum(self.p[i] for i in bound)

    def superlevel_bound(self, level: float) -> frozenset:
        return frozenset(i for i, r in enumerate(self._r) if r >= level)

    def superlevel_within(self, level: float, bound) -> bool:
        return bound is None or self.superlevel_bound(level) <= bound

    def sample_proposal_restricted(self, bound, rng: SharedRandomness) -> int:
        atoms = range(self.n) if bound is None else sorted(bound)
        total = self.proposal_mass_of_bound(bound)
        u = rng.uniform() * total
        acc = 0.0
        last = None
        for i in atoms:
            if self.p[i] <= 0:
                continue
            acc += self.p[i]
            last = i
            if u < acc:
                return i
        return last

    def sample_target(self, rng: SharedRandomness) -> int:
        u = rng.uniform()
        acc = 0.0
        for i, q in enumerate(self.q):
            acc += q
            if u < acc:
                return i
        return max(i for i, q in enumerate(self.q) if q > 0)

    @property
    def d_inf(self) -> float:
        return math.log(max(self._r))

    @property
    def kl(self) -> float:
        return math.fsum(q * math.log(r) for q, r in zip(self.q, self._r) if q > 0)

    def __repr__(self):
        return f"DiscretePair(q={self.q}, p={self.p})"
