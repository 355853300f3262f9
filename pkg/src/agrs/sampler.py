"""Adaptive greedy rejection sampling on abstract target/proposal pairs.

A pair exposes the density ratio ``r = dQ/dP`` and the masses of its
superlevel sets ``H_L = {y : r(y) >= L}``.  The level/survival recursion does
not depend on the random draws, so it lives in :class:`LevelChain`, which is
extended lazily and can be shared by any number of trials on the same
(pair, bounds).  Per step a trial reads one restricted-proposal draw and then
one acceptance uniform from its :class:`~agrs.rng.SharedRandomness`.

Bounds are described by whatever the pair understands: ``None`` is the whole
space, discrete pairs use frozensets of atom indices and 1D Gaussian pairs use
``(lo, hi)`` intervals in CDF space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol, Sequence

from .errors import (BoundsViolation, DegenerateSurvival, IterationCap,
                     MassInconsistency, SurvivalUnderflow)
from .rng import SharedRandomness

Bound = Any


class TargetProposalPair(Protocol):
    def ratio(self, x) -> float: ...

    def target_mass_above(self, level: float) -> float: ...

    def proposal_mass_above(self, level: float) -> float: ...

    def proposal_mass_of_bound(self, bound: Bound) -> float: ...

    def sample_proposal_restricted(self, bound: Bound, rng: SharedRandomness): ...

    def superlevel_bound(self, level: float) -> Bound: ...

    def superlevel_within(self, level: float, bound: Bound) -> bool: ...


class BoundsSchedule(Protocol):
    def bound(self, k: int, pair: TargetProposalPair, prev_level: float) -> Bound: ...


class Unbounded:
    """B_k = whole space for every k, i.e. plain GRS."""

    def bound(self, k, pair, prev_level):
        return None

    def __repr__(self):
        return "Unbounded()"


class TightBounds:
    """B_k = H_{k-1}, the smallest admissible bound."""

    def bound(self, k, pair, prev_level):
        if k == 1:
            return None
        return pair.superlevel_bound(prev_level)


class FunctionBounds:
    def __init__(self, fn: Callable[[int, TargetProposalPair, float], Bound]):
        self.fn = fn

    def bound(self, k, pair, prev_level):
        return self.fn(k, pair, prev_level)


GRS = Unbounded()


@dataclass(frozen=True)
class SamplerConfig:
    max_steps: int = 10**7
    survival_floor: float = 1e-15
    mass_tol: float = 1e-12


DEFAULT_CONFIG = SamplerConfig()


class PeakLevel(float):
    """A level carried together with ``depth = ln sup r - ln L``.

    Close to the supremum of the ratio the float ``L`` no longer resolves the
    superlevel set; pairs that know ``sup r`` advance the depth instead.
    """

    def __new__(cls, log_sup: float, depth: float):
        obj = super().__new__(cls, math.exp(log_sup - depth))
        obj.depth = depth
        return obj


def acceptance_prob(r_x: float, prev_level: float, survival: float, bound_mass: float) -> float:
    """clip(P(B_k) * (r(x) - L_{k-1}) / S_k) into [0, 1]."""
    if not survival > 0:
        raise DegenerateSurvival(f"degenerate survival: S_k = {survival}")
    beta = bound_mass * (r_x - prev_level) / survival
    return min(max(beta, 0.0), 1.0)


def step_levels(prev_level: float, survival: float, bound_mass: float,
                target_mass_above: Callable[[float], float],
                proposal_mass_above: Callable[[float], float],
                mass_tol: float = 1e-12,
                residual_mass: Callable[[float], float] | None = None,
                advance: Callable[[float, float], float] | None = None) -> tuple[float, float]:
    """Return (L_k, S_{k+1}) from L_{k-1}, S_k and P(B_k).

    ``residual_mass(L)``, when given, evaluates ``Q(H_L) - L P(H_L)`` directly;
    pairs supply it where the difference of masses cancels badly.
    ``advance(L, t)`` replaces the plain sum ``L + t``.
    """
    increment = survival / bound_mass
    level = advance(prev_level, increment) if advance is not None else prev_level + increment
    if residual_mass is not None:
        next_survival = residual_mass(level)
    else:
        next_survival = target_mass_above(level) - level * proposal_mass_above(level)
    if next_survival < -mass_tol:
        raise MassInconsistency(
            f"mass inconsistency: S = {next_survival} at level {level}")
    return level, max(next_survival, 0.0)


@dataclass(frozen=True)
class LevelStep:
    k: int
    bound: Bound
    bound_mass: float       # P(B_k)
    prev_level: float       # L_{k-1}
    survival: float         # S_k
    level: float            # L_k
    hset_mass: float        # P(H_k)
    next_survival: float    # S_{k+1}


class LevelChain:
    """Deterministic part of one AGRS run, memoised step by step."""

    def __init__(self, pair: TargetProposalPair, bounds: BoundsSchedule = GRS,
                 config: SamplerConfig = DEFAULT_CONFIG):
        self.pair = pair
        self.bounds = bounds
        self.config = config
        self.steps: list[LevelStep] = []

    def __len__(self):
        return len(self.steps)

    def step(self, k: int) -> LevelStep:
        while len(self.steps) < k:
            self._extend()
        return self.steps[k - 1]

    def _extend(self) -> None:
        k = len(self.steps) + 1
        if k > self.config.max_steps:
            raise IterationCap(f"iteration cap: {self.config.max_steps} steps")
        if k == 1:
            prev_level, survival = 0.0, 1.0
        else:
            last = self.steps[-1]
            prev_level, survival = last.level, last.next_survival
            if survival <= self.config.survival_floor:
                raise SurvivalUnderflow(
                    f"survival underflow: S_{k} = {survival:.3e} (P(H_{k-1}) = {last.hset_mass:.3e})")
        pair = self.pair
        bound = self.bounds.bound(k, pair, prev_level)
        if k > 1 and bound is not None and not pair.superlevel_within(prev_level, bound):
            raise BoundsViolation(f"bounds violation: H_{k - 1} not inside B_{k}")
        bound_mass = pair.proposal_mass_of_bound(bound)
        level, next_survival = step_levels(prev_level, survival, bound_mass,
                                           pair.target_mass_above, pair.proposal_mass_above,
                                           self.config.mass_tol,
                                           getattr(pair, "residual_mass", None),
                                           getattr(pair, "advance_level", None))
        self.steps.append(LevelStep(k, bound, bound_mass, prev_level, survival, level,
                                    pair.proposal_mass_above(level), next_survival))


@dataclass
class SamplerTrace:
    index: int                   # K
    sample: Any                  # X_K
    steps: Sequence[LevelStep]
    betas: list[float] = field(default_factory=list)

    @property
    def records(self) -> list[tuple[float, float, float, float]]:
        """(L_k, S_k, beta_k, P(B_k)) for k = 1..K."""
        return [(s.level, s.survival, b, s.bound_mass) for s, b in zip(self.steps, self.betas)]

    @property
    def m_index(self) -> int:
        """argmin over n <= K of S_n / P(B_n) (1-based)."""
        vals = [s.survival / s.bound_mass for s in self.steps[:self.index]]
        return 1 + min(range(len(vals)), key=vals.__getitem__)


def agrs_sample(pair: TargetProposalPair, bounds: BoundsSchedule = GRS,
                rng: SharedRandomness | None = None,
                config: SamplerConfig = DEFAULT_CONFIG,
                chain: LevelChain | None = None) -> SamplerTrace:
    """Run AGRS until the first acceptance.  With the default bounds this is GRS."""
    if rng is None:
        raise ValueError("agrs_sample needs a SharedRandomness stream")
    if chain is None:
        chain = LevelChain(pair, bounds, config)
    betas = []
    for k in range(1, config.max_steps + 1):
        st = chain.step(k)
        x = pair.sample_proposal_restricted(st.bound, rng)
        u = rng.uniform()
        beta = acceptance_prob(pair.ratio(x), st.prev_level, st.survival, st.bound_mass)
        betas.append(beta)
        if u < beta:
            return SamplerTrace(k, x, chain.steps[:k], betas)
    raise IterationCap(f"iteration cap: {config.max_steps} steps")


class _Residual:
    """The pair (Q_k, P_k) of the recursive formulation.

    ``dQ_k/dP_k = scale * max(r - offset, 0)`` as a function of the base ratio;
    evaluation goes through the chain of residual maps
    ``g_{k+1} = (P(B_{k+1}) / P(B_k)) * max(g_k - 1, 0) / Z_k``.
    """

    def __init__(self, pair, bound, bound_mass):
        self.pair = pair
        self.bound = bound
        self.bound_mass = bound_mass
        self.offset = 0.0
        self.scale = bound_mass
        self._first_scale = bound_mass
        self._maps: list[tuple[float, float]] = []  # (width ratio, Z_j)

    def ratio(self, x) -> float:
        g = self._first_scale * self.pair.ratio(x)
        for width_ratio, z in self._maps:
            g = width_ratio * max(g - 1.0, 0.0) / z
        return g

    def residual_normaliser(self) -> float:
        # Q_k(H) - P_k(H) with H = {dQ_k/dP_k >= 1} = {r >= offset + 1/scale}
        base_level = self.offset + 1.0 / self.scale
        q = self.pair.target_mass_above(base_level) - self.offset * self.pair.proposal_mass_above(base_level)
        q *= self.scale / self.bound_mass
        p = self.pair.proposal_mass_above(base_level) / self.bound_mass
        return q - p

    def descend(self, z: float, bound, bound_mass) -> None:
        width_ratio = bound_mass / self.bound_mass
        self._maps.append((width_ratio, z))
        self.offset += 1.0 / self.scale
        self.scale *= width_ratio / z
        self.bound = bound
        self.bound_mass = bound_mass


def agrs_sample_recursive(pair: TargetProposalPair, bounds: BoundsSchedule = GRS,
                          rng: SharedRandomness | None = None,
                          config: SamplerConfig = DEFAULT_CONFIG) -> SamplerTrace:
    """AGRS in the residual-measure form: accept with clip(dQ_k/dP_k(X_k)),
    otherwise hand the normalised excess max(dQ_k/dP_k - 1, 0) on to step k+1.

    Consumes variates in the same order as :func:`agrs_sample`, so under a
    shared stream both return the same (X, K).
    """
    if rng is None:
        raise ValueError("agrs_sample_recursive needs a SharedRandomness stream")
    bound = bounds.bound(1, pair, 0.0)
    res = _Residual(pair, bound, pair.proposal_mass_of_bound(bound))
    steps = []
    betas = []

    def agrs(k: int):
        # tail recursion written as a loop so deep runs don't hit the stack limit
        while True:
            if k > config.max_steps:
                raise IterationCap(f"iteration cap: {config.max_steps} steps")
            x = pair.sample_proposal_restricted(res.bound, rng)
            u = rng.uniform()
            beta = min(max(res.ratio(x), 0.0), 1.0)
            betas.append(beta)
            z = res.residual_normaliser()
            steps.append(LevelStep(k, res.bound, res.bound_mass, res.offset,
                                   res.bound_mass / res.scale, res.offset + 1.0 / res.scale,
                                   pair.proposal_mass_above(res.offset + 1.0 / res.scale),
                                   z * res.bound_mass / res.scale))
            if u < beta:
                return x, k
            if z * res.bound_mass / res.scale <= config.survival_floor:
                raise SurvivalUnderflow(f"survival underflow at step {k + 1}")
            next_bound = bounds.bound(k + 1, pair, res.offset + 1.0 / res.scale)
            if next_bound is not None and not pair.superlevel_within(res.offset + 1.0 / res.scale, next_bound):
                raise BoundsViolation(f"bounds violation: H_{k} not inside B_{k + 1}")
            res.descend(z, next_bound, pair.proposal_mass_of_bound(next_bound))
            k += 1

    x, k = agrs(1)
    return SamplerTrace(k, x, steps, betas)


def survival_bound_check(trace: SamplerTrace, slack: float = 1e-12) -> bool:
    """S_{k+1} <= exp(-sum_{n<=k} P(H_n)/P(B_n)) along the recorded steps."""
    acc = 0.0
    for st in trace.steps:
        acc += st.hset_mass / st.bound_mass
        if st.next_survival > math.exp(-acc) + slack:
            return False
    return True


def _grs_tail(pair, level: float, survival: float, first: int) -> tuple[list[float], float]:
    """Closed-form remainder of a finite GRS run from step ``first`` on.

    Returns the accepted mass per atom and its contribution to E[K].  While the
    superlevel set H stays fixed every step accepts ``p_i S`` on each atom of H
    and S shrinks by the factor ``1 - P(H)``, so each such phase is a geometric
    series; the step on which the level passes the next ratio is done exactly.
    """
    n = len(pair.q)
    live = [i for i in range(n) if pair.p[i] > 0]
    ratio = {i: pair.ratio(i) for i in live}
    mass = [0.0] * n
    expected = 0.0
    k = first
    while survival > 0:
        members = [i for i in live if ratio[i] > level]
        if not members:
            break
        p_h = math.fsum(pair.p[i] for i in members)
        x = 1.0 - p_h
        c = 1.0 - (min(ratio[i] for i in members) - level) * p_h / survival
        # m full steps keep L + S below the smallest ratio in H
        m = math.inf if c <= 0.0 or x <= 0.0 else math.floor(math.log(c) / math.log(x))
        if m == math.inf:
            for i in members:
                mass[i] += pair.p[i] * survival / p_h
            expected += survival * (k + x / p_h)
            break
        if m > 0:
            xm = x ** m
            geo = (1.0 - xm) / p_h
            jsum = (x - m * xm + (m - 1) * xm * x) / (p_h * p_h)
            for i in members:
                mass[i] += pair.p[i] * survival * geo
            expected += p_h * survival * (k * geo + jsum)
            level += survival * geo
            survival *= xm
            k += m
        accepted = 0.0
        for i in members:
            a = pair.p[i] * min(ratio[i] - level, survival)
            mass[i] += a
            accepted += a
        expected += k * accepted
        level += survival
        survival -= accepted
        k += 1
    return mass, expected


def enumerate_acceptance(pair, bounds: BoundsSchedule = GRS, depth: int = 50,
                         close_tail: bool = False) -> tuple[list[list[float]], float]:
    """Exact P[K = k, X = x] for a finite pair, k = 1..depth.

    Returns (rows, expected_index) where ``rows[k-1][x]`` is the joint mass and
    ``expected_index`` is sum_k k P[K = k] over the enumerated rows.  Stops
    early once the survival mass is exhausted.  With ``close_tail`` the rest
    of a GRS run is summed in closed form into one extra row.
    """
    n = len(pair.q)
    chain = LevelChain(pair, bounds, SamplerConfig(max_steps=depth + 1, survival_floor=0.0))
    rows = []
    expected = 0.0
    for k in range(1, depth + 1):
        try:
            st = chain.step(k)
        except SurvivalUnderflow:
            break
        if st.survival <= 0:
            break
        members = range(n) if st.bound is None else st.bound
        row = [0.0] * n
        for i in members:
            beta = acceptance_prob(pair.ratio(i), st.prev_level, st.survival, st.bound_mass)
            row[i] = st.survival / st.bound_mass * pair.p[i] * beta
        rows.append(row)
        expected += k * math.fsum(row)
    else:
        if close_tail and isinstance(bounds, Unbounded):
            st = chain.steps[depth - 1]
            if st.next_survival > 0:
                row, tail = _grs_tail(pair, st.level, st.next_survival, depth + 1)
                rows.append(row)
                expected += tail
    return rows, expected
