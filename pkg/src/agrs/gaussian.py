"""Closed-form analytics for isotropic Gaussian channels.

Target ``Q = N(mu, rho2 I)``, proposal ``P_s = N(0, (rho2 + s2) I)``.  The
density ratio is itself an unnormalised Gaussian,

    r(x) = zeta * N(x | nu, kappa2 I),
    nu = mu (s2 + rho2) / s2,   kappa2 = (s2 + rho2) rho2 / s2,

so every superlevel set is a ball around ``nu`` and its masses under Q and P
are noncentral chi-square CDFs.  Logs are kept throughout so large ``|mu|``
does not overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .rng import SharedRandomness
from .sampler import PeakLevel
from .specfun import noncentral_chisq_cdf, std_normal_cdf, std_normal_quantile

_LOG_2PI = math.log(2.0 * math.pi)
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class GaussianChannelSpec:
    d: int
    rho2: float
    sigma2: float
    s2: float
    mu: tuple[float, ...]

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not (self.rho2 > 0 and self.sigma2 > 0 and self.s2 > 0):
            raise ValueError("rho2, sigma2 and s2 must be positive")
        mu = tuple(float(m) for m in np.atleast_1d(self.mu))
        if len(mu) == 1 and self.d > 1:
            mu = mu * self.d
        if len(mu) != self.d:
            raise ValueError(f"mu has {len(mu)} entries, expected {self.d}")
        object.__setattr__(self, "mu", mu)

    @classmethod
    def make(cls, d=1, rho2=1.0, sigma2=1.0, s2=None, mu=0.0):
        """Convenience constructor; ``s2`` defaults to ``sigma2`` (no overdispersion)."""
        return cls(d, rho2, sigma2, sigma2 if s2 is None else s2, mu)

    @property
    def proposal_var(self) -> float:
        return self.rho2 + self.s2

    @property
    def mu_sq(self) -> float:
        return math.fsum(m * m for m in self.mu)


@dataclass(frozen=True)
class RatioParams:
    nu: tuple[float, ...]
    kappa2: float
    log_zeta: float

    @property
    def log_sup(self) -> float:
        """ln sup r = D_inf in nats."""
        return self.log_zeta - 0.5 * len(self.nu) * (_LOG_2PI + math.log(self.kappa2))


def ratio_params(spec: GaussianChannelSpec) -> RatioParams:
    s2, rho2, d = spec.s2, spec.rho2, spec.d
    factor = (s2 + rho2) / s2
    nu = tuple(m * factor for m in spec.mu)
    kappa2 = (s2 + rho2) * rho2 / s2
    log_prior_density = -0.5 * d * (_LOG_2PI + math.log(s2)) - spec.mu_sq / (2.0 * s2)
    log_zeta = d * math.log(factor) - log_prior_density
    return RatioParams(nu, kappa2, log_zeta)


def log_normal_density(x, mean, var) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    d = x.size
    return float(-0.5 * d * (_LOG_2PI + math.log(var)) - np.sum((x - mean) ** 2) / (2.0 * var))


def log_ratio(x, params: RatioParams) -> float:
    return params.log_zeta + log_normal_density(x, params.nu, params.kappa2)


def superlevel_radius_sq(level: float, params: RatioParams, d: int) -> float:
    """Squared radius of {x : r(x) >= level}; negative means the set is empty."""
    return radius_sq_from_log_level(math.log(level), params, d)


def radius_sq_from_log_level(log_level: float, params: RatioParams, d: int) -> float:
    k2 = params.kappa2
    return k2 * (-2.0 * log_level + 2.0 * params.log_zeta - d * _LOG_2PI - d * math.log(k2))


def _nu_sq(spec: GaussianChannelSpec) -> float:
    factor = (spec.s2 + spec.rho2) / spec.s2
    return spec.mu_sq * factor * factor


def sphere_mass_proposal(r2: float, spec: GaussianChannelSpec) -> float:
    if r2 < 0:
        return 0.0
    v = spec.proposal_var
    return noncentral_chisq_cdf(spec.d, _nu_sq(spec) / v, r2 / v)


def sphere_mass_target(r2: float, spec: GaussianChannelSpec) -> float:
    if r2 < 0:
        return 0.0
    # nu - mu = mu * rho2 / s2
    shift = spec.rho2 / spec.s2
    lam = spec.mu_sq * shift * shift / spec.rho2
    return noncentral_chisq_cdf(spec.d, lam, r2 / spec.rho2)


def expected_runtime_given_mu(spec: GaussianChannelSpec) -> float:
    """exp(D_inf(Q || P_s)) = ((rho2 + s2) / rho2)^(d/2) exp(|mu|^2 / (2 s2))."""
    return math.exp(log_expected_runtime_given_mu(spec))


def log_expected_runtime_given_mu(spec: GaussianChannelSpec) -> float:
    return 0.5 * spec.d * math.log(spec.proposal_var / spec.rho2) + spec.mu_sq / (2.0 * spec.s2)


def mean_runtime_over_prior(d: int, rho2: float, sigma2: float, s2: float) -> float:
    """E_mu[E[K | mu]] for mu ~ N(0, sigma2 I); infinite unless s2 > sigma2."""
    if s2 <= sigma2:
        return math.inf
    return (s2 / (s2 - sigma2) * (rho2 + s2) / rho2) ** (0.5 * d)


def optimal_overdispersion(rho2: float, sigma2: float) -> float:
    """The s2 minimising :func:`mean_runtime_over_prior`."""
    if rho2 <= 0 or sigma2 <= 0:
        raise ValueError("rho2 and sigma2 must be positive")
    return sigma2 + math.sqrt(sigma2) * math.sqrt(rho2 + sigma2)


def kl_divergence(spec: GaussianChannelSpec) -> float:
    """KL(Q || P_s) in nats."""
    v, d = spec.proposal_var, spec.d
    return 0.5 * (d * math.log(v / spec.rho2) + (d * spec.rho2 + spec.mu_sq) / v - d)


def expected_kl_over_prior(d: int, rho2: float, sigma2: float, s2: float) -> float:
    """E_mu[KL(Q || P_s)] in nats for mu ~ N(0, sigma2 I)."""
    v = rho2 + s2
    return 0.5 * d * (math.log(v / rho2) + (rho2 + sigma2) / v - 1.0)


def mutual_information_bits(d: int, rho2: float, sigma2: float) -> float:
    return 0.5 * d * math.log2(1.0 + sigma2 / rho2)


def divergences(spec: GaussianChannelSpec) -> tuple[float, float, float]:
    """(KL nats, D_inf nats, I[X; mu] bits)."""
    return (kl_divergence(spec), log_expected_runtime_given_mu(spec),
            mutual_information_bits(spec.d, spec.rho2, spec.sigma2))


class GaussianPair:
    """TargetProposalPair for a :class:`GaussianChannelSpec`.

    Bounds are ``None`` (the whole space) or, for ``d == 1``, an interval
    ``(lo, hi)`` in the CDF space of the proposal.
    """

    def __init__(self, spec: GaussianChannelSpec):
        self.spec = spec
        self.params = ratio_params(spec)
        self.sd = math.sqrt(spec.proposal_var)
        self._mass_cache: dict[float, tuple[float, float]] = {}

    def ratio(self, x) -> float:
        return math.exp(self.log_ratio(x))

    def log_ratio(self, x) -> float:
        if self.spec.d == 1:
            z = float(np.asarray(x).reshape(-1)[0]) - self.params.nu[0]
            return (self.params.log_zeta - 0.5 * (_LOG_2PI + math.log(self.params.kappa2))
                    - z * z / (2.0 * self.params.kappa2))
        return log_ratio(x, self.params)

    def radius_sq(self, level: float) -> float:
        if level <= 0:
            return math.inf
        if isinstance(level, PeakLevel):
            return 2.0 * self.params.kappa2 * level.depth
        return superlevel_radius_sq(level, self.params, self.spec.d)

    def advance_level(self, level: float, increment: float) -> float:
        """``level + increment``, tracked as a depth below ``sup r``."""
        log_sup = self.params.log_sup
        if level <= 0:
            plain = level + increment
            return plain if plain <= 0 else PeakLevel(log_sup, log_sup - math.log(plain))
        depth = level.depth if isinstance(level, PeakLevel) else log_sup - math.log(level)
        # 1 - L/sup r, updated without forming L
        gap = -math.expm1(-depth) - increment * math.exp(-log_sup)
        return PeakLevel(log_sup, -math.log1p(-gap))

    def _masses(self, level: float) -> tuple[float, float]:
        r2 = self.radius_sq(level)
        hit = self._mass_cache.get(r2)
        if hit is None:
            if r2 == math.inf:
                hit = (1.0, 1.0)
            else:
                hit = (sphere_mass_target(r2, self.spec), sphere_mass_proposal(r2, self.spec))
            self._mass_cache[r2] = hit
        return hit

    def target_mass_above(self, level: float) -> float:
        return self._masses(level)[0]

    def proposal_mass_above(self, level: float) -> float:
        return self._masses(level)[1]

    def proposal_mass_of_bound(self, bound) -> float:
        if bound is None:
            return 1.0
        lo, hi = bound
        return hi - lo

    def phi(self, x: float) -> float:
        return std_normal_cdf(x / self.sd)

    def superlevel_bound(self, level: float):
        if self.spec.d != 1:
            raise NotImplementedError("interval bounds are only available in 1D")
        r2 = self.radius_sq(level)
        if r2 <= 0:
            c = self.phi(self.params.nu[0])
            return (c, c)
        r = math.sqrt(r2)
        nu = self.params.nu[0]
        return (self.phi(nu - r), self.phi(nu + r))

    def superlevel_within(self, level: float, bound, tol: float = 1e-12) -> bool:
        if bound is None:
            return True
        lo, hi = self.superlevel_bound(level)
        return lo >= bound[0] - tol and hi <= bound[1] + tol

    def sample_proposal_restricted(self, bound, rng: SharedRandomness):
        if bound is None:
            if self.spec.d == 1:
                return self.sd * std_normal_quantile(_open_unit(rng.uniform()))
            return np.array([self.sd * std_normal_quantile(_open_unit(rng.uniform()))
                             for _ in range(self.spec.d)])
        lo, hi = bound
        u = lo + (hi - lo) * rng.uniform()
        return self.sd * std_normal_quantile(_open_unit(u))

    def sample_target(self, rng: SharedRandomness):
        rho = math.sqrt(self.spec.rho2)
        draws = [m + rho * std_normal_quantile(_open_unit(rng.uniform())) for m in self.spec.mu]
        return draws[0] if self.spec.d == 1 else np.array(draws)


def _open_unit(u: float) -> float:
    # [0, 1) -> (0, 1): a uniform of exactly zero maps to the smallest positive double
    return u if u > 0.0 else 5e-324
