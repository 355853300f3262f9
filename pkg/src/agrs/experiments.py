"""Monte Carlo sweeps and verification suites behind the command-line tool.

Every random quantity is read from a :class:`SharedRandomness` substream whose
``spawn_key`` path names what it is for, so results do not depend on how work
is split between processes:

    (0, i, t)        target mean t of sigma-grid entry i (runtime sweep)
    (1, i, t, r)     trial r on that target
    (2, i, t)        target mean of coding trial t; (6, i, t) its channel use
    (3, 0, t)        prior draw of overdispersion trial t; (3, 1, t) its sampler
    (4, c, t)        verification check c, trial t
"""
from __future__ import annotations

import csv
import io
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .codec import build_reference_chain, encode
from .discrete import DiscretePair
from .errors import AGRSError
from .gaussian import (GaussianChannelSpec, GaussianPair, expected_kl_over_prior,
                       kl_divergence, mean_runtime_over_prior, mutual_information_bits,
                       optimal_overdispersion)
from .rng import SharedRandomness
from .sampler import (GRS, LevelChain, SamplerConfig, agrs_sample, agrs_sample_recursive,
                      survival_bound_check)
from .specfun import std_normal_quantile

MODES = ("grs", "agrs", "agrs-int")
_CHAIN_MODE = {"agrs": "rational", "agrs-int": "integer"}
_LN2 = math.log(2.0)


@dataclass
class Table:
    header: list[str]
    rows: list[list]
    units: str = ""

    def to_csv(self) -> str:
        buf = io.StringIO()
        if self.units:
            buf.write(f"# {self.units}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([_cell(v) for v in row])
        return buf.getvalue()

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _map(fn: Callable, tasks: Sequence, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _chunks(n: int, size: int) -> list[tuple[int, int]]:
    return [(i, min(i + size, n)) for i in range(0, n, size)]


def sigma_for_info(bits: float, rho: float = 1.0) -> float:
    """sigma with 0.5 log2(1 + sigma^2/rho^2) = bits."""
    return rho * math.sqrt(4.0 ** bits - 1.0)


def plugin_entropy_bits(values: Iterable) -> float:
    counts = Counter(values)
    n = sum(counts.values())
    return -math.fsum(c / n * math.log2(c / n) for c in sorted(counts.values()))


def mean_and_se(xs: Sequence[float]) -> tuple[float, float]:
    a = np.asarray(xs, dtype=float)
    if a.size < 2:
        return float(a.mean()), math.nan
    return float(a.mean()), float(a.std(ddof=1) / math.sqrt(a.size))


def _prior_draw(rng: SharedRandomness, sigma: float) -> float:
    u = rng.uniform()
    return sigma * std_normal_quantile(u if u > 0.0 else 5e-324)


@lru_cache(maxsize=64)
def _chain(rho2: float, sigma2: float, chain_mode: str):
    return build_reference_chain(rho2, sigma2, chain_mode)


# ---------------------------------------------------------------- overdispersion

def _overdispersion_trials(task):
    seed, d, rho2, sigma2, s2, lo, hi = task
    sigma = math.sqrt(sigma2)
    out = []
    for t in range(lo, hi):
        prior = SharedRandomness.substream(seed, 3, 0, t)
        mu = tuple(_prior_draw(prior, sigma) for _ in range(d))
        pair = GaussianPair(GaussianChannelSpec(d, rho2, sigma2, s2, mu))
        out.append(agrs_sample(pair, GRS, SharedRandomness.substream(seed, 3, 1, t)).index)
    return out


def overdispersion_mc(d: int, rho: float, sigma: float, s: float, trials: int,
                      seed: int = 0, workers: int = 1) -> list[int]:
    tasks = [(seed, d, rho * rho, sigma * sigma, s * s, lo, hi) for lo, hi in _chunks(trials, 25)]
    return [k for part in _map(_overdispersion_trials, tasks, workers) for k in part]


def overdispersion_sweep(d: int = 4, rho: float = 1.0, sigma: float = 3.0,
                         s_grid: Sequence[float] | None = None, trials: int = 0,
                         seed: int = 0, workers: int = 1) -> Table:
    """Prior-averaged GRS runtime and coding cost against the proposal scale s."""
    rho2, sigma2 = rho * rho, sigma * sigma
    s_opt = math.sqrt(optimal_overdispersion(rho2, sigma2))
    if s_grid is None:
        s_grid = list(np.geomspace(sigma * 1.005, 3.0 * sigma, 40))
    grid = sorted(set(float(s) for s in s_grid) | {s_opt})
    rows = []
    for s in grid:
        runtime = mean_runtime_over_prior(d, rho2, sigma2, s * s)
        kl_bits = expected_kl_over_prior(d, rho2, sigma2, s * s) / _LN2
        row = [s, runtime, kl_bits, int(s == s_opt), None, None, None]
        if s == s_opt and trials > 0:
            ks = overdispersion_mc(d, rho, sigma, s, trials, seed, workers)
            row[4], (row[5], row[6]) = trials, mean_and_se(ks)
        rows.append(row)
    return Table(["s", "expected_runtime", "expected_kl", "optimum", "mc_trials", "mc_mean_k", "mc_se_k"],
                 rows, units=f"s[sd] expected_runtime[iterations] expected_kl[bits] optimum[flag] "
                             f"mc_trials[count] mc_mean_k[iterations] mc_se_k[iterations]; "
                             f"d={d} rho={rho!r} sigma={sigma!r}")


# ---------------------------------------------------------------- runtime

def _sample_index(mode: str, mu: float, rho2: float, sigma2: float, rng: SharedRandomness,
                  cache: dict) -> tuple[int, float]:
    """(K, -log2 P(B_K)) for one channel use."""
    if mode == "grs":
        chain = cache.get(mu)
        if chain is None:
            chain = cache[mu] = LevelChain(GaussianPair(GaussianChannelSpec.make(1, rho2, sigma2, mu=mu)))
        return agrs_sample(chain.pair, GRS, rng, chain=chain).index, 0.0
    e = encode(mu, _chain(rho2, sigma2, _CHAIN_MODE[mode]), rng)
    return e.index, e.diagnostics.neg_log2_bound


def _runtime_target(task):
    seed, mode, rho2, sigma2, si, ti, trials = task
    mu = _prior_draw(SharedRandomness.substream(seed, 0, si, ti), math.sqrt(sigma2))
    cache: dict = {}
    ks = []
    try:
        for r in range(trials):
            ks.append(_sample_index(mode, mu, rho2, sigma2,
                                    SharedRandomness.substream(seed, 1, si, ti, r), cache)[0])
    except AGRSError as exc:
        return mu, ks, f"{type(exc).__name__}: {exc}"
    return mu, ks, "ok"


def runtime_sweep(mode: str, sigmas: Sequence[float], rho: float = 1.0, targets: int = 20,
                  trials: int = 400, seed: int = 0, workers: int = 1) -> Table:
    """Mean number of iterations per target against the target's KL."""
    _check_mode(mode)
    rho2 = rho * rho
    tasks = [(seed, mode, rho2, s * s, si, ti, trials)
             for si, s in enumerate(sigmas) for ti in range(targets)]
    results = _map(_runtime_target, tasks, workers)
    rows = []
    for si, s in enumerate(sigmas):
        info = mutual_information_bits(1, rho2, s * s)
        kls, pooled = [], []
        for ti in range(targets):
            mu, ks, status = results[si * targets + ti]
            kl_bits = kl_divergence(GaussianChannelSpec.make(1, rho2, s * s, mu=mu)) / _LN2
            if status != "ok":
                rows.append([s, info, ti, mu, kl_bits, len(ks), None, None, status])
                continue
            kls.append(kl_bits)
            pooled.extend(ks)
            rows.append([s, info, ti, mu, kl_bits, len(ks), *mean_and_se(ks), status])
        if pooled:
            rows.append([s, info, "mean", None, float(np.mean(kls)), len(pooled),
                         *mean_and_se(pooled), "ok"])
    return Table(["sigma", "info", "target", "mu", "kld", "trials", "num_iter", "se_num_iter", "status"],
                 rows, units="sigma[sd] info[bits] target[index] mu[value] kld[bits] trials[count] "
                             f"num_iter[iterations] se_num_iter[iterations] status[text]; "
                             f"mode={mode} rho={rho!r}")


# ---------------------------------------------------------------- coding cost

def _coding_trials(task):
    seed, mode, rho2, sigma2, si, lo, hi = task
    cache: dict = {}
    sigma = math.sqrt(sigma2)
    out = []
    for t in range(lo, hi):
        mu = _prior_draw(SharedRandomness.substream(seed, 2, si, t), sigma)
        out.append(_sample_index(mode, mu, rho2, sigma2, SharedRandomness.substream(seed, 6, si, t), cache))
    return out


def coding_cost_samples(mode: str, sigma: float, rho: float = 1.0, trials: int = 10_000,
                        seed: int = 0, workers: int = 1, sigma_index: int = 0) -> list[tuple[int, float]]:
    _check_mode(mode)
    tasks = [(seed, mode, rho * rho, sigma * sigma, sigma_index, lo, hi) for lo, hi in _chunks(trials, 500)]
    return [kb for part in _map(_coding_trials, tasks, workers) for kb in part]


def coding_cost_sweep(mode: str, sigmas: Sequence[float], rho: float = 1.0, trials: int = 10_000,
                      seed: int = 0, workers: int = 1) -> Table:
    """Per sigma: I[X; mu], mean -log2 P(B_K), plug-in H[K] and their sum, in bits."""
    rows = []
    for si, s in enumerate(sigmas):
        samples = coding_cost_samples(mode, s, rho, trials, seed, workers, si)
        index = plugin_entropy_bits(k for k, _ in samples)
        bound = math.fsum(b for _, b in samples) / len(samples)
        rows.append([mutual_information_bits(1, rho * rho, s * s), bound, index, bound + index])
    return Table(["info", "bound", "index", "sum"], rows,
                 units=f"info[bits] bound[bits] index[bits] sum[bits]; mode={mode} rho={rho!r} "
                       f"trials={trials} sigma={';'.join(repr(float(s)) for s in sigmas)}")


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")


# ---------------------------------------------------------------- verification

@dataclass
class Check:
    check_name: str
    expected: float
    observed: float
    tolerance: float
    passed: bool

    def as_dict(self):
        return {"check_name": self.check_name, "expected": self.expected, "observed": self.observed,
                "tolerance": self.tolerance, "pass": bool(self.passed)}


@dataclass
class Instance:
    name: str
    pair: object
    kl: float          # nats
    d_inf: float       # nats
    dim: int = 0


def builtin_instances() -> list[Instance]:
    out = []
    two = DiscretePair([0.9, 0.1], [0.5, 0.5])
    out.append(Instance("two_point", two, two.kl, two.d_inf))
    same = DiscretePair([0.2, 0.3, 0.5], [0.2, 0.3, 0.5])
    out.append(Instance("q_equals_p", same, 0.0, 0.0))
    rnd = DiscretePair.random(np.random.default_rng(20240501), 6)
    out.append(Instance("random_discrete", rnd, rnd.kl, rnd.d_inf))
    for name, spec in [("gaussian_1d", GaussianChannelSpec.make(1, 1.0, 3.0, mu=1.0)),
                       ("gaussian_2d", GaussianChannelSpec.make(2, 1.0, 2.0, mu=(0.5, -1.0)))]:
        pair = GaussianPair(spec)
        out.append(Instance(name, pair, kl_divergence(spec), pair.params.log_sup, spec.d))
    return out


def run_grs(inst: Instance, trials: int, seed: int, tag: int):
    chain = LevelChain(inst.pair, GRS, SamplerConfig())
    return [agrs_sample(inst.pair, GRS, SharedRandomness.substream(seed, 4, tag, t), chain=chain)
            for t in range(trials)]


def verify_suite(trials: int = 10_000, seed: int = 0, equivalence_trials: int = 500) -> list[Check]:
    checks: list[Check] = []
    for tag, inst in enumerate(builtin_instances()):
        traces = run_grs(inst, trials, seed, tag)
        ks = [t.index for t in traces]
        mean_k, se_k = mean_and_se(ks)
        expected_k = math.exp(inst.d_inf)
        if inst.name == "q_equals_p":
            checks.append(Check(f"{inst.name}:index_always_one", 1.0, float(max(ks)), 0.0, max(ks) == 1))
        else:
            checks.append(Check(f"{inst.name}:mean_index", expected_k, mean_k, 3 * se_k,
                                abs(mean_k - expected_k) <= 3 * se_k))
        log_k = [math.log(k) for k in ks]
        mean_log, se_log = mean_and_se(log_k)
        bound = inst.kl + 1.0 + _LN2
        se_log = 0.0 if math.isnan(se_log) else se_log
        checks.append(Check(f"{inst.name}:log_index_bound", bound, mean_log, 3 * se_log,
                            mean_log <= bound + 3 * se_log))
        h_nats = plugin_entropy_bits(ks) * _LN2
        c = inst.kl
        h_bound = c + math.log(c + 1.0) + 3.63
        checks.append(Check(f"{inst.name}:index_entropy_bound", h_bound, h_nats, 0.0, h_nats <= h_bound))
        ok = all(survival_bound_check(t) for t in traces)
        checks.append(Check(f"{inst.name}:survival_bound", 1.0, float(ok), 0.0, ok))
        same = 0
        for t in range(equivalence_trials):
            a = agrs_sample(inst.pair, GRS, SharedRandomness.substream(seed, 5, tag, t))
            b = agrs_sample_recursive(inst.pair, GRS, SharedRandomness.substream(seed, 5, tag, t))
            same += a.index == b.index and _same_point(a.sample, b.sample)
        checks.append(Check(f"{inst.name}:recursive_equivalence", float(equivalence_trials), float(same),
                            0.0, same == equivalence_trials))
    return checks


def _same_point(x, y) -> bool:
    return bool(np.array_equal(np.asarray(x), np.asarray(y)))
