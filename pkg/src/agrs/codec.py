"""Decodable AGRS for 1D Gaussian channels.

Target ``Q = N(mu, rho2)`` and proposal ``P = N(0, sigma2 + rho2)``.  All
bounds live in the CDF space of ``P``.  The bound widths ``w_k = P(B_k)`` come
from a *reference chain*, the level recursion run once for the zero-mean
target, so the receiver knows every width without knowing ``mu``.  At step k
the sender slides a window of width ``w_k`` over the target superlevel
interval, and the candidate ``Y_k`` is produced by dithered quantization:

    N_k = floor(centre_k / w_k - V_k + 1/2),   Y_k = (N_k + V_k) w_k,

which is uniform on ``(centre_k - w_k/2, centre_k + w_k/2]``.  ``X_k`` is the
proposal quantile of ``Y_k``.  After acceptance only ``K`` and ``N_K`` are
sent; the receiver replays the dithers.

Three width modes:

``exact``     float widths, ``N`` in a fixed-width field;
``integer``   widths widened to ``1/M`` for an integer ``M``, ``N`` sent in
              ``ceil(log2 M)`` bits;
``rational``  widths rounded up to ``a / 2**32`` and ``N`` sent by bits-back
              quantization at a net cost of ``log2(b/a)`` bits.

Per step the variates are read as: dither ``V_k`` first, then the acceptance
uniform ``U_k``.
"""
from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .bbq import MessageRegister, RationalWindow, bbq_decode, bbq_encode, quantize_index, rational_width
from .codes import BitReader, BitWriter, elias_delta, field_width, read_elias_delta
from .errors import (ChainTruncated, ContainmentViolation, DecodeError, IterationCap,
                     WindowOverflow)
from .gaussian import GaussianChannelSpec, GaussianPair, ratio_params
from .rng import SharedRandomness
from .sampler import LevelChain, SamplerConfig, acceptance_prob
from .specfun import std_normal_cdf, std_normal_quantile, std_normal_sf

MODES = ("exact", "integer", "rational")
RATIONAL_DENOMINATOR = 1 << 32
CONTAINMENT_TOL = 1e-12
_SQRT2 = math.sqrt(2.0)
_MESSAGE_KEY = 0x6D7367
_SQRT2PI = math.sqrt(2.0 * math.pi)
_NARROW_NODES, _NARROW_WEIGHTS = np.polynomial.legendre.leggauss(20)


def normal_interval_mass(a: float, b: float) -> float:
    """Standard normal mass of [a, b] to full relative precision."""
    if b <= a:
        return 0.0
    if b - a < 0.5:
        # narrow: a CDF difference would cancel
        half, mid = 0.5 * (b - a), 0.5 * (a + b)
        z = mid + half * _NARROW_NODES
        return float(half * np.dot(_NARROW_WEIGHTS, np.exp(-0.5 * z * z))) / _SQRT2PI
    if a >= 0.0:
        return std_normal_sf(a) - std_normal_sf(b)
    if b <= 0.0:
        return std_normal_cdf(b) - std_normal_cdf(a)
    return 0.5 * (math.erf(b / _SQRT2) + math.erf(-a / _SQRT2))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)
_CANCELLATION = 1e-3


def residual_mass(level: float, r2: float, mu: float, rho2: float, sigma2: float) -> float:
    """``Q(H) - L P(H)`` for the 1D channel, ``H = [nu - r, nu + r]``.

    Taken as the difference of masses while that is well conditioned, and
    otherwise as the quadrature of ``p(x) (r(x) - L)`` over ``H``, whose
    integrand is accurate to full relative precision.
    """
    if r2 <= 0:
        return 0.0
    params = ratio_params(GaussianChannelSpec.make(1, rho2, sigma2, mu=mu))
    r, nu = math.sqrt(r2), params.nu[0]
    sd, rho = math.sqrt(rho2 + sigma2), math.sqrt(rho2)
    q_mass = normal_interval_mass((nu - r - mu) / rho, (nu + r - mu) / rho)
    direct = q_mass - level * normal_interval_mass((nu - r) / sd, (nu + r) / sd)
    if direct > _CANCELLATION * q_mass:
        return direct
    x = nu + r * _GL_NODES
    z = x / sd
    # ln r(x) - ln L = (r^2 - (x - nu)^2) / (2 kappa^2)
    gap = (r2 - (x - nu) ** 2) / (2.0 * params.kappa2)
    p = np.exp(-0.5 * z * z) / (sd * _SQRT2PI)
    return float(level * r * np.dot(_GL_WEIGHTS, p * np.expm1(gap)))


def _centered_mass(half_width: float) -> float:
    # mass of [-h, h]; erf keeps full relative precision for small h
    return math.erf(half_width / _SQRT2)


# ---------------------------------------------------------------- reference chain

@dataclass
class ReferenceChain:
    """Widths ``w_k = P(B_k)`` shared by sender and receiver.

    ``intervals[k-1]`` is the CDF-space bound of step k for the zero-mean
    target (centred on 1/2); ``levels`` and ``survivals`` are ``L^0_k`` and
    ``S^0_k``.  For ``rational`` mode ``fractions[k-1] = (a, b)`` with
    ``w_k == a / b`` exactly.
    """
    rho2: float
    sigma2: float
    mode: str
    widths: list[float]
    intervals: list[tuple[float, float]]
    levels: list[float]
    survivals: list[float]
    fractions: list[tuple[int, int]] = field(default_factory=list)
    truncated: bool = False
    _targets: OrderedDict = field(default_factory=OrderedDict, repr=False)

    def __len__(self):
        return len(self.widths)

    @property
    def sd(self) -> float:
        return math.sqrt(self.rho2 + self.sigma2)

    def width(self, k: int) -> float:
        if k > len(self.widths):
            raise ChainTruncated(f"chain truncated: step {k} beyond the {len(self.widths)} built steps")
        return self.widths[k - 1]

    def fraction(self, k: int) -> tuple[int, int]:
        self.width(k)
        return self.fractions[k - 1]

    def target(self, mu: float, cache_size: int = 256) -> LevelChain:
        """Memoised level chain for the target ``N(mu, rho2)``."""
        mu = float(mu)
        hit = self._targets.get(mu)
        if hit is not None:
            self._targets.move_to_end(mu)
            return hit
        pair = CodecPair(mu, self.rho2, self.sigma2)
        chain = LevelChain(pair, WindowBounds(self),
                           SamplerConfig(max_steps=len(self.widths), survival_floor=0.0))
        self._targets[mu] = chain
        if len(self._targets) > cache_size:
            self._targets.popitem(last=False)
        return chain


def _shape_width(raw: float, mode: str) -> tuple[float, tuple[int, int] | None]:
    if mode == "exact":
        return raw, None
    if mode == "integer":
        # widen: 1/floor(1/w) >= w
        return 1.0 / max(1, math.floor(1.0 / raw)), None
    a, b = rational_width(raw, RATIONAL_DENOMINATOR)
    return a / b, (a, b)


def build_reference_chain(rho2: float, sigma2: float, mode: str = "exact",
                          max_steps: int = 400, width_floor: float = 1e-12,
                          survival_floor: float = 1e-20) -> ReferenceChain:
    """Run the zero-mean level recursion with ``B^0_k = H^0_{k-1}``.

    Stops once the next width falls below ``width_floor`` or the survival
    drops under ``survival_floor``; hitting ``max_steps`` first sets ``truncated``.
    """
    if not (rho2 > 0 and sigma2 > 0):
        raise ValueError("rho2 and sigma2 must be positive")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    pair = CodecPair(0.0, rho2, sigma2)
    sd = pair.sd
    out = ReferenceChain(rho2, sigma2, mode, [], [], [], [])
    level, survival, raw = 0.0, 1.0, 1.0
    for _ in range(max_steps):
        w, frac = _shape_width(raw, mode)
        level = pair.advance_level(level, survival / w)
        r2 = pair.radius_sq(level)
        next_raw = _centered_mass(math.sqrt(max(r2, 0.0)) / sd)
        next_survival = pair.residual_mass(level)
        out.widths.append(w)
        out.intervals.append((0.5 - w / 2, 0.5 + w / 2))
        out.levels.append(level)
        out.survivals.append(survival)
        if frac is not None:
            out.fractions.append(frac)
        if next_raw < width_floor or next_survival < survival_floor:
            break
        survival, raw = max(next_survival, 0.0), next_raw
    else:
        out.truncated = True
    return out


# ---------------------------------------------------------------- windows and DQ

class Window(NamedTuple):
    lo: float
    hi: float
    width: float
    centre: float


def choose_offset(target_interval: tuple[float, float], width: float,
                  tol: float = CONTAINMENT_TOL) -> float:
    """Shift ``c`` of the reference window ``(1/2 - w/2, 1/2 + w/2]``.

    The shifted window is centred on the target interval and then clamped
    into [0, 1].  Returns ``c = centre - 1/2``.
    """
    lo, hi = target_interval
    if not 0.0 < width <= 1.0:
        raise WindowOverflow(f"window overflow: width {width}")
    if hi - lo > width + tol:
        raise ContainmentViolation(
            f"containment violation: target width {hi - lo:.6g} exceeds bound width {width:.6g}")
    half = width / 2
    centre = min(max((lo + hi) / 2, half), 1.0 - half)
    return centre - 0.5


def window_for(offset: float, width: float) -> Window:
    centre = 0.5 + offset
    return Window(centre - width / 2, centre + width / 2, width, centre)


def dq_candidate(centre: float, width: float, dither: float, scale: float = 1.0) -> tuple[int, float, float]:
    """(N, Y, X) for the window of the given centre and width.

    ``Y`` is uniform on ``(centre - width/2, centre + width/2]`` when the
    dither is uniform; ``X = scale * Phi^{-1}(Y)``.
    """
    n = math.floor(centre / width - dither + 0.5)
    y = (n + dither) * width
    if not 0.0 < y < 1.0:
        raise WindowOverflow(f"window overflow: Y = {y!r}")
    return n, y, scale * std_normal_quantile(y)


def n_offset_base(dither: float) -> int:
    """Smallest N whose reconstruction lies in (0, 1]: floor(1 - V)."""
    return math.floor(1.0 - dither)


def n_field_width(mode: str, width: float) -> int:
    if mode == "integer":
        return field_width(round(1.0 / width))
    # N - N_min <= 1/w
    return field_width(math.floor((1.0 / width) * (1.0 + 1e-12)) + 1)


# ---------------------------------------------------------------- target side

class CodecPair(GaussianPair):
    """1D Gaussian pair whose superlevel masses are normal interval masses."""

    def __init__(self, mu: float, rho2: float, sigma2: float):
        super().__init__(GaussianChannelSpec.make(1, rho2, sigma2, mu=mu))
        self.mu = float(mu)
        self.rho = math.sqrt(rho2)

    def _masses(self, level):
        r2 = self.radius_sq(level)
        hit = self._mass_cache.get(r2)
        if hit is None:
            if r2 == math.inf:
                hit = (1.0, 1.0)
            elif r2 <= 0:
                hit = (0.0, 0.0)
            else:
                r, nu = math.sqrt(r2), self.params.nu[0]
                hit = (normal_interval_mass((nu - r - self.mu) / self.rho, (nu + r - self.mu) / self.rho),
                       normal_interval_mass((nu - r) / self.sd, (nu + r) / self.sd))
            self._mass_cache[r2] = hit
        return hit

    def proposal_mass_of_bound(self, bound) -> float:
        return 1.0 if bound is None else bound.width

    def residual_mass(self, level: float) -> float:
        if level <= 0:
            return 1.0 - level
        return residual_mass(level, self.radius_sq(level), self.mu, self.spec.rho2, self.spec.sigma2)


class WindowBounds:
    """Bounds schedule: reference widths, windows centred on the target."""

    def __init__(self, ref: ReferenceChain):
        self.ref = ref

    def bound(self, k, pair, prev_level):
        w = self.ref.width(k)
        if k == 1:
            return Window(0.0, 1.0, w, 0.5)
        offset = choose_offset(pair.superlevel_bound(prev_level), w)
        return window_for(offset, w)


# ---------------------------------------------------------------- protocol

@dataclass(frozen=True)
class CodecConfig:
    max_steps: int = 10**5
    message: MessageRegister | None = None   # rational mode only
    message_bits: int = 256


@dataclass(frozen=True)
class Diagnostics:
    bits_k: int
    bits_n: float
    neg_log2_bound: float
    dither: float
    padded_bits: int = 0


@dataclass
class EncodedSample:
    index: int
    n: int
    bitstream: bytes
    nbits: int
    sample: float
    diagnostics: Diagnostics
    message: MessageRegister | None = None

    @property
    def total_bits(self) -> float:
        return self.diagnostics.bits_k + self.diagnostics.bits_n


def _rational_window(win: Window, a: int, b: int) -> RationalWindow:
    # the window is (kappa, kappa + a/b]; 1 - a/b is exact for b a power of two
    kappa = min(max(win.lo, 0.0), 1.0 - a / b)
    return RationalWindow(kappa, a, b)


def _default_message(rng: SharedRandomness, bits: int) -> MessageRegister:
    # a side stream of the same seed; the shared variate stream is untouched
    seq = np.random.SeedSequence(entropy=rng.seed, spawn_key=rng.path + (_MESSAGE_KEY,))
    return MessageRegister.random(bits, seed=int(seq.generate_state(1)[0]))


def encode(mu: float, chain: ReferenceChain, rng: SharedRandomness,
           config: CodecConfig = CodecConfig()) -> EncodedSample:
    """Draw X ~ N(mu, rho2) with AGRS and encode it as (K, N_K)."""
    target = chain.target(mu)
    pair = target.pair
    sd = chain.sd
    rational = chain.mode == "rational"
    msg = None
    if rational:
        msg = (config.message.copy() if config.message is not None
               else _default_message(rng, config.message_bits))
        if msg.value.bit_length() < 40:
            msg.pad(64)
    limit = min(config.max_steps, len(chain))
    for k in range(1, limit + 1):
        st = target.step(k)
        win = st.bound
        v = rng.dither()
        if rational:
            a, b = chain.fraction(k)
            rwin = _rational_window(win, a, b)
            index = msg.peek(a)
            n, y_index = quantize_index(index, rwin, v)
            y = float(y_index - index)
            if not 0.0 < y < 1.0:
                raise WindowOverflow(f"window overflow: Y = {y!r}")
            x = sd * std_normal_quantile(y)
        else:
            n, y, x = dq_candidate(win.centre, win.width, v, sd)
        u = rng.uniform()
        beta = acceptance_prob(pair.ratio(x), st.prev_level, st.survival, st.bound_mass)
        if u < beta:
            return _emit(chain, k, n, v, x, msg, rwin if rational else None)
    if limit == len(chain) and limit < config.max_steps:
        raise ChainTruncated(f"chain truncated: no acceptance within {limit} reference steps")
    raise IterationCap(f"iteration cap: {config.max_steps} steps")


def _emit(chain, k, n, v, x, msg, rwin) -> EncodedSample:
    w = chain.width(k)
    out = BitWriter()
    out.write(elias_delta(k))
    bits_k = len(out)
    if rwin is not None:
        before = msg.growth
        padded = msg.padded_bits
        bbq_encode(msg, rwin, v)
        growth = msg.growth / before
        bits_n = math.log2(growth.numerator) - math.log2(growth.denominator)
        out.write_bytes(msg.to_bytes())
        diag = Diagnostics(bits_k, bits_n, -math.log2(w), v, msg.padded_bits - padded)
    else:
        width = n_field_width(chain.mode, w)
        out.write_uint(n - n_offset_base(v), width)
        diag = Diagnostics(bits_k, float(width), -math.log2(w), v)
    return EncodedSample(k, n, out.to_bytes(), len(out), x, diag, msg)


def decode_with_message(bitstream: bytes, chain: ReferenceChain,
                        rng: SharedRandomness) -> tuple[float, MessageRegister | None]:
    """Receiver: returns X and, in rational mode, the restored message."""
    reader = BitReader(bitstream)
    try:
        k = read_elias_delta(reader)
    except (EOFError, ValueError) as exc:
        raise DecodeError(f"decode error: unreadable index ({exc})") from None
    if k > len(chain):
        raise DecodeError(f"decode error: index {k} beyond the reference chain")
    v = 0.0
    for _ in range(k):
        v = rng.dither()
        rng.uniform()
    w = chain.width(k)
    try:
        if chain.mode == "rational":
            size = int.from_bytes(reader.read_bytes(4), "big")
            msg = MessageRegister.from_bytes(size.to_bytes(4, "big") + reader.read_bytes(size))
            a, b = chain.fraction(k)
            msg, y = bbq_decode(msg, a, b, v)
        else:
            msg = None
            n = n_offset_base(v) + reader.read_uint(n_field_width(chain.mode, w))
            y = (n + v) * w
    except EOFError:
        raise DecodeError("decode error: bitstream truncated") from None
    if not 0.0 < y < 1.0:
        raise DecodeError(f"decode error: reconstruction {y!r} outside (0, 1)")
    return chain.sd * std_normal_quantile(y), msg


def decode(bitstream: bytes, chain: ReferenceChain, rng: SharedRandomness) -> float:
    return decode_with_message(bitstream, chain, rng)[0]
