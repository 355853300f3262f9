"""Special functions used by the Gaussian backend.

Everything here is a pure function of its arguments.  The normal CDF goes
through ``math.erfc``; the quantile is Acklam's rational approximation polished
by a Halley step; the incomplete gamma uses the usual series / Lentz continued
fraction split.
"""
from __future__ import annotations

import math

from .errors import ConvergenceError, DomainError

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)
_EPS = 1e-16
_TINY = 1e-300


def std_normal_cdf(x: float) -> float:
    """Phi(x) for the standard normal."""
    if math.isnan(x):
        raise DomainError("invalid argument: NaN")
    if x == math.inf:
        return 1.0
    if x == -math.inf:
        return 0.0
    # erfc keeps full relative precision in the lower tail
    return 0.5 * math.erfc(-x / _SQRT2)


def std_normal_sf(x: float) -> float:
    """Upper tail 1 - Phi(x), accurate for large positive x."""
    return std_normal_cdf(-x)


def std_normal_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / _SQRT2PI


# Acklam's coefficients
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    if p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log1p(-p))
        return -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                 / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    q = p - 0.5
    r = q * q
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))


def std_normal_quantile(p: float) -> float:
    """Inverse of :func:`std_normal_cdf` on the open unit interval."""
    if not (0.0 < p < 1.0):
        raise DomainError(f"domain error: quantile needs 0 < p < 1, got {p!r}")
    x = _acklam(p)
    # one Halley step; the residual is taken on the smaller tail
    if p < 0.5:
        e = std_normal_cdf(x) - p
    else:
        e = (1.0 - p) - std_normal_sf(x)
    u = e * _SQRT2PI * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def log_gamma(s: float) -> float:
    return math.lgamma(s)


def _gamma_series(s: float, x: float, max_terms: int) -> float:
    term = 1.0 / s
    total = term
    a = s
    for _ in range(max_terms):
        a += 1.0
        term *= x / a
        total += term
        if abs(term) < abs(total) * _EPS:
            return total * math.exp(-x + s * math.log(x) - math.lgamma(s))
    raise ConvergenceError(f"convergence failure: gamma series s={s}, x={x}")


def _gamma_cont_frac(s: float, x: float, max_terms: int) -> float:
    # modified Lentz for the upper tail Gamma(s, x) / Gamma(s)
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, max_terms + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h * math.exp(-x + s * math.log(x) - math.lgamma(s))
    raise ConvergenceError(f"convergence failure: gamma continued fraction s={s}, x={x}")


def regularized_lower_gamma(s: float, x: float, max_terms: int = 10_000) -> float:
    """P(s, x) = gamma(s, x) / Gamma(s)."""
    if s <= 0 or x < 0 or math.isnan(x):
        raise DomainError(f"domain error: regularized_lower_gamma({s}, {x})")
    if x == 0:
        return 0.0
    if x == math.inf:
        return 1.0
    if x < s + 1.0:
        return min(1.0, _gamma_series(s, x, max_terms))
    return max(0.0, 1.0 - _gamma_cont_frac(s, x, max_terms))


def regularized_upper_gamma(s: float, x: float, max_terms: int = 10_000) -> float:
    if s <= 0 or x < 0 or math.isnan(x):
        raise DomainError(f"domain error: regularized_upper_gamma({s}, {x})")
    if x == 0:
        return 1.0
    if x == math.inf:
        return 0.0
    if x < s + 1.0:
        return max(0.0, 1.0 - _gamma_series(s, x, max_terms))
    return min(1.0, _gamma_cont_frac(s, x, max_terms))


def chisq_cdf(dof: int, x: float) -> float:
    return regularized_lower_gamma(0.5 * dof, 0.5 * x)


def noncentral_chisq_cdf(dof: int, noncentrality: float, x: float,
                         tail_tol: float = 1e-14, max_terms: int = 100_000) -> float:
    """P[chi2(dof, noncentrality) <= x].

    Poisson(noncentrality / 2) mixture of central chi-square CDFs, summed
    outwards from the modal index until the unused Poisson mass drops below
    ``tail_tol``.
    """
    if dof < 1 or noncentrality < 0 or x < 0 or math.isnan(x) or math.isnan(noncentrality):
        raise DomainError(f"domain error: noncentral_chisq_cdf({dof}, {noncentrality}, {x})")
    if x == 0:
        return 0.0
    if x == math.inf:
        return 1.0
    half_lam = 0.5 * noncentrality
    if half_lam == 0:
        return chisq_cdf(dof, x)

    half_x = 0.5 * x
    if half_x == 0:
        # x/2 underflowed (x = 5e-324): treated as the CDF at 0
        return 0.0
    s0 = 0.5 * dof
    mode = int(math.floor(half_lam))
    log_lam = math.log(half_lam)

    def weight(j: int) -> float:
        return math.exp(-half_lam + j * log_lam - math.lgamma(j + 1.0))

    w_mode = weight(mode)
    p_mode = regularized_lower_gamma(s0 + mode, half_x)
    log_x = math.log(half_x)
    # g(a) = x^a e^-x / Gamma(a + 1) links neighbouring terms:
    # P(a + 1, x) = P(a, x) - g(a)
    # carried in logs: for tiny x the ratios overflow while g underflows
    log_g = (s0 + mode) * log_x - half_x - math.lgamma(s0 + mode + 1.0)
    total = w_mode * p_mode
    used = w_mode
    up_j, up_w, up_p, up_lg = mode, w_mode, p_mode, log_g
    down_j, down_w, down_p, down_lg = mode, w_mode, p_mode, log_g
    for _ in range(max_terms):
        # bounds on the Poisson mass not yet visited on either side
        ratio_up = half_lam / (up_j + 2)
        up_rest = up_w * half_lam / (up_j + 1) / (1.0 - ratio_up) if ratio_up < 1 else math.inf
        if down_j == 0:
            down_rest = 0.0
        else:
            ratio_down = (down_j - 1) / half_lam
            down_rest = down_w * down_j / half_lam / (1.0 - ratio_down) if ratio_down < 1 else math.inf
        if up_rest + down_rest < tail_tol or 1.0 - used < tail_tol:
            return min(1.0, max(0.0, total))
        up_w *= half_lam / (up_j + 1)
        up_p = max(0.0, up_p - math.exp(up_lg))
        up_j += 1
        up_lg += log_x - math.log(s0 + up_j)
        total += up_w * up_p
        used += up_w
        if down_j > 0:
            down_w *= down_j / half_lam
            down_lg += math.log(s0 + down_j) - log_x
            down_j -= 1
            down_p = min(1.0, down_p + math.exp(min(down_lg, 0.0)))
            total += down_w * down_p
            used += down_w
    raise ConvergenceError(
        f"convergence failure: noncentral_chisq_cdf({dof}, {noncentrality}, {x})")
