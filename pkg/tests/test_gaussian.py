import math

import numpy as np
import pytest
from scipy import integrate, stats

from agrs.gaussian import (GaussianChannelSpec, GaussianPair, divergences, expected_kl_over_prior,
                           expected_runtime_given_mu, kl_divergence, mean_runtime_over_prior,
                           mutual_information_bits, optimal_overdispersion, ratio_params,
                           sphere_mass_proposal, sphere_mass_target, superlevel_radius_sq)


def test_optimum_marker():
    s2 = optimal_overdispersion(1.0, 9.0)
    assert math.sqrt(s2) == pytest.approx(4.299631726, abs=5e-10)
    assert mean_runtime_over_prior(4, 1.0, 9.0, s2) == pytest.approx(1441.999, abs=1e-3)


def test_optimum_is_minimum():
    s2 = optimal_overdispersion(1.0, 9.0)
    best = mean_runtime_over_prior(4, 1.0, 9.0, s2)
    for f in (0.9, 0.99, 1.01, 1.1, 2.0):
        assert mean_runtime_over_prior(4, 1.0, 9.0, s2 * f) > best


def test_runtime_diverges_towards_sigma():
    vals = [mean_runtime_over_prior(4, 1.0, 9.0, (3.0 + e) ** 2) for e in (0.5, 0.1, 0.01, 0.001)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert mean_runtime_over_prior(4, 1.0, 9.0, 9.0) == math.inf


def test_runtime_given_mu_equals_sup_ratio():
    spec = GaussianChannelSpec.make(1, 1.0, 3.0, mu=1.0)
    assert expected_runtime_given_mu(spec) == pytest.approx(2 * math.exp(1 / 6), rel=1e-14)
    assert math.exp(ratio_params(spec).log_sup) == pytest.approx(2 * math.exp(1 / 6), rel=1e-12)


def test_ratio_matches_density_quotient():
    spec = GaussianChannelSpec.make(3, 0.7, 2.0, s2=2.5, mu=(0.3, -1.0, 2.0))
    pair = GaussianPair(spec)
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.normal(size=3) * 2
        q = stats.multivariate_normal.logpdf(x, spec.mu, 0.7)
        p = stats.multivariate_normal.logpdf(x, np.zeros(3), 3.2)
        assert pair.log_ratio(x) == pytest.approx(q - p, abs=1e-10)


def test_superlevel_radius_boundary():
    spec = GaussianChannelSpec.make(2, 1.0, 4.0, mu=(1.0, 0.5))
    pair = GaussianPair(spec)
    level = 1.3
    r = math.sqrt(superlevel_radius_sq(level, pair.params, 2))
    x = np.array(pair.params.nu) + r * np.array([0.6, 0.8])
    assert pair.ratio(x) == pytest.approx(level, rel=1e-12)


@pytest.mark.parametrize("mu", [0.0, 1.0, -2.5])
def test_sphere_masses_by_quadrature_1d(mu):
    spec = GaussianChannelSpec.make(1, 1.0, 3.0, mu=mu)
    pair = GaussianPair(spec)
    for level in (0.2, 1.0, 1.7):
        r2 = superlevel_radius_sq(level, pair.params, 1)
        if r2 <= 0:
            continue
        nu, r = pair.params.nu[0], math.sqrt(r2)
        q = integrate.quad(lambda x: stats.norm.pdf(x, mu, 1.0), nu - r, nu + r)[0]
        p = integrate.quad(lambda x: stats.norm.pdf(x, 0, 2.0), nu - r, nu + r)[0]
        assert sphere_mass_target(r2, spec) == pytest.approx(q, abs=1e-12)
        assert sphere_mass_proposal(r2, spec) == pytest.approx(p, abs=1e-12)


def test_residual_positivity():
    spec = GaussianChannelSpec.make(3, 1.0, 2.0, mu=(1.0, 1.0, -1.0))
    pair = GaussianPair(spec)
    for level in np.linspace(0.01, math.exp(pair.params.log_sup), 50):
        assert pair.target_mass_above(level) >= level * pair.proposal_mass_above(level) - 1e-13


def test_kl_matches_scipy_entropy():
    spec = GaussianChannelSpec.make(1, 1.0, 4.0, s2=5.0, mu=2.0)
    x = np.linspace(-15, 15, 200_001)
    q = stats.norm.pdf(x, 2.0, 1.0)
    p = stats.norm.pdf(x, 0.0, math.sqrt(6.0))
    assert kl_divergence(spec) == pytest.approx(np.trapezoid(q * np.log(q / p), x), abs=1e-8)


def test_expected_kl_markers():
    s2 = optimal_overdispersion(1.0, 9.0)
    assert expected_kl_over_prior(4, 1.0, 9.0, s2) / math.log(2) == pytest.approx(7.164152419, abs=1e-8)
    assert expected_kl_over_prior(4, 1.0, 9.0, 9.0) / math.log(2) == pytest.approx(
        mutual_information_bits(4, 1.0, 9.0), abs=1e-12)


def test_divergence_ordering():
    for mu in (0.0, 0.5, 3.0):
        kl, dinf, _ = divergences(GaussianChannelSpec.make(2, 1.0, 2.0, mu=mu))
        assert 0 <= kl <= dinf


def test_spec_validation():
    with pytest.raises(ValueError):
        GaussianChannelSpec.make(2, 1.0, 1.0, mu=(1.0, 2.0, 3.0))
    with pytest.raises(ValueError):
        GaussianChannelSpec.make(1, -1.0, 1.0)
