import math
from dataclasses import replace

import mpmath
import numpy as np
import pytest
from scipy.integrate import quad

from cvmdi import (
    DomainError,
    FadingParams,
    InfeasibleLossError,
    ProtocolParams,
    QuadratureKind,
    QuadratureRule,
    Reference,
    asymmetry_ratio,
    averaged_key_rate,
    expectation_over_fading,
    fading_cdf,
    fading_pdf,
    fixed_channel_key_rate,
    mean_loss_db,
    mean_transmissivity,
    point_key_rate,
    solve_sigma_b,
    solve_sigma_b_pair,
    weibull_params,
)
from cvmdi.sweeps import split_loss

SIGMAS = [0.05, 0.1, 0.3, 1.0, 3.0]
PP = ProtocolParams()


def direct_integral(g, f: FadingParams, eta_max=None) -> float:
    """Adaptive integral of ``g(eta) pdf(eta)`` over ``(0, eta_max]`` in ``t = ln(eta0/eta)``.

    Uses the density itself, not the exponential substitution.
    """
    t_at = lambda x: 0.5 * (x / f.x_scale) ** (f.gamma_s / 2)
    t0 = 0.0 if eta_max is None else math.log(f.eta0 / eta_max)
    pts = [t for t in (t_at(x) for x in (1e-3, 1e-2, 0.1, 0.5, 1, 2, 5, 10, 20)) if t > t0]

    def integrand(t):
        eta = f.eta0 * math.exp(-t)
        return g(eta) * fading_pdf(eta, f) * eta

    return quad(integrand, t0, t_at(50.0), points=pts, limit=500, epsabs=1e-15, epsrel=1e-12)[0]


class TestWeibullParams:
    def test_eta0_at_h1(self):
        f = weibull_params(1.0, 1.0, 1.0)
        assert abs(f.eta0 - math.sqrt(1 - math.exp(-2))) < 1e-12
        assert f.eta0 == pytest.approx(0.92987350, abs=1e-8)

    def test_shape_and_scale_high_precision(self):
        mpmath.mp.dps = 30
        h = mpmath.mpf(1)
        eta0_sq = 1 - mpmath.exp(-2 * h)
        den = 1 - mpmath.exp(-4 * h) * mpmath.besseli(0, 4 * h)
        lg = mpmath.log(2 * eta0_sq / den)
        gamma = 8 * h * mpmath.exp(-4 * h) * mpmath.besseli(1, 4 * h) / den / lg
        scale = lg ** (-1 / gamma)
        f = FadingParams(1.0, 1.0, 1.0)
        assert f.gamma_s == pytest.approx(float(gamma), rel=1e-13)
        assert f.l_scale == pytest.approx(float(scale), rel=1e-13)

    def test_golden(self):
        f = FadingParams(1.0, 1.0, 1.0)
        assert f.gamma_s == pytest.approx(2.3128960757064765, rel=1e-12)
        assert f.l_scale == pytest.approx(1.113611466078763, rel=1e-12)

    def test_only_ratios_matter(self):
        a, b = FadingParams(1.0, 2.0, 0.5), FadingParams(3.0, 6.0, 1.5)
        assert a.gamma_s == pytest.approx(b.gamma_s, rel=1e-14)
        assert a.eta0 == pytest.approx(b.eta0, rel=1e-14)
        assert mean_transmissivity(a) == pytest.approx(mean_transmissivity(b), rel=1e-12)

    @pytest.mark.parametrize("args", [(0.0, 1.0, 0.1), (1.0, -1.0, 0.1), (1.0, 1.0, -0.1)])
    def test_domain(self, args):
        with pytest.raises(DomainError):
            FadingParams(*args)


class TestDensity:
    def test_support(self):
        f = FadingParams(1.0, 1.0, 0.4)
        assert fading_pdf(f.eta0 * 1.0001, f) == 0.0
        assert fading_pdf(0.0, f) == 0.0
        assert fading_pdf(-0.2, f) == 0.0
        assert fading_pdf(0.5, f) > 0.0

    def test_deep_tail_is_quiet(self):
        f = FadingParams(1.0, 1.0, 0.3)
        with np.errstate(all="raise"):
            vals = fading_pdf(np.array([1e-300, 1e-10, 0.5]), f)
        assert np.all(np.isfinite(vals)) and vals[0] == 0.0

    @pytest.mark.parametrize("sigma", SIGMAS)
    def test_normalization(self, sigma):
        f = FadingParams(1.0, 1.0, sigma)
        assert abs(direct_integral(lambda e: 1.0, f) - 1.0) < 1e-10

    @pytest.mark.parametrize("sigma", SIGMAS)
    def test_cdf_matches_integrated_pdf(self, sigma):
        f = FadingParams(1.0, 1.0, sigma)
        for eta in (0.2 * f.eta0, 0.6 * f.eta0, 0.95 * f.eta0):
            assert fading_cdf(eta, f) == pytest.approx(direct_integral(lambda e: 1.0, f, eta), abs=1e-10)

    def test_wider_wander_dominates(self):
        etas = np.linspace(0.01, 0.92, 60)
        cdfs = [fading_cdf(etas, FadingParams(1.0, 1.0, s)) for s in SIGMAS]
        for lo, hi in zip(cdfs, cdfs[1:]):
            assert np.all(hi >= lo)

    def test_inverse_cdf_never_exceeds_eta0(self):
        f = FadingParams(1.0, 1.0, 0.7)
        u = np.linspace(0.0, 1.0 - 1e-12, 1001)
        eta = f.eta_from_cdf(u)
        assert np.all(eta <= f.eta0) and np.all(eta >= 0)
        assert np.allclose(fading_cdf(eta[1:-1], f), 1.0 - u[1:-1], atol=1e-9)


class TestExpectation:
    @pytest.mark.parametrize("kind", list(QuadratureKind))
    @pytest.mark.parametrize("n", [2, 3, 5, 16, 64])
    def test_constant_is_exact(self, kind, n):
        for sigma in SIGMAS:
            r = expectation_over_fading(lambda e: np.ones_like(e), FadingParams(1, 1, sigma), QuadratureRule(n, kind))
            assert abs(r - 1.0) < 1e-12

    def test_degenerate(self):
        f = FadingParams(1.0, 1.0, 0.0)
        assert mean_transmissivity(f) == pytest.approx(f.eta0**2, rel=1e-15)
        assert mean_transmissivity(f) == pytest.approx(0.86466, abs=1e-5)

    @pytest.mark.parametrize("sigma", SIGMAS)
    def test_against_direct_adaptive_integral(self, sigma):
        f = FadingParams(1.0, 1.0, sigma)
        assert mean_transmissivity(f) == pytest.approx(direct_integral(lambda e: e * e, f), abs=1e-10)

    def test_sigma_equals_beta_anchor(self):
        f = FadingParams(1.0, 1.0, 1.0)
        assert abs(mean_transmissivity(f) - direct_integral(lambda e: e * e, f)) < 1e-8
        assert mean_loss_db(f) == pytest.approx(4.775286601440568, abs=1e-9)

    def test_tiny_wander_approaches_floor(self):
        assert mean_loss_db(FadingParams(1, 1, 1e-4)) == pytest.approx(FadingParams(1, 1, 0).floor_loss_db(), abs=1e-6)

    def test_monotone_in_sigma(self):
        taus = [mean_transmissivity(FadingParams(1, 1, s)) for s in np.linspace(0.01, 5, 40)]
        assert np.all(np.diff(taus) < 0)


class TestSolveSigma:
    def test_floor(self):
        floor = FadingParams(1, 1, 0).floor_loss_db()
        assert solve_sigma_b(floor + 1e-10) == 0.0

    def test_infeasible_names_floor(self):
        with pytest.raises(InfeasibleLossError, match="0.631523"):
            solve_sigma_b(0.5)
        with pytest.raises(InfeasibleLossError, match="1.26305"):
            solve_sigma_b_pair(1.0, 0.54)

    @pytest.mark.parametrize("target", [2.0, 5.0, 10.0])
    def test_round_trip(self, target):
        s = solve_sigma_b(target)
        assert abs(mean_loss_db(FadingParams(1, 1, s)) - target) < 1e-6

    def test_monotone(self):
        s = [solve_sigma_b(t) for t in (1.0, 2.0, 4.0, 8.0, 16.0)]
        assert np.all(np.diff(s) > 0)

    def test_pair_constraint(self):
        sa, sb = solve_sigma_b_pair(12.0, 0.54)
        assert sa == pytest.approx(0.54 * sb, rel=1e-15)
        total = mean_loss_db(FadingParams(1, 1, sa)) + mean_loss_db(FadingParams(1, 1, sb))
        assert total == pytest.approx(12.0, abs=1e-6)

    def test_pair_symmetric_case_matches_half_split(self):
        sa, sb = solve_sigma_b_pair(9.0, 1.0)
        assert sa == sb
        assert sb == pytest.approx(solve_sigma_b(4.5), rel=1e-8)

    def test_asymmetry_ratio(self):
        assert asymmetry_ratio(1.0, 0.3) == 0.3
        assert asymmetry_ratio(0.54, 2.0) == pytest.approx(1.08)
        with pytest.raises(DomainError):
            asymmetry_ratio(0.0, 1.0)


# values from an independent nested adaptive integration in the substituted variables
ORACLE_RATES = {2.0: 0.4058049131639948, 10.0: 0.006570793687493469}


class TestAveragedKeyRate:
    def test_degenerate_fading(self):
        f = FadingParams(1.0, 1.0, 0.0)
        expected = point_key_rate(PP, f.eta0**2, f.eta0**2)
        assert averaged_key_rate(PP, f, f) == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize("loss", sorted(ORACLE_RATES))
    def test_against_adaptive_oracle(self, loss):
        ch = split_loss(loss)
        assert averaged_key_rate(PP, ch.fa, ch.fb) == pytest.approx(ORACLE_RATES[loss], rel=1e-9)

    @pytest.mark.parametrize("loss", [2.0, 8.0, 25.0])
    def test_reference_symmetry(self, loss):
        ch = split_loss(loss)
        a = averaged_key_rate(PP, ch.fa, ch.fb)
        b = averaged_key_rate(replace(PP, reference=Reference.BOB), ch.fa, ch.fb)
        assert abs(a - b) < 1e-9

    @pytest.mark.parametrize("loss", [2.0, 6.0, 20.0, 35.0])
    def test_node_doubling(self, loss):
        ch = split_loss(loss)
        r16 = averaged_key_rate(PP, ch.fa, ch.fb, QuadratureRule(16))
        r32 = averaged_key_rate(PP, ch.fa, ch.fb, QuadratureRule(32))
        assert abs(r16 - r32) < 1e-9

    def test_unclipped_never_exceeds_clipped(self):
        for loss in (2.0, 5.0, 15.0):
            ch = split_loss(loss)
            clipped = averaged_key_rate(PP, ch.fa, ch.fb)
            raw = averaged_key_rate(PP, ch.fa, ch.fb, clip=False)
            assert raw <= clipped

    def test_unclipped_equals_clipped_without_negative_support(self):
        f = FadingParams(1.0, 1.0, 0.0)
        assert averaged_key_rate(PP, f, f, clip=False) == averaged_key_rate(PP, f, f)

    def test_clipped_average_not_below_dead_fixed_channel(self):
        for loss in (3.0, 10.0, 30.0):
            ch = split_loss(loss)
            fixed = fixed_channel_key_rate(PP, ch.tau_a, ch.tau_b)
            assert fixed == 0.0
            assert averaged_key_rate(PP, ch.fa, ch.fb) >= fixed

    def test_literal_laguerre_rule_runs(self):
        ch = split_loss(10.0)
        r = averaged_key_rate(PP, ch.fa, ch.fb, QuadratureRule(64, QuadratureKind.GAUSS_LAGUERRE))
        assert 0.0 < r < 1.0
