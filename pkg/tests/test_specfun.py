"""Tests for the interference kernel and the quadrature engine.

Frozen expected values were produced by independent oracles before the
main implementation: a midpoint Riemann sum with 1e7 panels on a
tail-substituted finite interval for the kernel, and a fixed-step
Simpson rule with 2e6 panels for the semi-infinite integrand family.
"""

import math

import numpy as np
import pytest
from scipy.special import hyp2f1 as scipy_hyp2f1

from hetsinr.errors import (
    AlphaOutOfRangeError,
    NonPositiveParameterError,
    QuadratureFailureError,
)
from hetsinr.specfun import (
    QuadratureSettings,
    gauss_2f1,
    integrate_semi_infinite,
    z_kernel,
    z_kernel_alpha4,
    z_kernel_hyp2f1,
)

# midpoint Riemann oracle, 1e7 panels of 2/(1+w^3) on [0, 1]
_KERNEL_131 = 1.6712976965294428
# fixed-step Simpson oracle, 2e6 panels of x*exp(-0.7 x^2 - 0.4 x^3.2)
_GAUSSISH = 0.42601472374242016

TAU_GRID = (0.1, 1.0, 10.0)
BHAT_GRID = (0.1, 1.0, 10.0)
ALPHA_GRID = (2.5, 3.0, 3.5, 4.0, 4.5)


class TestKernelValues:
    def test_zero_threshold(self):
        assert z_kernel(0.0, 4.0, 1.0) == 0.0

    def test_arctan_anchor(self):
        assert z_kernel(1.0, 4.0, 1.0) == pytest.approx(math.pi / 4, abs=1e-10)

    def test_riemann_oracle(self):
        assert z_kernel(1.0, 3.0, 1.0) == pytest.approx(_KERNEL_131, abs=1e-9)

    def test_biased_arctan_anchor(self):
        want = math.sqrt(2.0) * math.atan(2.0)
        assert z_kernel(2.0, 4.0, 0.5) == pytest.approx(want, abs=1e-10)

    def test_arctan_identity_grid(self):
        for tau in TAU_GRID:
            for b_hat in BHAT_GRID:
                got = z_kernel(tau, 4.0, b_hat)
                want = z_kernel_alpha4(tau, b_hat)
                assert abs(got - want) <= 1e-8

    def test_hypergeometric_identity_grid(self):
        for alpha in ALPHA_GRID:
            for tau in TAU_GRID:
                for b_hat in BHAT_GRID:
                    got = z_kernel(tau, alpha, b_hat)
                    want = z_kernel_hyp2f1(tau, alpha, b_hat)
                    assert got == pytest.approx(want, rel=1e-7)


class TestKernelProperties:
    def test_nondecreasing_in_threshold(self):
        taus = np.logspace(-4, 3, 60)
        for alpha in (2.7, 3.5, 4.0):
            for b_hat in (0.25, 1.0, 4.0):
                vals = [z_kernel(t, alpha, b_hat) for t in taus]
                assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_vanishes_at_origin(self):
        for tau in (1e-9, 1e-6, 1e-3):
            assert 0.0 <= z_kernel(tau, 3.5, 1.0) < 1e-2

    def test_nonincreasing_in_bias_ratio(self):
        bhats = np.logspace(-2, 2, 40)
        for alpha in (3.0, 4.0):
            vals = [z_kernel(1.0, alpha, b) for b in bhats]
            assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_domain_errors(self):
        with pytest.raises(AlphaOutOfRangeError):
            z_kernel(1.0, 2.0, 1.0)
        with pytest.raises(NonPositiveParameterError):
            z_kernel(1.0, 4.0, 0.0)
        with pytest.raises(NonPositiveParameterError):
            z_kernel(-0.5, 4.0, 1.0)

    def test_extreme_arguments_stay_finite(self):
        # very small and very large thresholds, exponent near 2
        assert z_kernel(1e-12, 2.1, 1.0) >= 0.0
        big = z_kernel(1e9, 3.5, 1.0)
        assert math.isfinite(big) and big > 100.0


class TestHypergeometric:
    def test_against_scipy_direct_region(self):
        for z in (-0.85, -0.3, 0.0, 0.5, 0.85):
            got = gauss_2f1(1.0, 0.4, 1.4, z)
            assert got == pytest.approx(scipy_hyp2f1(1.0, 0.4, 1.4, z),
                                        rel=1e-10)

    def test_against_scipy_pfaff_region(self):
        for z in (-1.0, -10.0, -100.0, -1000.0):
            got = gauss_2f1(1.0, 0.4286, 1.4286, z)
            assert got == pytest.approx(scipy_hyp2f1(1.0, 0.4286, 1.4286, z),
                                        rel=1e-9)

    def test_argument_domain(self):
        with pytest.raises(NonPositiveParameterError):
            gauss_2f1(1.0, 0.5, 1.5, 1.0)


class TestSemiInfinite:
    def test_gaussian_type(self):
        got = integrate_semi_infinite(lambda x: x * math.exp(-math.pi * x * x))
        assert got == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-9)

    def test_exponential(self):
        got = integrate_semi_infinite(lambda x: math.exp(-x))
        assert got == pytest.approx(1.0, rel=1e-9)

    def test_simpson_oracle_family(self):
        f = lambda x: x * math.exp(-0.7 * x * x - 0.4 * x ** 3.2)
        assert integrate_semi_infinite(f) == pytest.approx(_GAUSSISH, rel=1e-8)

    def test_scale_robustness(self):
        # same Gaussian mass at widely varying length scales
        for s in (1e-4, 1e-2, 1.0, 1e2, 1e4):
            f = lambda x: (x / s**2) * math.exp(-0.5 * (x / s) ** 2)
            assert integrate_semi_infinite(f) == pytest.approx(1.0, rel=1e-8)

    def test_budget_exhaustion_raises(self):
        tiny = QuadratureSettings(rel_tol=1e-12, abs_tol=1e-14,
                                  max_subdivisions=1)
        f = lambda x: x * math.exp(-0.001 * x ** 2) * (1.1 + math.sin(40.0 * x))
        with pytest.raises(QuadratureFailureError):
            integrate_semi_infinite(f, tiny)

    def test_zero_function(self):
        assert integrate_semi_infinite(lambda x: 0.0) == 0.0


class TestSettings:
    def test_invalid_settings_rejected(self):
        with pytest.raises(NonPositiveParameterError):
            QuadratureSettings(rel_tol=0.0)
        with pytest.raises(NonPositiveParameterError):
            QuadratureSettings(max_subdivisions=0)

    def test_tighter(self):
        s = QuadratureSettings().tighter(10.0)
        assert s.rel_tol == pytest.approx(1e-10)
        assert s.abs_tol == pytest.approx(1e-13)
