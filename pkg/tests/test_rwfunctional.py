import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from helpers import tilt_point
from treepolymer.environment import EnvironmentModel, solve_beta_c
from treepolymer.rwfunctional import (FunctionalSpec, bm_functional_quadrature,
                                      bm_joint_density, mc_functional,
                                      mc_functional_exhaustive, scaling_params)
from treepolymer.spine import SpineIncrementDist

GAUSS = EnvironmentModel.gaussian()
CP = solve_beta_c(GAUSS)
DIST = SpineIncrementDist(GAUSS, CP)


class TestScalingParams:
    def test_large_delta_branch(self):
        assert scaling_params(0.75, "plus") == (1.0, 0.5)

    def test_small_delta_branch(self):
        alpha, g = scaling_params(0.3, "plus")
        assert alpha == pytest.approx(3.0)
        assert g == pytest.approx(0.9)

    def test_boundary_belongs_to_large_branch(self):
        assert scaling_params(0.5, "plus") == (1.0, 0.5)

    def test_minus_below_half_rejected(self):
        with pytest.raises(ValueError):
            scaling_params(0.3, "minus")

    def test_nonpositive_delta_rejected(self):
        with pytest.raises(ValueError):
            scaling_params(0.0, "plus")

    def test_bad_sign_rejected(self):
        with pytest.raises(ValueError):
            scaling_params(0.6, "both")

    @given(st.floats(0.01, 0.49))
    def test_exponent_identity_small_delta(self, delta):
        # g(n) = n^(delta * alpha) on the small-delta branch
        alpha, g = scaling_params(delta, "plus")
        assert g == pytest.approx(delta * alpha, rel=1e-12)

    @given(st.floats(0.5, 5.0))
    def test_exponent_identity_large_delta(self, delta):
        # g(n) = n^(alpha / 2) on the large-delta branch
        alpha, g = scaling_params(delta, "plus")
        assert g == pytest.approx(alpha / 2.0, rel=1e-12)


class TestFunctionalSpec:
    def test_derived_quantities(self):
        fs = FunctionalSpec(0.6, "plus", "max", 10.0)
        assert fs.alpha == 1.0
        assert fs.g(16) == 4.0
        assert fs.gamma(16) == pytest.approx(16.0 ** -0.6)

    def test_minus_gamma_negative(self):
        fs = FunctionalSpec(0.6, "minus", "max", 10.0)
        assert fs.gamma(16) < 0

    def test_star_validation(self):
        with pytest.raises(ValueError):
            FunctionalSpec(0.6, "plus", "mean", 10.0)

    def test_negative_kappa_rejected(self):
        with pytest.raises(ValueError):
            FunctionalSpec(0.6, "plus", "max", -1.0)

    def test_combine_max_and_min(self):
        fmax = FunctionalSpec(0.6, "plus", "max", 1.0)
        fmin = FunctionalSpec(0.6, "plus", "min", 1.0)
        assert fmax.combine(2.0, 5.0) == 5.0
        assert fmin.combine(2.0, 5.0) == 2.0


class TestJointDensity:
    def test_reference_value(self):
        want = 4.0 / math.sqrt(2 * math.pi) * math.exp(-2.0)
        assert bm_joint_density(0.0, 1.0, 1.0) == pytest.approx(want, rel=1e-14)

    def test_outside_support(self):
        assert bm_joint_density(2.0, 1.0, 1.0) == 0.0
        assert bm_joint_density(0.0, -0.5, 1.0) == 0.0
        assert bm_joint_density(0.0, 0.0, 1.0) == 0.0

    def test_invalid_time(self):
        with pytest.raises(ValueError):
            bm_joint_density(0.0, 1.0, 0.0)

    @pytest.mark.parametrize("t", [0.5, 1.0, 4.0])
    def test_normalization(self, t):
        mass, _ = integrate.dblquad(
            lambda x, m: bm_joint_density(x, m, t),
            0, 12 * math.sqrt(t), lambda m: -12 * math.sqrt(t), lambda m: m,
            epsabs=1e-9, epsrel=1e-9)
        assert mass == pytest.approx(1.0, abs=1e-6)

    def test_marginal_of_maximum(self):
        # integrating out the endpoint recovers the reflection-principle law
        t = 2.0
        m0 = 0.8
        got, _ = integrate.quad(lambda x: bm_joint_density(x, m0, t),
                                -12 * math.sqrt(t), m0,
                                epsabs=1e-12, epsrel=1e-12)
        want = (math.sqrt(2.0 / (math.pi * t)) * math.exp(-m0 * m0 / (2 * t)))
        assert got == pytest.approx(want, rel=1e-9)


class TestMcFunctional:
    def test_nonnegative(self):
        fs = FunctionalSpec(0.6, "plus", "max", 5.0)
        est, _ = mc_functional(fs, DIST, 16, 2000, np.random.default_rng(0))
        assert est >= 0.0

    def test_zero_kappa_kills_negative_excursions(self):
        # kappa = 0 keeps only paths that never go below zero
        fs = FunctionalSpec(0.6, "plus", "max", 0.0)
        est, _ = mc_functional(fs, DIST, 16, 5000, np.random.default_rng(1))
        assert est >= 0.0

    def test_two_step_exhaustive_oracle(self):
        # a two-point increment law gives a 3-point exhaustive tree at n = 2;
        # the two-point noise has no finite critical point, so tilt it at a
        # fixed beta (the sampler and oracle are parametric in the point)
        radem = EnvironmentModel.rademacher()
        cp = tilt_point(radem, 0.9)
        d = SpineIncrementDist(radem, cp)
        pmf = d.tilted_omega_pmf()
        support = {cp.energy_shift - cp.beta_c * w: p for w, p in pmf.items()}
        for sign, star, kappa in [("plus", "max", 0.0), ("plus", "min", 3.0),
                                  ("minus", "max", 1.0)]:
            fs = FunctionalSpec(0.6, sign, star, kappa)
            want = mc_functional_exhaustive(fs, support, 2)
            est, err = mc_functional(fs, d, 2, 2 * 10 ** 5,
                                     np.random.default_rng(2))
            assert est == pytest.approx(want, abs=max(4 * err, 1e-12))

    def test_small_n_rejected(self):
        fs = FunctionalSpec(0.6, "plus", "max", 1.0)
        with pytest.raises(ValueError):
            mc_functional(fs, DIST, 1, 10, np.random.default_rng(0))


class TestQuadrature:
    def test_zero_kappa_is_zero(self):
        fs = FunctionalSpec(0.6, "plus", "max", 0.0)
        assert bm_functional_quadrature(fs, CP.sigma_sq, 64) == 0.0

    def test_monotone_in_kappa(self):
        vals = [bm_functional_quadrature(
            FunctionalSpec(0.6, "plus", "max", k), CP.sigma_sq, 64)
            for k in (2.0, 5.0, 10.0)]
        assert vals[0] <= vals[1] <= vals[2]

    def test_min_below_max(self):
        lo = bm_functional_quadrature(
            FunctionalSpec(0.6, "plus", "min", 10.0), CP.sigma_sq, 64)
        hi = bm_functional_quadrature(
            FunctionalSpec(0.6, "plus", "max", 10.0), CP.sigma_sq, 64)
        assert 0.0 <= lo <= hi

    def test_sigma_one_reduces_to_reference_integral(self):
        # independent direct evaluation of the sigma = 1 double integral
        fs = FunctionalSpec(0.6, "plus", "max", 4.0)
        t = 64.0
        gn, gam, al = fs.g(t), fs.gamma(t), fs.alpha

        def f(x, m):
            z = 2 * m - x
            return (max(gn, (-x) ** al) * math.exp(gam * x - z * z / (2 * t)) * z)

        want, _ = integrate.dblquad(f, 0, fs.kappa * math.log(t),
                                    lambda m: -20 * math.sqrt(t), lambda m: 0,
                                    epsabs=1e-10, epsrel=1e-10)
        want *= 2.0 / math.sqrt(2 * math.pi) * t ** -1.5
        got = bm_functional_quadrature(fs, 1.0, 64)
        assert got == pytest.approx(want, rel=1e-6)

    def test_agrees_with_walk_mc(self):
        fs = FunctionalSpec(0.6, "plus", "max", 10.0)
        q = bm_functional_quadrature(fs, CP.sigma_sq, 64)
        est, err = mc_functional(fs, DIST, 64, 30000, np.random.default_rng(3))
        assert abs(est - q) / q <= 0.25

    def test_invalid_inputs(self):
        fs = FunctionalSpec(0.6, "plus", "max", 1.0)
        with pytest.raises(ValueError):
            bm_functional_quadrature(fs, CP.sigma_sq, 64, tol=0.0)
        with pytest.raises(ValueError):
            bm_functional_quadrature(fs, 0.0, 64)
        with pytest.raises(ValueError):
            bm_functional_quadrature(fs, CP.sigma_sq, 1)
