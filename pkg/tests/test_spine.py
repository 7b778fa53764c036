import math

import numpy as np
import pytest
from scipy import integrate, stats

from treepolymer.environment import EnvironmentModel, solve_beta_c
from helpers import tilt_point
from treepolymer.spine import (SpineIncrementDist, cascade_side_expectation,
                               many_to_one, sample_spine_increment,
                               sample_spine_increments, sample_spine_walk,
                               sample_tilted_omega, sample_walk_matrix)

GAUSS = EnvironmentModel.gaussian()
RADEM = EnvironmentModel.rademacher()
UNIF = EnvironmentModel.uniform01()


def dist_for(model):
    # two-point noise has no finite critical point; use a fixed tilt point
    # (every identity checked for it below holds at any beta)
    if model.kind == "rademacher":
        return SpineIncrementDist(model, tilt_point(model, 1.25))
    return SpineIncrementDist(model, solve_beta_c(model))


class TestTiltedLaw:
    @pytest.mark.parametrize("model", [GAUSS, UNIF], ids=lambda m: m.kind)
    def test_density_total_mass_one(self, model):
        d = dist_for(model)
        lo, hi = (-15, 15) if model.kind == "gaussian" else (0, 1)
        mass, _ = integrate.quad(lambda w: float(d.tilted_omega_pdf(w)), lo, hi,
                                 epsabs=1e-12, epsrel=1e-12)
        assert mass == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("model", [GAUSS, UNIF], ids=lambda m: m.kind)
    def test_increment_mean_zero_by_quadrature(self, model):
        d = dist_for(model)
        lo, hi = (-15, 15) if model.kind == "gaussian" else (0, 1)
        b, shift = d.cp.beta_c, d.cp.energy_shift
        mean, _ = integrate.quad(
            lambda w: (shift - b * w) * float(d.tilted_omega_pdf(w)), lo, hi,
            epsabs=1e-12, epsrel=1e-12)
        assert abs(mean) <= 1e-8

    @pytest.mark.parametrize("model", [GAUSS, UNIF], ids=lambda m: m.kind)
    def test_increment_variance_by_quadrature(self, model):
        d = dist_for(model)
        lo, hi = (-15, 15) if model.kind == "gaussian" else (0, 1)
        b, shift = d.cp.beta_c, d.cp.energy_shift
        var, _ = integrate.quad(
            lambda w: (shift - b * w) ** 2 * float(d.tilted_omega_pdf(w)), lo, hi,
            epsabs=1e-12, epsrel=1e-12)
        assert var == pytest.approx(d.cp.sigma_sq, abs=1e-8)

    def test_rademacher_pmf_mass_and_drift(self):
        d = dist_for(RADEM)
        pmf = d.tilted_omega_pmf()
        assert sum(pmf.values()) == pytest.approx(1.0, abs=1e-14)
        # off criticality the increment mean is minus the criticality
        # residual b tanh b - log cosh b - log 2, which is positive here
        b, shift = d.cp.beta_c, d.cp.energy_shift
        mean = sum((shift - b * w) * p for w, p in pmf.items())
        want = -(b * math.tanh(b) - math.log(math.cosh(b)) - math.log(2))
        assert mean == pytest.approx(want, abs=1e-12)

    def test_increment_pdf_integrates_to_one(self):
        d = dist_for(GAUSS)
        mass, _ = integrate.quad(lambda s: float(d.increment_pdf(s)), -20, 20,
                                 epsabs=1e-12, epsrel=1e-12)
        assert mass == pytest.approx(1.0, abs=1e-8)


class TestSampling:
    def test_gaussian_tilted_mean_and_variance(self):
        d = dist_for(GAUSS)
        rng = np.random.default_rng(0)
        s = sample_spine_increments(d, 10 ** 6, rng)
        stderr = math.sqrt(d.cp.sigma_sq / 10 ** 6)
        assert abs(s.mean()) <= 3 * stderr
        assert s.var() == pytest.approx(d.cp.sigma_sq, rel=0.01)

    def test_rademacher_tilt_probability(self):
        d = dist_for(RADEM)
        rng = np.random.default_rng(1)
        w = sample_tilted_omega(d, 10 ** 6, rng)
        b = d.cp.beta_c
        p = math.exp(b) / (2 * math.cosh(b))
        stderr = math.sqrt(p * (1 - p) / 10 ** 6)
        assert abs((w == 1.0).mean() - p) <= 3 * stderr

    def test_uniform_tilt_matches_cdf(self):
        d = dist_for(UNIF)
        rng = np.random.default_rng(2)
        w = sample_tilted_omega(d, 10 ** 5, rng)
        b = d.cp.beta_c
        cdf = lambda x: math.expm1(b * x) / math.expm1(b)
        assert stats.kstest(w, np.vectorize(cdf)).pvalue > 1e-3

    @pytest.mark.parametrize("model", [GAUSS, UNIF], ids=lambda m: m.kind)
    def test_increment_mean_zero_mc(self, model):
        d = dist_for(model)
        rng = np.random.default_rng(3)
        s = sample_spine_increments(d, 10 ** 6, rng)
        assert abs(s.mean()) <= 3 * s.std() / 1000.0

    def test_rademacher_increment_mean_matches_drift_mc(self):
        d = dist_for(RADEM)
        rng = np.random.default_rng(3)
        s = sample_spine_increments(d, 10 ** 6, rng)
        b = d.cp.beta_c
        want = -(b * math.tanh(b) - math.log(math.cosh(b)) - math.log(2))
        assert s.mean() == pytest.approx(want, abs=3 * s.std() / 1000.0)


class TestWalks:
    def test_zero_steps(self):
        d = dist_for(GAUSS)
        w = sample_spine_walk(d, 0, np.random.default_rng(0))
        assert w.n == 0 and w.final == 0.0 and w.running_min == 0.0

    def test_single_step_matches_increment_law(self):
        d = dist_for(GAUSS)
        w = sample_spine_walk(d, 1, np.random.default_rng(4))
        assert w.n == 1
        assert w.steps[0] == 0.0

    def test_running_min_definition(self):
        d = dist_for(GAUSS)
        w = sample_spine_walk(d, 50, np.random.default_rng(5))
        assert w.running_min == w.steps.min()

    def test_matrix_shape_and_start(self):
        d = dist_for(GAUSS)
        m = sample_walk_matrix(d, 12, 100, np.random.default_rng(6))
        assert m.shape == (100, 13)
        assert (m[:, 0] == 0).all()

    def test_positive_stay_probability_scaling(self):
        # P(min over n steps >= 0) decays like n^(-1/2): log-log slope
        d = dist_for(GAUSS)
        rng = np.random.default_rng(7)
        ns = [16, 64, 256, 1024]
        probs = []
        for n in ns:
            m = sample_walk_matrix(d, n, 40000, rng)
            probs.append((m.min(axis=1) >= 0).mean())
        fit = stats.linregress(np.log(ns), np.log(probs))
        assert -0.65 <= fit.slope <= -0.35


class TestManyToOne:
    def test_constant_function_exact(self):
        d = dist_for(GAUSS)
        est, stderr = many_to_one(d, 10, lambda x: np.ones_like(x), 100,
                                  np.random.default_rng(8))
        assert est == 1.0 and stderr == 0.0

    def test_identity_mean_zero(self):
        d = dist_for(GAUSS)
        est, stderr = many_to_one(d, 1, lambda x: x, 10 ** 5,
                                  np.random.default_rng(9))
        assert abs(est) <= 3 * stderr

    def test_zero_generation(self):
        d = dist_for(GAUSS)
        est, _ = many_to_one(d, 0, lambda x: x + 2.0, 50,
                             np.random.default_rng(10))
        assert est == 2.0

    @pytest.mark.parametrize("f", [
        lambda x: (x <= 0).astype(float),
        lambda x: np.exp(-np.maximum(x, 0.0)),
        lambda x: 1.0 / (1.0 + x * x),
    ], ids=["indicator", "exp-neg-part", "cauchy-kernel"])
    def test_identity_against_cascade_side(self, f):
        d = dist_for(GAUSS)
        spine_est, spine_err = many_to_one(d, 8, f, 3 * 10 ** 5,
                                           np.random.default_rng(11))
        casc_est, casc_err = cascade_side_expectation(
            GAUSS, d.cp, 8, f, 60000, master_seed=12)
        gap = abs(spine_est - casc_est)
        assert gap <= 3 * math.hypot(spine_err, casc_err)
