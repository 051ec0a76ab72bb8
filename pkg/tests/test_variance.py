"""Variance identity, delocalisation and tail profiles, OU inequalities."""

import math

import numpy as np
import pytest

from excursion_lab.kernels import GridSpec, StationaryKernel
from excursion_lab.percolation import cross_lr
from excursion_lab.variance import (
    EstimatorReport,
    bound_report,
    deloc_profile,
    empirical_variance_T,
    hypercontractivity_check,
    jackknife_variance_stderr,
    sample_thresholds,
    tail_profile,
    tanh_bound_check,
    variance_formula_rhs,
)

# Var(min of two iid standard normals) = 1 - 1/pi: E[min] = -1/sqrt(pi),
# E[min^2] = 1, derived in closed form; frozen as the two-cell oracle.
VAR_MIN_TWO = 1.0 - 1.0 / math.pi

# Frozen mpmath values of integral_0^inf alpha^tanh(t/2) e^-t dt and of
# the bound 2/|ln alpha| at the standard check points.
TANH_TABLE = [
    ("0.999", 0.9996136261557718, 1998.9998332499472),
    ("0.9", 0.9605316968033506, 18.982443162059806),
    ("1/e", 0.7052765735023485, 2.0),
    ("0.1", 0.49265786847029774, 0.8685889638065036),
    ("0.01", 0.3138393105174971, 0.4342944819032518),
    ("1e-6", 0.12737836796876348, 0.14476482730108395),
]


def _alpha_of(label):
    return math.exp(-1) if label == "1/e" else float(label)


class TestSampleThresholds:
    def test_shapes_and_determinism(self):
        kernel = StationaryKernel.gaussian(1.0)
        grid = GridSpec(5, 5, 0.6)
        spec = cross_lr(0, 0, 5, 5)
        s1 = sample_thresholds(kernel, grid, spec, 64, 42, workers=1)
        s2 = sample_thresholds(kernel, grid, spec, 64, 42, workers=4)
        assert s1.T.shape == (64,)
        assert np.array_equal(s1.T, s2.T)
        assert np.array_equal(s1.sx, s2.sx)
        assert np.array_equal(s1.sy, s2.sy)
        assert s1.seed == 42

    def test_pivots_inside_grid(self):
        kernel = StationaryKernel.plane_wave()
        grid = GridSpec(6, 4, 0.5)
        spec = cross_lr(0, 0, 6, 4)
        s = sample_thresholds(kernel, grid, spec, 50, 1, sampler="spectral")
        assert (0 <= s.sx).all() and (s.sx < 6).all()
        assert (0 <= s.sy).all() and (s.sy < 4).all()


class TestTwoCellOracle:
    """White kernel on a 1x2 strip: T = -min(f0, f1) with f0, f1 iid
    standard normal, so Var(T) = 1 - 1/pi exactly."""

    def test_empirical_variance_matches(self):
        kernel = StationaryKernel.white()
        grid = GridSpec(2, 1, 1.0)
        spec = cross_lr(0, 0, 2, 1)
        rep = empirical_variance_T(kernel, grid, spec, 60000, 7)
        assert rep.estimate == pytest.approx(VAR_MIN_TWO, abs=4 * rep.stderr)
        assert rep.stderr < 0.01

    def test_formula_rhs_matches(self):
        kernel = StationaryKernel.white()
        grid = GridSpec(2, 1, 1.0)
        spec = cross_lr(0, 0, 2, 1)
        rhs = variance_formula_rhs(
            kernel, grid, spec, n_pairs=60000, quad_nodes=24, master_seed=11
        )
        assert rhs.estimate == pytest.approx(VAR_MIN_TWO, abs=4 * rhs.stderr + 0.004)


class TestVarianceFormula:
    def test_two_sided_small_instance(self):
        kernel = StationaryKernel.gaussian(1.0)
        grid = GridSpec(4, 4, 0.7)
        spec = cross_lr(0, 0, 4, 4)
        rhs = variance_formula_rhs(
            kernel, grid, spec, n_pairs=40000, quad_nodes=16, master_seed=5
        )
        emp = empirical_variance_T(kernel, grid, spec, 40000, 6)
        gap = abs(rhs.estimate - emp.estimate)
        assert gap <= 3.0 * math.hypot(rhs.stderr, emp.stderr)

    def test_quadrature_stability_under_node_doubling(self):
        kernel = StationaryKernel.gaussian(1.0)
        grid = GridSpec(3, 3, 0.8)
        spec = cross_lr(0, 0, 3, 3)
        a = variance_formula_rhs(
            kernel, grid, spec, n_pairs=30000, quad_nodes=16, master_seed=9
        )
        b = variance_formula_rhs(
            kernel, grid, spec, n_pairs=30000, quad_nodes=32, master_seed=9
        )
        assert abs(a.estimate - b.estimate) <= 3.0 * math.hypot(a.stderr, b.stderr)

    def test_workers_deterministic(self):
        kernel = StationaryKernel.gaussian(1.0)
        grid = GridSpec(3, 3, 0.8)
        spec = cross_lr(0, 0, 3, 3)
        a = variance_formula_rhs(
            kernel, grid, spec, n_pairs=2000, quad_nodes=8, master_seed=3, workers=1
        )
        b = variance_formula_rhs(
            kernel, grid, spec, n_pairs=2000, quad_nodes=8, master_seed=3, workers=4
        )
        assert a.estimate == b.estimate

    def test_spectral_sampler_rejected(self):
        kernel = StationaryKernel.gaussian(1.0)
        grid = GridSpec(3, 3, 0.8)
        with pytest.raises((TypeError, ValueError)):
            variance_formula_rhs(
                kernel, grid, cross_lr(0, 0, 3, 3),
                n_pairs=100, quad_nodes=8, master_seed=1, sampler="spectral",
            )


class TestJackknife:
    def test_close_to_normal_theory_on_gaussian(self, rng):
        x = rng.standard_normal(4000)
        jk = jackknife_variance_stderr(x)
        normal = np.var(x, ddof=1) * math.sqrt(2.0 / (x.size - 1))
        assert jk == pytest.approx(normal, rel=0.15)

    def test_scale_equivariance(self, rng):
        x = rng.standard_normal(500)
        assert jackknife_variance_stderr(3.0 * x) == pytest.approx(
            9.0 * jackknife_variance_stderr(x), rel=1e-9
        )


class TestDelocProfile:
    def _grid(self):
        return GridSpec(10, 10, 1.0)

    def test_exact_fractions(self):
        # 25 pivots at each of four mutually distant cells.
        pts = [(0, 0), (9, 0), (0, 9), (9, 9)]
        samples = np.array([p for p in pts for _ in range(25)])
        prof = deloc_profile(samples, self._grid(), [1.0, 2.0])
        assert prof.n == 100
        assert prof.sigma.tolist() == [0.25, 0.25]

    def test_concentrated_is_one(self):
        samples = np.tile([[4, 5]], (120, 1))
        prof = deloc_profile(samples, self._grid(), [0.5])
        assert prof.sigma[0] == 1.0

    def test_ball_is_euclidean(self):
        # 50 at (4,4), 50 at (6,6): the midpoint (5,5) sits at Euclidean
        # distance sqrt(2) from both, so the sup-over-centres profile
        # jumps from 1/2 to 1 as r crosses sqrt(2).  An L-infinity ball
        # of radius 1 would already cover both from the midpoint.
        samples = np.array([[4, 4]] * 50 + [[6, 6]] * 50)
        prof = deloc_profile(samples, self._grid(), [1.0, 1.5])
        assert prof.sigma.tolist() == [0.5, 1.0]

    def test_needs_100_samples(self):
        with pytest.raises(ValueError):
            deloc_profile(np.zeros((99, 2), dtype=int), self._grid(), [1.0])

    def test_radii_validation(self):
        samples = np.zeros((100, 2), dtype=int)
        with pytest.raises(ValueError):
            deloc_profile(samples, self._grid(), [2.0, 1.0])
        with pytest.raises(ValueError):
            deloc_profile(samples, self._grid(), [0.0, 1.0])


class TestBoundReport:
    def _profile(self):
        pts = [(0, 0), (9, 0), (0, 9), (9, 9)]
        samples = np.array([p for p in pts for _ in range(25)])
        return deloc_profile(samples, GridSpec(10, 10, 1.0), [1.0, 2.0, 50.0])

    def test_m_bar_formula(self):
        kernel = StationaryKernel.gaussian(1.0)
        rep = bound_report(kernel, self._profile(), var_hat=0.3, r_grid=[2.0])
        sig = 0.25
        expected = max(
            kernel.kappa_bar(2.0, search_radius=14.0), 1.0 / abs(math.log(sig))
        )
        assert rep.m_bar[0] == pytest.approx(expected, rel=1e-6)
        assert not rep.degenerate[0]
        assert rep.ratio == pytest.approx(0.3 / rep.m_bar[0], rel=1e-12)

    def test_m_lower_formula(self):
        kernel = StationaryKernel.gaussian(1.0)
        rep = bound_report(kernel, self._profile(), var_hat=0.3, r_grid=[2.0])
        sig = 0.25
        expected = sig**3 * 2.0**-4 * max(math.log(2.0), abs(math.log(sig))) ** -2
        assert rep.m_lower[0] == pytest.approx(expected, rel=1e-12)

    def test_degenerate_at_sigma_one(self):
        kernel = StationaryKernel.gaussian(1.0)
        rep = bound_report(kernel, self._profile(), var_hat=0.3, r_grid=[50.0])
        assert rep.degenerate[0]
        assert math.isnan(rep.m_bar[0])

    def test_unknown_radius_rejected(self):
        kernel = StationaryKernel.gaussian(1.0)
        with pytest.raises(ValueError):
            bound_report(kernel, self._profile(), var_hat=0.3, r_grid=[7.0])


class TestTanhBound:
    @pytest.mark.parametrize("label,lhs_ref,rhs_ref", TANH_TABLE)
    def test_frozen_values(self, label, lhs_ref, rhs_ref):
        lhs, rhs = tanh_bound_check(_alpha_of(label))
        assert lhs == pytest.approx(lhs_ref, rel=1e-8)
        assert rhs == pytest.approx(rhs_ref, rel=1e-12)
        assert lhs <= rhs

    def test_domain(self):
        for bad in (0.0, 1.0, -0.5, 1.5):
            with pytest.raises(ValueError):
                tanh_bound_check(bad)


class TestTailProfile:
    def test_exact_exceedance(self, rng):
        # Centered two-point distribution: |T - mean| is exactly 1.
        T = np.concatenate([np.ones(600), -np.ones(600)])
        prof = tail_profile(T, [0.5, 1.0, 1.5])
        assert prof.exceedance.tolist() == [1.0, 1.0, 0.0]

    def test_gaussian_exceedance(self, rng):
        T = rng.standard_normal(20000)
        prof = tail_profile(T, [1.0, 2.0])
        from scipy.stats import norm

        for j, t in enumerate((1.0, 2.0)):
            expect = 2 * norm.sf(t)
            assert prof.exceedance[j] == pytest.approx(expect, abs=0.015)
            assert prof.wilson_low[j] <= prof.exceedance[j] <= prof.wilson_high[j]

    def test_rate_fits_exponential(self, rng):
        # P[|T| >= t] = exp(-2t) exactly for Laplace(1/2) samples.
        T = rng.laplace(scale=0.5, size=200000)
        prof = tail_profile(T, [0.5, 1.0, 1.5, 2.0])
        assert prof.rate == pytest.approx(2.0, rel=0.08)

    def test_minimum_samples(self):
        with pytest.raises(ValueError):
            tail_profile(np.zeros(999), [1.0])


class TestHypercontractivity:
    def test_no_violations_small_instance(self):
        kernel = StationaryKernel.gaussian(1.0)
        grid = GridSpec(6, 6, 0.7)
        spec = cross_lr(0, 0, 6, 6)
        rep = hypercontractivity_check(
            kernel, grid, spec, cell_partition=2, t=math.log(2.0),
            n_pairs=20000, master_seed=3,
        )
        assert rep.violations == []
        assert len(rep.blocks) == 9
        assert (rep.lhs >= 0).all() and (rep.rhs >= 0).all()

    def test_t_zero_is_diagonal(self):
        # At t = 0 the pair is (f, f): lhs = P[S in C'] = marginal.
        kernel = StationaryKernel.gaussian(1.0)
        grid = GridSpec(4, 4, 0.7)
        spec = cross_lr(0, 0, 4, 4)
        rep = hypercontractivity_check(
            kernel, grid, spec, cell_partition=2, t=0.0,
            n_pairs=5000, master_seed=8,
        )
        # p_norm = 1 + e^0 = 2, rhs = p^(2/2) = p = lhs exactly.
        assert np.allclose(rep.lhs, rep.rhs)
        assert rep.violations == []

    def test_workers_deterministic(self):
        kernel = StationaryKernel.gaussian(1.0)
        grid = GridSpec(4, 4, 0.7)
        spec = cross_lr(0, 0, 4, 4)
        r1 = hypercontractivity_check(
            kernel, grid, spec, 2, 1.0, n_pairs=3000, master_seed=5, workers=1
        )
        r2 = hypercontractivity_check(
            kernel, grid, spec, 2, 1.0, n_pairs=3000, master_seed=5, workers=4
        )
        assert np.array_equal(r1.lhs, r2.lhs)
        assert np.array_equal(r1.rhs, r2.rhs)


class TestEstimatorReport:
    def test_negative_stderr_rejected(self):
        with pytest.raises(ValueError):
            EstimatorReport(estimate=1.0, stderr=-0.1, n=10, seed=1, wall_time=0.0)

    def test_nan_pair_allowed(self):
        rep = EstimatorReport(
            estimate=float("nan"), stderr=float("nan"), n=10, seed=1, wall_time=0.0
        )
        assert math.isnan(rep.estimate)

    def test_nan_stderr_alone_rejected(self):
        with pytest.raises(ValueError):
            EstimatorReport(
                estimate=1.0, stderr=float("nan"), n=10, seed=1, wall_time=0.0
            )
