import math

import numpy as np
import pytest

from suppest.poly import objective_values
from suppest.sip import (
    GridSpec,
    IntervalSpec,
    InvalidGridError,
    SipProblem,
    build_grid,
    certify,
    localized_interval,
    mrs_interval,
    solve,
)


class TestLocalizedInterval:
    def test_standard_instance(self):
        iv = localized_interval(1e6, 1e6, 7)
        assert iv.lo == 1.0
        assert iv.hi == 45.5
        assert not iv.degenerate

    def test_collapses_past_threshold(self):
        iv = localized_interval(50_000.0, 1000.0, 7)
        assert iv.degenerate
        assert iv.lo == iv.hi == 50.0

    def test_boundary_equality_degenerate(self):
        # n/k exactly 6.5 L: zero-length interval resolved as a single point
        iv = localized_interval(45.5, 1.0, 7)
        assert iv.degenerate
        assert iv.lo == 45.5

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            localized_interval(0.0, 10.0, 3)
        with pytest.raises(ValueError):
            localized_interval(10.0, 10.0, 0)


class TestMrsInterval:
    def test_degree_seven(self):
        iv = mrs_interval(5.0, 5.0, 7)
        assert iv.lo == 1.0
        assert iv.hi == pytest.approx(1.0 + 7 * math.pi / 2, rel=1e-15)

    def test_degree_one(self):
        iv = mrs_interval(3.0, 3.0, 1)
        assert iv.hi == pytest.approx(1.0 + math.pi / 2, rel=1e-15)

    def test_shifted(self):
        iv = mrs_interval(8.0, 4.0, 4)
        assert iv.lo == 2.0
        assert iv.hi == pytest.approx(2.0 + 2 * math.pi, rel=1e-15)


class TestBuildGrid:
    def test_standard(self):
        grid = build_grid(IntervalSpec(1.0, 45.5), 1000)
        assert grid.s == 1000
        assert grid.points[0] == 1.0
        assert grid.points[-1] == 45.5
        assert grid.d == pytest.approx(44.5 / 999, rel=1e-15)
        assert np.all(np.diff(grid.points) > 0)

    def test_two_points(self):
        grid = build_grid(IntervalSpec(1.0, 45.5), 2)
        assert list(grid.points) == [1.0, 45.5]

    def test_degenerate(self):
        grid = build_grid(IntervalSpec(50.0, 50.0, degenerate=True), 1)
        assert grid.s == 1
        assert list(grid.points) == [50.0]
        assert grid.d == 0.0

    def test_too_few_points(self):
        with pytest.raises(InvalidGridError):
            build_grid(IntervalSpec(1.0, 45.5), 1)
        with pytest.raises(InvalidGridError):
            build_grid(IntervalSpec(50.0, 50.0, degenerate=True), 3)


def _standard_problem(s=1000, reg=1e-6, degree=7):
    grid = build_grid(IntervalSpec(1.0, 6.5 * degree), s)
    return SipProblem(degree, grid, reg)


class TestSolve:
    def test_degree_zero_closed_form(self):
        grid = build_grid(IntervalSpec(2.0, 10.0), 5)
        res = solve(SipProblem(0, grid, 0.3))
        lam = 2.0
        assert res.coeffs.coeffs == (-1.0,)
        assert res.t_d == pytest.approx(
            0.3 * math.exp(-lam) + math.exp(-2 * lam), rel=1e-14
        )
        assert res.duality_gap == 0.0

    def test_degree_one_single_point(self):
        grid = build_grid(IntervalSpec(1.0, 1.0, degenerate=True), 1)
        res = solve(SipProblem(1, grid, 0.1), tol=1e-12)
        assert res.coeffs.coeffs[1] == pytest.approx(1.0 / (math.e / 10 + 1), abs=1e-9)

    def test_certificate_on_standard_instance(self):
        res = solve(_standard_problem(), tol=1e-8)
        assert res.duality_gap <= 1e-8
        # primal feasibility: grid max within t_d + gap
        gmax = float(
            objective_values(res.coeffs, np.linspace(1.0, 45.5, 1000), 1e-6)[2].max()
        )
        assert gmax <= res.t_d + res.duality_gap + 1e-15
        assert res.dual_weights.min() >= 0.0
        assert res.dual_weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_uniqueness_across_initializations(self):
        problem = _standard_problem()
        r1 = solve(problem, tol=1e-9)
        w0 = np.exp(-0.1 * np.arange(1000.0))
        r2 = solve(problem, tol=1e-9, init_weights=w0)
        for c1, c2 in zip(r1.coeffs.coeffs, r2.coeffs.coeffs):
            assert abs(c1 - c2) < 1e-5

    def test_monotone_refinement(self):
        tds = []
        for s in (11, 21, 41):
            res = solve(_standard_problem(s=s), tol=1e-10)
            tds.append(res.t_d)
        assert tds[0] <= tds[1] + 2e-10
        assert tds[1] <= tds[2] + 2e-10

    def test_unregularized_needs_enough_points(self):
        grid = build_grid(IntervalSpec(1.0, 20.0), 4)
        with pytest.raises(ValueError):
            SipProblem(3, grid, 0.0)

    def test_unregularized_solvable(self):
        grid = build_grid(IntervalSpec(1.0, 19.5), 200)
        res = solve(SipProblem(3, grid, 0.0), tol=1e-9)
        assert res.duality_gap <= 1e-9

    def test_bad_tol(self):
        with pytest.raises(ValueError):
            solve(_standard_problem(), tol=0.0)

    def test_bad_init_weights(self):
        with pytest.raises(ValueError):
            solve(_standard_problem(), init_weights=np.ones(3))


class TestCertify:
    def test_degree_zero_exact(self):
        grid = build_grid(IntervalSpec(2.0, 10.0), 5)
        problem = SipProblem(0, grid, 0.3)
        res = solve(problem)
        assert certify(res, problem, 10) == pytest.approx(res.t_d, rel=1e-14)

    def test_degenerate_point(self):
        grid = build_grid(IntervalSpec(3.0, 3.0, degenerate=True), 1)
        problem = SipProblem(2, grid, 0.05)
        res = solve(problem, tol=1e-10)
        assert certify(res, problem, 10) == pytest.approx(res.t_d, rel=1e-9)

    def test_slack_small_on_fine_grid(self):
        problem = _standard_problem()
        res = solve(problem, tol=1e-8)
        fine = certify(res, problem, 10)
        assert fine >= res.t_d - 1e-8
        assert fine - res.t_d < 1e-6

    def test_oversample_validation(self):
        problem = _standard_problem()
        res = solve(problem, tol=1e-8)
        with pytest.raises(ValueError):
            certify(res, problem, 1)


class TestLocalizationProperty:
    def test_random_vectors_small_sample(self):
        # spot check; the full 200-vector version runs in the acceptance suite
        rng = np.random.default_rng(11)
        k, n, degree = 1e4, 1e4, 5
        hi = 6.5 * degree
        dense = np.linspace(n / k, n, 20_001)
        inside = dense[dense <= hi]
        for _ in range(20):
            coeffs = (-1.0, *rng.uniform(-2, 2, degree))
            from suppest.poly import Polynomial

            g = objective_values(Polynomial(coeffs), dense, 1.0 / k)[2]
            g_in = objective_values(Polynomial(coeffs), inside, 1.0 / k)[2]
            assert g.max() <= g_in.max() * (1 + 1e-10)
