"""Support estimators: RWC, RWC-S, the WY Chebyshev baseline, Good-Turing
and naive counting.

Polynomial-class estimators all have the form S_hat = sum_j h_j * g(j) with
g(j) = a_j * j! + 1 for counts j <= L and 1 beyond, differing only in how the
coefficients a are chosen.  WY takes the shifted Chebyshev coefficients on
[n/k, c1 ln k]; RWC solves the regularized weighted minimax with variance
weight 1/k; RWC-S re-weights by 1 over the naive count from the same sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .data import Fingerprint
from .poly import Polynomial, g_values, shifted_cheb_coeffs
from .sip import (
    IntervalSpec,
    SipProblem,
    SolveResult,
    build_grid,
    localized_interval,
    solve,
)

KINDS = ("rwc", "rwc-s", "wy", "gt", "naive")


class IntervalCollapseError(ValueError):
    """WY interval [n/k, c1 ln k] is empty; fall back to naive counting."""


class CoverageZeroError(ValueError):
    """All observed symbols are singletons, so the Good-Turing coverage is 0."""


@dataclass(frozen=True)
class EstimatorSpec:
    kind: str
    c0: float = 0.558
    c1: float = 0.5
    s: int = 1000
    tol: float = 1e-8
    max_iter: int = 200_000
    fallback_to_naive: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown estimator kind {self.kind!r}, expected one of {KINDS}")
        if self.c0 <= 0 or self.c1 <= 0:
            raise ValueError("c0 and c1 must be positive")
        if self.s < 2:
            raise ValueError("grid size s must be >= 2")


@dataclass(frozen=True)
class EstimateResult:
    value: float
    coeffs: Polynomial | None = None
    diagnostics: dict = field(default_factory=dict)


def degree_for(k: float, c0: float = 0.558) -> int:
    """L = floor(c0 * ln k); natural logarithm throughout."""
    if k < 2:
        raise ValueError("k must be >= 2")
    return int(math.floor(c0 * math.log(k)))


def wy_coefficients(k: float, n: float, c0: float = 0.558, c1: float = 0.5) -> Polynomial:
    """Shifted Chebyshev coefficients on [n/k, c1 ln k] with L = floor(c0 ln k)."""
    degree = degree_for(k, c0)
    lo = n / k
    hi = c1 * math.log(k)
    if hi <= lo:
        raise IntervalCollapseError(
            f"approximation interval collapsed: n/k = {lo:.6g} >= c1 ln k = {hi:.6g}"
        )
    if degree < 1:
        raise ValueError(f"k={k} too small: c0 ln k must be >= 1")
    return shifted_cheb_coeffs(degree, lo, hi)


def _solve_weighted(k: float, n: float, reg_weight: float, spec: EstimatorSpec) -> SolveResult:
    degree = degree_for(k, spec.c0)
    if degree < 1:
        # pure counting estimator; solve the trivial single-point instance
        interval = IntervalSpec(n / k, n / k, degenerate=True)
        problem = SipProblem(0, build_grid(interval, 1), reg_weight)
        return solve(problem, tol=spec.tol, max_iter=spec.max_iter)
    interval = localized_interval(n, k, degree)
    grid = build_grid(interval, 1 if interval.degenerate else spec.s)
    problem = SipProblem(degree, grid, reg_weight)
    return solve(problem, tol=spec.tol, max_iter=spec.max_iter)


def rwc_coefficients(k: float, n: float, spec: EstimatorSpec) -> SolveResult:
    """Solve the discretized minimax with variance weight 1/k."""
    return _solve_weighted(k, n, 1.0 / k, spec)


def rwcs_coefficients(k: float, n: float, s_count: float, spec: EstimatorSpec) -> SolveResult:
    """RWC variant with variance weight 1 over the naive counting estimate."""
    if s_count < 1:
        raise ValueError(f"counting estimate must be >= 1, got {s_count}")
    return _solve_weighted(k, n, 1.0 / s_count, spec)


def apply_poly_estimator(fp: Fingerprint, p: Polynomial) -> float:
    """S_hat = sum_j h_j * g(j); unseen symbols contribute 0 since g(0) = 0."""
    per_count, tail = g_values(p)
    degree = p.degree
    total = 0.0
    for j, hj in fp.h.items():
        total += hj * (per_count[j] if j <= degree else tail)
    return total


def naive_count(fp: Fingerprint) -> float:
    """Number of distinct observed symbols."""
    return float(sum(fp.h.values()))


def good_turing(fp: Fingerprint, n: int) -> float:
    """Naive count divided by the estimated coverage 1 - h1/n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    h1 = fp.h.get(1, 0)
    if h1 >= n:
        raise CoverageZeroError("all observed symbols are singletons (h1 = n)")
    return naive_count(fp) / (1.0 - h1 / n)


def estimate(spec: EstimatorSpec, fp: Fingerprint, n: int, k: float) -> EstimateResult:
    """Dispatch to the requested estimator and apply it to the fingerprint."""
    if spec.kind == "naive":
        return EstimateResult(naive_count(fp))
    if spec.kind == "gt":
        try:
            return EstimateResult(good_turing(fp, n))
        except CoverageZeroError:
            if spec.fallback_to_naive:
                return EstimateResult(naive_count(fp), diagnostics={"fallback": "naive"})
            raise
    if spec.kind == "wy":
        try:
            p = wy_coefficients(k, n, spec.c0, spec.c1)
        except IntervalCollapseError:
            if spec.fallback_to_naive:
                return EstimateResult(naive_count(fp), diagnostics={"fallback": "naive"})
            raise
        return EstimateResult(apply_poly_estimator(fp, p), coeffs=p)
    if spec.kind == "rwc":
        result = rwc_coefficients(k, n, spec)
    else:  # rwc-s
        s_c = naive_count(fp)
        result = rwcs_coefficients(k, n, s_c, spec)
    diagnostics = {
        "degree": result.coeffs.degree,
        "t_d": result.t_d,
        "duality_gap": result.duality_gap,
        "iterations": result.iterations,
    }
    if spec.kind == "rwc-s":
        diagnostics["s_count"] = s_c
    return EstimateResult(apply_poly_estimator(fp, result.coeffs), result.coeffs, diagnostics)
