"""Chebyshev polynomial machinery and the bias/variance objective.

Everything here is pure: coefficient vectors go in, numbers come out.  The
central object is the per-count estimator polynomial a_0..a_L with a_0 = -1,
and the objective

    g(a, lambda) = w * sum_l exp(-lambda) a_l^2 lambda^l l!
                   + (exp(-lambda) * P(lambda, a))^2

whose max over an interval of Poisson rates the solver minimizes.  The
variance summands are assembled in the log domain so that large rates never
overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class InvalidIntervalError(ValueError):
    """Raised when a shifted-Chebyshev interval is degenerate or reversed."""


class InvalidEstimatorError(ValueError):
    """Raised when a polynomial is used as an estimator but a_0 != -1."""


@dataclass(frozen=True)
class Polynomial:
    """Monomial-basis coefficients a_0..a_L, lowest degree first."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        if not coeffs:
            raise ValueError("polynomial needs at least one coefficient")
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError("polynomial coefficients must be finite")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


@dataclass(frozen=True)
class ObjectiveParams:
    """Regularizer weight (1/k, 1/S_c or 0) and a single Poisson rate."""

    reg_weight: float
    lam: float

    def __post_init__(self):
        if not (self.reg_weight >= 0.0):
            raise ValueError(f"reg_weight must be >= 0, got {self.reg_weight}")
        if not (self.lam > 0.0):
            raise ValueError(f"lambda must be > 0, got {self.lam}")


def cheb_t(degree: int, x: float) -> float:
    """First-kind Chebyshev polynomial T_degree(x) via the three-term recurrence."""
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    if degree == 0:
        return 1.0
    prev, cur = 1.0, float(x)
    for _ in range(degree - 1):
        prev, cur = cur, 2.0 * x * cur - prev
    return cur


def shifted_cheb_coeffs(degree: int, lo: float, hi: float) -> Polynomial:
    """Monomial coefficients of -T_L((2x-hi-lo)/(hi-lo)) / T_L((-hi-lo)/(hi-lo)).

    The recurrence is carried out directly in coefficient space on the
    affine-composed argument, which is well conditioned for the small degrees
    used here (L <= ~15).  The constant coefficient is pinned to -1 exactly.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    if not (0.0 < lo < hi):
        raise InvalidIntervalError(f"need 0 < lo < hi, got [{lo}, {hi}]")
    beta = 2.0 / (hi - lo)
    alpha = -(hi + lo) / (hi - lo)
    # T_j of the affine map, as monomial coefficient arrays.
    prev = np.array([1.0])
    cur = np.array([alpha, beta])
    for _ in range(degree - 1):
        # 2*(alpha + beta*x)*cur - prev
        nxt = np.zeros(len(cur) + 1)
        nxt[: len(cur)] += 2.0 * alpha * cur
        nxt[1:] += 2.0 * beta * cur
        nxt[: len(prev)] -= prev
        prev, cur = cur, nxt
    denom = cur[0]  # T_L at x = 0; argument < -1 for 0 < lo < hi, never zero
    coeffs = -cur / denom
    coeffs[0] = -1.0
    return Polynomial(tuple(coeffs))


def poly_eval(p: Polynomial, x: float) -> float:
    """Evaluate sum_l a_l x^l by Horner's scheme."""
    acc = 0.0
    for c in reversed(p.coeffs):
        acc = acc * x + c
    return acc


def _log_factorials(degree: int) -> np.ndarray:
    return np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, degree + 1)))))


def objective_g(p: Polynomial, params: ObjectiveParams) -> tuple[float, float, float]:
    """Return (variance_term, bias, g) of the estimator polynomial at one rate.

    bias = exp(-lam) * P(lam, a); variance_term is the weighted sum of
    exp(-lam) a_l^2 lam^l l!, each summand exponentiated from the log domain.
    """
    lam = params.lam
    log_lam = math.log(lam)
    log_fact = 0.0
    var = 0.0
    for ell, a in enumerate(p.coeffs):
        if ell > 0:
            log_fact += math.log(ell)
        if a != 0.0:
            var += a * a * math.exp(ell * log_lam + log_fact - lam)
    var *= params.reg_weight
    bias = math.exp(-lam) * poly_eval(p, lam)
    return var, bias, var + bias * bias


def objective_values(
    p: Polynomial, lams: np.ndarray, reg_weight: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized (variance_term, bias, g) over an array of positive rates."""
    lams = np.asarray(lams, dtype=float)
    if np.any(lams <= 0.0):
        raise ValueError("all rates must be positive")
    coeffs = np.asarray(p.coeffs)
    degree = len(coeffs) - 1
    log_lam = np.log(lams)
    ells = np.arange(degree + 1)
    # (npoints, L+1) log-domain variance summands
    log_terms = np.outer(log_lam, ells) + _log_factorials(degree) - lams[:, None]
    var = reg_weight * np.exp(log_terms) @ (coeffs * coeffs)
    poly = np.zeros_like(lams)
    for c in coeffs[::-1]:
        poly = poly * lams + c
    bias = np.exp(-lams) * poly
    return var, bias, var + bias * bias


def g_values(p: Polynomial) -> tuple[tuple[float, ...], float]:
    """Per-count estimator values g(j) = a_j * j! + 1 for j <= L, and the tail 1.

    g(0) = 0 exactly because a_0 = -1.
    """
    if p.coeffs[0] != -1.0:
        raise InvalidEstimatorError(f"estimator polynomial needs a_0 = -1, got {p.coeffs[0]}")
    fact = 1.0
    values = [0.0]
    for j in range(1, len(p.coeffs)):
        fact *= j
        values.append(p.coeffs[j] * fact + 1.0)
    return tuple(values), 1.0
