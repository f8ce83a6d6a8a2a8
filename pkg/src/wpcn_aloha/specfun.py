"""Scalar special functions backing the allocation solver.

The Lambert-W principal branch, log-gamma, and the upper incomplete gamma
family are implemented from scratch so that their accuracy is a tested
contract of this package rather than an import.  All gamma-family
evaluation is routed through log space, which keeps the outer solvers
stable when intermediate values leave double range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "Accuracy",
    "DEFAULT_ACCURACY",
    "DomainError",
    "ConvergenceError",
    "lambert_w0",
    "ln_gamma",
    "upper_incomplete_gamma",
    "regularized_upper_gamma",
    "log_upper_incomplete_gamma",
]


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConvergenceError(RuntimeError):
    """An iterative scheme failed to reach its tolerance."""


@dataclass(frozen=True)
class Accuracy:
    """Tolerances shared by the iterative schemes in this module."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_iter: int = 100

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0.0 and self.rel_tol > 0.0):
            raise ValueError("Accuracy: abs_tol and rel_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("Accuracy: max_iter must be >= 1")


DEFAULT_ACCURACY = Accuracy()

_NEG_INV_E = -math.exp(-1.0)  # branch point of the principal branch
_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# Lanczos approximation of log-gamma, g = 7, 9 coefficients.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def lambert_w0(x: float, accuracy: Accuracy = DEFAULT_ACCURACY) -> float:
    """Principal branch of the Lambert-W function: w with w*exp(w) = x, w >= -1.

    Initial guess, by region:
      * x in [-1/e, -0.25): series in p = sqrt(2(e*x + 1)) around the branch
        point, w = -1 + p - p^2/3 + 11p^3/72 - 43p^4/540; returned directly
        when p < 1e-3 (truncation error ~p^5 is already below tolerance and
        Halley's denominators degenerate there);
      * x in [-0.25, e): w = log1p(x);
      * x >= e: w = log(x) - log(log(x)).
    Halley's iteration then polishes the guess.  Arguments within abs_tol
    below -1/e are treated as the branch point itself.
    """
    if math.isnan(x):
        raise DomainError("lambert_w0: x is NaN")
    if x < _NEG_INV_E:
        if x < _NEG_INV_E - accuracy.abs_tol:
            raise DomainError(
                f"lambert_w0: x={x!r} is below the branch point -1/e"
            )
        return -1.0
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        raise DomainError("lambert_w0: x must be finite")

    if x < -0.25:
        p = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 - p * (43.0 / 540.0))))
        if p < 1e-3:
            return w
    elif x < math.e:
        w = math.log1p(x)
    else:
        lx = math.log(x)
        w = lx - math.log(lx)

    for _ in range(accuracy.max_iter):
        ew = math.exp(w)
        f = w * ew - x
        if f == 0.0:
            return w
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        dw = f / denom
        w -= dw
        if abs(dw) <= accuracy.abs_tol + accuracy.rel_tol * abs(w):
            residual = abs(w * math.exp(w) - x)
            if residual <= max(accuracy.abs_tol, accuracy.rel_tol * abs(x)):
                return w
    raise ConvergenceError(
        f"lambert_w0: no convergence for x={x!r} in {accuracy.max_iter} iterations"
    )


def ln_gamma(m: float) -> float:
    """Natural log of Gamma(m) for m > 0 (Lanczos, g=7, 9 terms).

    Arguments below 0.5 are mapped through the reflection formula so the
    Lanczos core only ever runs on its accurate half-line.
    """
    if math.isnan(m) or m <= 0.0:
        raise DomainError(f"ln_gamma: m={m!r} must be positive")
    if m < 0.5:
        return math.log(math.pi / math.sin(math.pi * m)) - ln_gamma(1.0 - m)
    z = m - 1.0
    acc = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _LN_SQRT_2PI + (z + 0.5) * math.log(t) - t + math.log(acc)


def _regularized_lower_series(m: float, x: float) -> float:
    """Regularized lower incomplete gamma P(m, x) by power series (x < m + 1)."""
    ap = m
    term = 1.0 / m
    total = term
    for _ in range(1000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            return total * math.exp(m * math.log(x) - x - ln_gamma(m))
    raise ConvergenceError(
        f"incomplete gamma series did not converge for m={m!r}, x={x!r}"
    )


def _log_upper_continued_fraction(m: float, x: float) -> float:
    """log Gamma(m, x) by modified Lentz continued fraction (x >= m + 1)."""
    tiny = 1e-300
    b = x + 1.0 - m
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        an = -i * (i - m)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        # a couple of ulps: the converged delta may sit one ulp off 1.0
        if abs(delta - 1.0) < 4e-16:
            return -x + m * math.log(x) + math.log(h)
    raise ConvergenceError(
        f"incomplete gamma continued fraction did not converge for m={m!r}, x={x!r}"
    )


def _check_gamma_args(m: float, x: float) -> None:
    if math.isnan(m) or m <= 0.0:
        raise DomainError(f"incomplete gamma: m={m!r} must be positive")
    if math.isnan(x) or x < 0.0:
        raise DomainError(f"incomplete gamma: x={x!r} must be non-negative")


def log_upper_incomplete_gamma(m: float, x: float) -> float:
    """log of Gamma(m, x) = integral_x^inf t^(m-1) e^-t dt.

    Series branch below x = m + 1, continued fraction at and above it;
    x = +inf maps to -inf.
    """
    _check_gamma_args(m, x)
    if x == 0.0:
        return ln_gamma(m)
    if math.isinf(x):
        return -math.inf
    if x < m + 1.0:
        q = 1.0 - _regularized_lower_series(m, x)
        return ln_gamma(m) + math.log(q)
    return _log_upper_continued_fraction(m, x)


def upper_incomplete_gamma(m: float, x: float) -> float:
    """Upper incomplete gamma Gamma(m, x); monotonically non-increasing in x."""
    return math.exp(log_upper_incomplete_gamma(m, x))


def regularized_upper_gamma(m: float, x: float) -> float:
    """Regularized upper gamma Q(m, x) = Gamma(m, x)/Gamma(m) in [0, 1]."""
    _check_gamma_args(m, x)
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < m + 1.0:
        q = 1.0 - _regularized_lower_series(m, x)
    else:
        q = math.exp(_log_upper_continued_fraction(m, x) - ln_gamma(m))
    return min(1.0, max(0.0, q))
