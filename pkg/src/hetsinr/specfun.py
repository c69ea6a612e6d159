"""Numerical kernels shared by the analytic metrics.

Two primitives live here: the interference kernel

    Z(tau, alpha, bhat) = tau^(2/alpha) * int_{(bhat/tau)^(2/alpha)}^inf
                          du / (1 + u^(alpha/2)),

and a semi-infinite adaptive integrator for integrands of the form
x * exp(-increasing(x)).  The kernel is evaluated from the integral form:
the interval is compressed through u = L + v/(1 - v), the head is
integrated adaptively, and the tail beyond a moderate cutoff M > 1 is
summed analytically from the alternating series

    int_M^inf du/(1+u^(alpha/2)) = sum_m (-1)^m * 2/((m+1)alpha - 2)
                                   * M^(1-(m+1)alpha/2),

whose truncation error is bounded by the first omitted term.  A Gauss
hypergeometric form of the same kernel is provided for cross-checking
only, never as the evaluation path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from scipy.integrate import quad

from .errors import (
    AlphaOutOfRangeError,
    NonPositiveParameterError,
    QuadratureFailureError,
)

__all__ = [
    "QuadratureSettings",
    "DEFAULT_SETTINGS",
    "z_kernel",
    "z_kernel_alpha4",
    "z_kernel_hyp2f1",
    "gauss_2f1",
    "integrate_semi_infinite",
]

# geometric scan bounds for the decay-cutoff search
_SCAN_START = 1e-9
_SCAN_STOP = 1e30


@dataclass(frozen=True)
class QuadratureSettings:
    """Tolerances and budgets for every numerical integral.

    Attributes:
        rel_tol: relative tolerance of adaptive quadrature.
        abs_tol: absolute tolerance of adaptive quadrature and of the
            analytic tail remainder.
        max_subdivisions: adaptive subdivision budget per integral.
        truncation_tol: a semi-infinite integrand is cut once it falls
            below this fraction of its running maximum.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 200
    truncation_tol: float = 1e-14

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0 or self.truncation_tol <= 0:
            raise NonPositiveParameterError("tolerances must be > 0")
        if self.max_subdivisions < 1:
            raise NonPositiveParameterError("max_subdivisions must be >= 1")

    def tighter(self, factor: float) -> "QuadratureSettings":
        """Settings with tolerances divided by ``factor``."""
        return QuadratureSettings(
            rel_tol=self.rel_tol / factor,
            abs_tol=self.abs_tol / factor,
            max_subdivisions=self.max_subdivisions,
            truncation_tol=self.truncation_tol,
        )


DEFAULT_SETTINGS = QuadratureSettings()


def _checked_quad(f: Callable[[float], float], a: float, b: float,
                  settings: QuadratureSettings,
                  points: Sequence[float] | None = None) -> float:
    """Adaptive quadrature on [a, b]; raise when the tolerance was missed."""
    if points is not None and settings.max_subdivisions <= len(points):
        points = None  # QUADPACK needs the budget to exceed the break points
    out = quad(f, a, b, epsabs=settings.abs_tol, epsrel=settings.rel_tol,
               limit=settings.max_subdivisions, points=points, full_output=1)
    value, abserr = out[0], out[1]
    if len(out) > 3:
        # QUADPACK flagged the result; accept it only if the error
        # estimate is still comfortably inside the requested tolerance.
        allowed = 100.0 * max(settings.abs_tol, settings.rel_tol * abs(value))
        if not abserr <= allowed:
            raise QuadratureFailureError(
                f"quadrature on [{a:g}, {b:g}] failed: {out[3]} "
                f"(error estimate {abserr:g})")
    return value


def _tail_series(m_cut: float, alpha: float, eps: float) -> float:
    """Analytic tail int_M^inf du/(1+u^(alpha/2)) for M > 1.

    Alternating series in powers of M^(-alpha/2); stops once the next
    term (an error bound) drops below eps.
    """
    total = 0.0
    sign = 1.0
    for m in range(64):
        q = (m + 1) * alpha / 2.0
        term = (1.0 / (q - 1.0)) * m_cut ** (1.0 - q)
        if term < eps:
            break
        total += sign * term
        sign = -sign
    return total


def z_kernel(tau: float, alpha: float, b_hat: float,
             settings: QuadratureSettings | None = None) -> float:
    """Interference kernel Z(tau, alpha, bhat), nonnegative.

    Z(0, ., .) = 0 by continuity.  Raises AlphaOutOfRangeError for
    alpha <= 2 (the integral diverges there) and
    NonPositiveParameterError for tau < 0 or bhat <= 0.
    """
    if alpha <= 2.0:
        raise AlphaOutOfRangeError(f"alpha must be > 2, got {alpha}")
    if b_hat <= 0.0:
        raise NonPositiveParameterError(f"bias ratio must be > 0, got {b_hat}")
    if tau < 0.0:
        raise NonPositiveParameterError(f"threshold must be >= 0, got {tau}")
    if tau == 0.0:
        return 0.0
    settings = settings or DEFAULT_SETTINGS

    p = alpha / 2.0
    prefactor = tau ** (2.0 / alpha)
    lower = (b_hat / tau) ** (2.0 / alpha)
    m_cut = max(2.0 * lower, 10.0)
    eps = settings.abs_tol / max(1.0, prefactor)

    # head on [lower, m_cut] through the compression u = lower + v/(1-v)
    v_cut = (m_cut - lower) / (1.0 + m_cut - lower)

    def head(v: float) -> float:
        one_minus = 1.0 - v
        u = lower + v / one_minus
        return 1.0 / ((1.0 + u ** p) * one_minus * one_minus)

    value = _checked_quad(head, 0.0, v_cut, settings)
    value += _tail_series(m_cut, alpha, eps)
    return prefactor * value


def z_kernel_alpha4(tau: float, b_hat: float) -> float:
    """Arctangent form of the kernel at alpha = 4 (cross-check path)."""
    if tau < 0.0:
        raise NonPositiveParameterError(f"threshold must be >= 0, got {tau}")
    if b_hat <= 0.0:
        raise NonPositiveParameterError(f"bias ratio must be > 0, got {b_hat}")
    return math.sqrt(tau) * math.atan(math.sqrt(tau / b_hat))


def _series_2f1(a: float, b: float, c: float, z: float,
                rel_tol: float = 1e-13, max_terms: int = 200_000) -> float:
    """Power series sum of 2F1 for |z| < 1."""
    total = 1.0
    term = 1.0
    for n in range(max_terms):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z
        total += term
        if abs(term) <= rel_tol * abs(total):
            return total
    raise QuadratureFailureError(
        f"hypergeometric series did not converge within {max_terms} terms "
        f"(z = {z:g})")


def gauss_2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric function for real z < 1.

    Direct series where |z| < 0.9; otherwise the Pfaff transformation
    2F1(a,b;c;z) = (1-z)^(-a) 2F1(a, c-b; c; z/(z-1)) maps the argument
    into [0, 1) where the series converges.
    """
    if z >= 1.0:
        raise NonPositiveParameterError(f"argument must be < 1, got {z}")
    if abs(z) < 0.9:
        return _series_2f1(a, b, c, z)
    w = z / (z - 1.0)
    return (1.0 - z) ** (-a) * _series_2f1(a, c - b, c, w)


def z_kernel_hyp2f1(tau: float, alpha: float, b_hat: float) -> float:
    """Hypergeometric form of the interference kernel (cross-check path):

        2 tau bhat^(2/alpha - 1) / (alpha - 2)
            * 2F1(1, 1 - 2/alpha; 2 - 2/alpha; -tau/bhat)
    """
    if alpha <= 2.0:
        raise AlphaOutOfRangeError(f"alpha must be > 2, got {alpha}")
    if tau == 0.0:
        return 0.0
    front = 2.0 * tau * b_hat ** (2.0 / alpha - 1.0) / (alpha - 2.0)
    return front * gauss_2f1(1.0, 1.0 - 2.0 / alpha, 2.0 - 2.0 / alpha,
                             -tau / b_hat)


def integrate_semi_infinite(f: Callable[[float], float],
                            settings: QuadratureSettings | None = None) -> float:
    """Integrate a nonnegative, eventually decaying f over [0, inf).

    A geometric scan locates the running maximum and the point where the
    integrand has dropped below truncation_tol times that maximum; the
    finite remainder is then integrated adaptively with the peak given
    to the subdivision as a break point.
    """
    settings = settings or DEFAULT_SETTINGS
    x = _SCAN_START
    f_max = 0.0
    x_peak = 0.0
    cutoff = None
    while x <= _SCAN_STOP:
        fx = f(x)
        if fx > f_max:
            f_max = fx
            x_peak = x
        elif f_max > 0.0 and fx <= settings.truncation_tol * f_max:
            cutoff = x
            break
        x *= 2.0
    if f_max == 0.0:
        return 0.0
    if cutoff is None:
        raise QuadratureFailureError(
            f"integrand has not decayed below {settings.truncation_tol:g} "
            f"of its maximum by x = {_SCAN_STOP:g}")
    points = [x_peak] if 0.0 < x_peak < cutoff else None
    return _checked_quad(f, 0.0, cutoff, settings, points=points)
