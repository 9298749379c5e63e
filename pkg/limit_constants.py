from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List

import numpy as np
from scipy import integrate, optimize, special
from sympy.functions.combinatorial.numbers import stirling

from config import settings


# smallest rtol brentq accepts
_BRENTQ_RTOL = 4 * np.finfo(float).eps


class ConstantDomainError(ValueError):
    """Argument outside the domain where the constant is defined."""
    pass


# -----------------------------
# Special functions
# -----------------------------


def zeta(s: float) -> float:
    if s <= 1:
        raise ConstantDomainError(f"zeta(s) needs s > 1, got {s}")
    return float(special.zeta(s, 1))


@lru_cache(maxsize=None)
def stirling_first(n: int, i: int) -> int:
    """Unsigned Stirling number of the first kind: x(x+1)...(x+n-1) = sum_i [n, i] x^i."""
    if n < 0 or i < 0:
        raise ConstantDomainError(f"Stirling numbers need n, i >= 0, got ({n}, {i})")
    return int(stirling(n, i, kind=1, signed=False))


def polylog(s: int, x: float) -> float:
    """Li_s(x) = sum_{k>=1} x^k / k^s for integer s and 0 <= x <= 1."""
    if not 0.0 <= x <= 1.0:
        raise ConstantDomainError(f"polylog is evaluated on [0, 1], got x={x}")
    if x == 1.0:
        if s <= 1:
            raise ConstantDomainError(f"Li_{s}(1) diverges")
        return zeta(s)
    if x == 0.0:
        return 0.0
    if s == 1:
        return -math.log1p(-x)
    if s == 0:
        return x / (1.0 - x)
    terms: List[float] = []
    k = 1
    # terms grow while k^{-s} beats x^k (s < 0), so only stop past the peak
    peak = -s / -math.log(x) if s < 0 else 0.0
    while True:
        term = x ** k * float(k) ** (-s)
        terms.append(term)
        if k > peak and term < 1e-18 * abs(math.fsum(terms[-64:])):
            break
        k += 1
        if k > 10_000_000:
            raise ConstantDomainError(f"Li_{s}({x}) series did not converge")
    return math.fsum(terms)


# -----------------------------
# Critical points
# -----------------------------


def psi(d: int, t: float) -> float:
    """psi_d(t) = -log t / (1 - t)^d on (0, 1)."""
    if not 0.0 < t < 1.0:
        raise ConstantDomainError(f"psi_d needs t in (0, 1), got {t}")
    return -math.log(t) / (1.0 - t) ** d


def _psi_x(d: int, x: float) -> float:
    """psi_d(e^{-x})."""
    if x == 0.0:
        if d == 1:
            return 1.0
        return math.inf
    return x / (-math.expm1(-x)) ** d


def _dpsi_x(d: int, x: float) -> float:
    """d/dx psi_d(e^{-x})."""
    # 1/x - d/(e^x - 1), with the series near 0 for d = 1
    if d == 1 and x < 1e-4:
        return _psi_x(d, x) * (0.5 - x / 12.0 + x ** 3 / 720.0)
    return _psi_x(d, x) * (1.0 / x - d / math.expm1(x))


@dataclass(frozen=True)
class CriticalPoint:
    d: int
    t_star: float
    c_star: float
    residual: float


def _critical_equation(d: int, t: float) -> float:
    return (d + 1) * (1.0 - t) + (1.0 + d * t) * math.log(t)


@lru_cache(maxsize=None)
def critical_point(d: int) -> CriticalPoint:
    """t_d* solves (d+1)(1-t) + (1+dt) log t = 0 in (0, 1); t_1* = c_1* = 1."""
    if d < 1:
        raise ConstantDomainError(f"d must be >= 1, got {d}")
    if d == 1:
        return CriticalPoint(1, 1.0, 1.0, 0.0)
    t = optimize.brentq(
        lambda s: _critical_equation(d, s),
        math.exp(-2.0 * (d + 1)),
        0.5,
        xtol=1e-16,
        rtol=_BRENTQ_RTOL,
        maxiter=500,
    )
    return CriticalPoint(d, t, psi(d, t), abs(_critical_equation(d, t)))


def _x_c(d: int, c: float) -> float:
    """x = -log t_c, the root of psi_d(e^{-x}) = c on [-log t_d*, inf)."""
    cp = critical_point(d)
    x_star = -math.log(cp.t_star)
    if c < cp.c_star:
        raise ConstantDomainError(f"t_c needs c >= c_d* = {cp.c_star}, got {c}")
    if c == cp.c_star:
        return x_star
    # psi >= x, so the root lies below c
    return optimize.brentq(lambda x: _psi_x(d, x) - c, x_star, max(c, x_star + 1.0), xtol=1e-15, rtol=_BRENTQ_RTOL, maxiter=500)


def t_c(d: int, c: float) -> float:
    """Smallest positive root of psi_d(t) = c; t_c <= t_d*."""
    return math.exp(-_x_c(d, c))


# -----------------------------
# Betti densities
# -----------------------------


def g(d: int, c: float) -> float:
    """Limiting density E[beta_d(K_n^(d)(c/n))] / C(n, d)."""
    if c < 0:
        raise ConstantDomainError(f"c must be >= 0, got {c}")
    if c < critical_point(d).c_star:
        return 0.0
    t = t_c(d, c)
    return c * t * (1 - t) ** d + c / (d + 1) * (1 - t) ** (d + 1) - (1 - t)


def _h_from_x(d: int, x: float) -> float:
    """h_d at c = psi_d(e^{-x}), factored through t to avoid cancellation."""
    t = math.exp(-x)
    c = _psi_x(d, x)
    geometric = math.fsum((1.0 - t) ** j for j in range(d + 1))
    return max(0.0, t * (1.0 + x - c / (d + 1) * geometric))


def h(d: int, c: float) -> float:
    """h_d(c) = 1 - c/(d+1) + g_d(c), the limiting (d-1)-th Betti density."""
    if c < 0:
        raise ConstantDomainError(f"c must be >= 0, got {c}")
    if c < critical_point(d).c_star:
        return 1.0 - c / (d + 1)
    return _h_from_x(d, _x_c(d, c))


# -----------------------------
# Lifetime constants
# -----------------------------


@lru_cache(maxsize=None)
def I_quadrature(d: int, alpha: float) -> float:
    """
    alpha/d! int_0^inf h_d(s) s^{alpha-1} ds. h is affine on [0, c_d*]; the
    rest is integrated in x = -log t_c, where s = psi_d(e^{-x}).
    """
    if alpha <= 0:
        raise ConstantDomainError(f"alpha must be > 0, got {alpha}")
    cp = critical_point(d)
    c_star = cp.c_star
    head = c_star ** alpha / alpha - c_star ** (alpha + 1) / ((d + 1) * (alpha + 1))

    x_star = -math.log(cp.t_star)

    def integrand(x: float) -> float:
        s = _psi_x(d, x)
        return _h_from_x(d, x) * s ** (alpha - 1) * _dpsi_x(d, x)

    tail = 0.0
    edges = [x_star, x_star + 1.0, x_star + 4.0, x_star + 16.0, x_star + 64.0]
    for a, b in zip(edges[:-1], edges[1:]):
        piece, _ = integrate.quad(integrand, a, b, epsabs=settings.quad_abs_tol * 1e-3, epsrel=1e-13, limit=400)
        tail += piece
    rest, _ = integrate.quad(integrand, edges[-1], math.inf, epsabs=1e-16, limit=200)
    tail += rest
    return alpha / math.factorial(d) * (head + tail)


@lru_cache(maxsize=None)
def I_log_integral(d: int, alpha: float) -> float:
    """
    1/(d!(alpha+1)) (int_0^{t*} (-log s)^{alpha+1}/(1-s)^{d alpha} ds
    + (c*)^alpha (1 - t* + t* log t*)), with s = e^{-x} in the integral.
    """
    if alpha <= 0:
        raise ConstantDomainError(f"alpha must be > 0, got {alpha}")
    cp = critical_point(d)
    x_star = -math.log(cp.t_star)

    def integrand(x: float) -> float:
        if x == 0.0:
            return 0.0
        return x ** (alpha + 1) * math.exp(-x) / (-math.expm1(-x)) ** (d * alpha)

    body = 0.0
    edges = [x_star, x_star + 1.0, x_star + 8.0, x_star + 64.0]
    for a, b in zip(edges[:-1], edges[1:]):
        piece, _ = integrate.quad(integrand, a, b, epsabs=settings.quad_abs_tol * 1e-3, epsrel=1e-13, limit=400)
        body += piece
    rest, _ = integrate.quad(integrand, edges[-1], math.inf, epsabs=1e-16, limit=200)
    body += rest
    t = cp.t_star
    boundary = cp.c_star ** alpha * (1.0 - t + t * math.log(t))
    return (body + boundary) / (math.factorial(d) * (alpha + 1))


def _as_positive_int(alpha: float) -> int:
    if float(alpha) != int(alpha) or alpha < 1:
        raise ConstantDomainError(f"The series form needs a positive integer alpha, got {alpha}")
    return int(alpha)


@lru_cache(maxsize=None)
def zeta_combination(alpha: int) -> float:
    """I_0^{(alpha)} = alpha sum_i [alpha-1, i] zeta(alpha+2-i)."""
    a = _as_positive_int(alpha)
    return a * math.fsum(stirling_first(a - 1, i) * zeta(a + 2 - i) for i in range(a))


@lru_cache(maxsize=None)
def I_series(d: int, alpha: float) -> float:
    """Stirling/polylogarithm form of I_{d-1}^{(alpha)} for integer alpha."""
    a = _as_positive_int(alpha)
    if d == 1:
        return zeta_combination(a)
    cp = critical_point(d)
    t, c_star = cp.t_star, cp.c_star
    L = -math.log(t)
    m = d * a - 1
    inner = math.fsum(
        stirling_first(m, i) * L ** j / math.factorial(j) * polylog(a + 2 - i - j, t)
        for i in range(m + 1)
        for j in range(a + 2)
    )
    series = math.factorial(a) / math.factorial(m) * inner
    boundary = c_star ** a * (L - (1.0 - t)) / (d * (a + 1))
    return (series + boundary) / math.factorial(d)


def I_closed_form_alpha1(d: int) -> float:
    """Explicit Li_2/log expressions of I_{d-1} for d = 1, 2, 3."""
    if d == 1:
        return zeta(3)
    t = critical_point(d).t_star
    lt = math.log(t)
    l1 = math.log1p(-t)
    if d == 2:
        return 0.5 * (
            polylog(2, t)
            + lt * l1
            + t * lt ** 2 / (2 * (1 - t))
            + lt * (lt + (1 - t)) / (4 * (1 - t) ** 2)
        )
    if d == 3:
        return (1.0 / 12.0) * (
            polylog(2, t)
            + (lt - 1) * l1
            + t * lt * (lt - 2) / (2 * (1 - t))
            + t * lt ** 2 / (2 * (1 - t) ** 2)
            + lt * (lt + (1 - t)) / (3 * (1 - t) ** 3)
        )
    raise ConstantDomainError(f"Closed form tabulated for d <= 3, got {d}")


@dataclass(frozen=True)
class ConstantReport:
    d: int
    alpha: float
    I_quadrature: float
    I_series: float | None
    I_log_integral: float
    discrepancy: float | None

    def to_dict(self) -> Dict[str, object]:
        return {
            "d": self.d,
            "alpha": self.alpha,
            "I_quadrature": self.I_quadrature,
            "I_series": self.I_series,
            "I_log_integral": self.I_log_integral,
            "discrepancy": self.discrepancy,
        }


def constant_report(d: int, alpha: float) -> ConstantReport:
    quad = I_quadrature(d, alpha)
    series = I_series(d, alpha) if float(alpha).is_integer() and alpha >= 1 else None
    return ConstantReport(
        d,
        alpha,
        quad,
        series,
        I_log_integral(d, alpha),
        abs(series - quad) if series is not None else None,
    )
