"""Special functions and quadrature used by the closed-form outage expressions.

Everything here is scalar, pure and dependency-free apart from numpy (used only
to generate Gauss-Legendre nodes at import time). The Bessel and exponential
integral implementations are tuned for the argument ranges the outage formulas
actually hit: relative accuracy is ~1e-15 over [1e-12, 700], comfortably inside
the 1e-10 contract.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

EULER = 0.57721566490153286

# 7-point Gauss-Legendre rule on (-1, 1); open rule, so integrands with an
# integrable singularity at an interval endpoint are never evaluated there.
_GL_NODES, _GL_WEIGHTS = (tuple(a.tolist()) for a in np.polynomial.legendre.leggauss(7))


def _check_positive_finite(x: float, name: str) -> None:
    if not math.isfinite(x) or x <= 0.0:
        raise ValueError(f"{name} requires a positive finite argument, got {x!r}")


def _k0_series(x: float) -> float:
    # log series around 0, accurate for x <= 2
    q = 0.25 * x * x
    lg = math.log(0.5 * x)
    term = 1.0
    i0 = 1.0
    s = 0.0
    h = 0.0
    for j in range(1, 80):
        h += 1.0 / j
        term *= q / (j * j)
        i0 += term
        s += term * h
        if term * max(h, 1.0) < 1e-19 * max(i0, abs(s)):
            break
    return -(lg + EULER) * i0 + s


def _k1_series(x: float) -> float:
    # companion log series; the 1/x pole carries the small-x behaviour
    q = 0.25 * x * x
    lg = math.log(0.5 * x)
    t = 1.0
    i1s = 1.0
    hj = 0.0
    hj1 = 1.0
    s = -2.0 * EULER + 1.0
    for j in range(1, 80):
        t *= q / (j * (j + 1))
        i1s += t
        hj += 1.0 / j
        hj1 += 1.0 / (j + 1)
        s += t * (-2.0 * EULER + hj + hj1)
        if t * 10.0 < 1e-19 * max(abs(s), i1s):
            break
    i1 = 0.5 * x * i1s
    return lg * i1 + 1.0 / x - 0.25 * x * s


def _k0_k1_large(x: float) -> tuple[float, float]:
    """Steed/Lentz continued fraction for K0 and K1, x > 2.

    A plain asymptotic series cannot reach 1e-10 relative accuracy until
    x ~ 10 (it stalls at ~3.5e-3 when truncated optimally at x = 2), so the
    large-argument branch uses the CF2 fraction instead; it converges in a
    few dozen iterations at the crossover and a handful beyond x ~ 10.
    """
    eps = 2.2e-16
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d
    delh = d
    q1 = 0.0
    q2 = 1.0
    a1 = 0.25
    q = a1
    c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, 40001):
        a -= 2.0 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) <= eps:
            break
    else:
        raise ArithmeticError(f"continued fraction for K0/K1 failed to converge at x={x}")
    h = a1 * h
    k0 = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s
    k1 = k0 * (x + 0.5 - h) / x
    return k0, k1


def bessel_k0(x: float) -> float:
    """Modified Bessel function of the second kind, order zero."""
    _check_positive_finite(x, "bessel_k0")
    if x <= 2.0:
        return _k0_series(x)
    return _k0_k1_large(x)[0]


def bessel_k1(x: float) -> float:
    """Modified Bessel function of the second kind, order one."""
    _check_positive_finite(x, "bessel_k1")
    if x <= 2.0:
        return _k1_series(x)
    return _k0_k1_large(x)[1]


def _ei_series(x: float) -> float:
    # Ei(x) = gamma + ln|x| + sum x^j/(j j!); safe for 0 < x < 40 and -1 <= x < 0
    s = 0.0
    term = 1.0
    for j in range(1, 500):
        term *= x / j
        s += term / j
        if abs(term / j) < 1e-18 * abs(s):
            break
    return EULER + math.log(abs(x)) + s


def _e1_scaled_cf(t: float) -> float:
    # modified Lentz for e^t * E1(t), t > 1
    tiny = 1e-300
    b = t + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 20001):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise ArithmeticError(f"continued fraction for E1 failed to converge at t={t}")


def _ei_asymptotic(x: float) -> float:
    # Ei(x) ~ e^x/x * sum j!/x^j, optimally truncated; x >= 40
    s = 1.0
    term = 1.0
    for j in range(1, 200):
        nxt = term * j / x
        if nxt >= term:
            break
        term = nxt
        s += term
        if term < 1e-18 * s:
            break
    return math.exp(x) / x * s


def expint_ei(x: float) -> float:
    """Exponential integral Ei(x), principal value, x != 0.

    Branches: power series on (-1, 0) and (0, 40); continued fraction via
    E1(-x) for x <= -1 (the series loses all precision to cancellation out
    there); asymptotic series for x >= 40.
    """
    if not math.isfinite(x) or x == 0.0:
        raise ValueError(f"expint_ei requires a finite nonzero argument, got {x!r}")
    if x > 0.0:
        return _ei_series(x) if x < 40.0 else _ei_asymptotic(x)
    if x >= -1.0:
        return _ei_series(x)
    t = -x
    return -_e1_scaled_cf(t) * math.exp(-t)


def expint_e1_scaled(t: float) -> float:
    """e^t * E1(t) = -e^t * Ei(-t) for t > 0, without overflow for large t."""
    _check_positive_finite(t, "expint_e1_scaled")
    if t <= 1.0:
        return -math.exp(t) * _ei_series(-t)
    return _e1_scaled_cf(t)


@dataclass(frozen=True)
class QuadratureRule:
    """Chebyshev abscissas v_m = cos((2m-1)pi/2M), m = 1..M, strictly decreasing."""

    order: int
    nodes: tuple[float, ...]


def chebyshev_nodes(m: int) -> QuadratureRule:
    """Nodes for an M-point Gauss-Chebyshev sum (weights carry sqrt(1-v^2) factors)."""
    if not isinstance(m, int) or m < 1:
        raise ValueError(f"chebyshev_nodes requires a positive integer order, got {m!r}")
    nodes = tuple(math.cos((2 * i - 1) * math.pi / (2 * m)) for i in range(1, m + 1))
    return QuadratureRule(order=m, nodes=nodes)


class IntegrationError(ArithmeticError):
    """Adaptive quadrature ran out of refinement depth.

    Carries the best available estimate and the error actually achieved, so
    callers can decide whether the partial result is still usable.
    """

    def __init__(self, message: str, estimate: float, achieved_error: float):
        super().__init__(message)
        self.estimate = estimate
        self.achieved_error = achieved_error


def _gl7(f: Callable[[float], float], a: float, b: float) -> float:
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    acc = 0.0
    for t, w in zip(_GL_NODES, _GL_WEIGHTS):
        acc += w * f(mid + half * t)
    return acc * half


def adaptive_integrate(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float,
    max_depth: int = 60,
) -> float:
    """Integrate f over [lo, hi] to absolute tolerance tol.

    Recursive bisection with a 7-point Gauss-Legendre local rule; an interval
    is accepted when halving it moves the estimate by less than its share of
    the tolerance. The rule is open, so integrable endpoint singularities
    (the K0 log at zero, say) are resolved by subdivision rather than hit
    head-on; their leftover error shrinks geometrically with depth and is
    accepted if the total stays under tol.
    """
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
        raise ValueError(f"adaptive_integrate requires finite lo < hi, got [{lo}, {hi}]")
    if not (tol > 0.0):
        raise ValueError(f"adaptive_integrate requires tol > 0, got {tol!r}")
    total = 0.0
    leftover = 0.0
    stack = [(lo, hi, _gl7(f, lo, hi), tol, 0)]
    while stack:
        a, b, whole, tol_i, depth = stack.pop()
        mid = 0.5 * (a + b)
        left = _gl7(f, a, mid)
        right = _gl7(f, mid, b)
        delta = left + right - whole
        if abs(delta) <= tol_i:
            total += left + right
        elif depth >= max_depth:
            total += left + right
            leftover += abs(delta)
        else:
            stack.append((a, mid, left, 0.5 * tol_i, depth + 1))
            stack.append((mid, b, right, 0.5 * tol_i, depth + 1))
    if not math.isfinite(leftover) or leftover > tol:
        raise IntegrationError(
            f"integral over [{lo}, {hi}] did not converge at depth {max_depth}: "
            f"achieved error {leftover:.3e} exceeds tol {tol:.3e}",
            estimate=total,
            achieved_error=leftover,
        )
    return total
