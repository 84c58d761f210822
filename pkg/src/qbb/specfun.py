"""Special functions and quadrature rules.

``expint_ei`` and ``xi_3f3`` are only needed on the negative real axis, which is
where the multi-copy dephasing integrals place their arguments.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

from .errors import DomainError, InvalidOrder

__all__ = ["QuadratureRule", "gl_nodes", "gauss_jacobi", "expint_ei", "xi_3f3"]

EULER_GAMMA = 0.57721566490153286061

# Below this |x| the power series is used, above it the continued fraction.
# The series loses relative accuracy to cancellation as |x| grows, while the
# fraction needs more terms as |x| shrinks; at 2 both stay below 1e-13.
EI_SPLIT = 2.0
XI_SPLIT = 6.0

_LAG_X, _LAG_W = np.polynomial.laguerre.laggauss(80)


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    order: int
    a: float
    b: float

    def integrate(self, f):
        return np.dot(self.weights, f(self.nodes))


def _check_order(order):
    if int(order) != order or order <= 0:
        raise InvalidOrder(f"quadrature order must be a positive integer, got {order!r}")
    return int(order)


def gl_nodes(order, a=-1.0, b=1.0):
    """Gauss-Legendre rule on ``(a, b)``; weights sum to ``b - a``."""
    order = _check_order(order)
    if not a < b:
        raise DomainError(f"need a < b, got ({a}, {b})")
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (b - a)
    return QuadratureRule(half * x + 0.5 * (a + b), half * w, order, float(a), float(b))


def gauss_jacobi(order, alpha, beta, a=-1.0, b=1.0):
    """Gauss-Jacobi rule for the weight ``(1-u)^alpha (1+u)^beta`` mapped to ``(a, b)``.

    The weights are normalised to sum to one, so the rule integrates against
    the matching beta probability density.
    """
    order = _check_order(order)
    if not a < b:
        raise DomainError(f"need a < b, got ({a}, {b})")
    x, w = roots_jacobi(order, alpha, beta)
    half = 0.5 * (b - a)
    return QuadratureRule(half * x + 0.5 * (a + b), w / w.sum(), order, float(a), float(b))


def _ei_series(x):
    total = 0.0
    term = 1.0
    k = 0
    while True:
        k += 1
        term *= x / k
        add = term / k
        total += add
        if abs(add) <= 1e-17 * abs(total) or k > 500:
            break
    return EULER_GAMMA + math.log(-x) + total


def _ei_contfrac(x, max_terms=200000):
    """Ei(x) for x < 0 from the continued fraction of E1(-x), modified Lentz."""
    t = -x
    tiny = 1e-300
    bb = t + 1.0
    c = 1.0 / tiny
    d = 1.0 / bb
    h = d
    for i in range(1, max_terms + 1):
        an = -float(i * i)
        bb += 2.0
        d = an * d + bb
        if d == 0.0:
            d = tiny
        d = 1.0 / d
        c = bb + an / c
        if c == 0.0:
            c = tiny
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return -h * math.exp(-t)


def expint_ei(x):
    """Exponential integral Ei(x) for negative real x."""
    x = float(x)
    if not x < 0:
        raise DomainError(f"expint_ei is implemented for x < 0 only, got {x}")
    if x < -745.0:
        return -0.0
    if -x <= EI_SPLIT:
        return _ei_series(x)
    return _ei_contfrac(x)


def _xi_series(z, max_terms=500):
    total = 1.0
    term = 1.0
    for m in range(1, max_terms):
        term *= z / m
        add = term / (m + 1) ** 3
        total += add
        if abs(add) < 1e-16 * abs(total):
            break
    return total


def xi_3f3(z):
    """Xi(z) = 3F3(1,1,1; 2,2,2; z) for real z <= 0.

    Small arguments use the power series. For ``|z| > 6`` the series cancels
    badly, so the integral form ``Xi(-v) = 1/2 int_0^1 ln^2(t) exp(-v t) dt``
    is split into its closed-form limit over ``(0, inf)`` minus an
    exponentially small tail evaluated with Gauss-Laguerre. That branch is
    accurate for any ``v > 6``; the series alone is only trusted up to 6.
    """
    z = float(z)
    if z > 0:
        raise DomainError(f"xi_3f3 is implemented for z <= 0 only, got {z}")
    if -z <= XI_SPLIT:
        return _xi_series(z)
    v = -z
    lv = math.log(v)
    tail = math.exp(-v) * float(np.dot(_LAG_W, np.log1p(_LAG_X / v) ** 2))
    return ((lv + EULER_GAMMA) ** 2 + math.pi**2 / 6.0 - tail) / (2.0 * v)
