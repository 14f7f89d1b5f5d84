"""Quadrature rules on the reference triangle, intervals and circles."""

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@lru_cache(maxsize=None)
def gauss_legendre(n):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


def interval_rule(a, b, order):
    """Rule on [a, b] integrating polynomials of degree ``order`` exactly."""
    x, w = gauss_legendre(max(1, order // 2 + 1))
    return a + (b - a) * x, (b - a) * w


@lru_cache(maxsize=None)
def triangle_rule(order):
    """Conical-product rule on the reference triangle {xi, eta >= 0, xi + eta <= 1}.

    Exact for polynomials of total degree ``order``; weights sum to 1/2.
    The square (u, t) is collapsed onto the triangle by xi = u(1-t),
    eta = u t, whose Jacobian u is absorbed into a Gauss-Jacobi weight.
    """
    if order < 1:
        raise ValueError("quadrature order must be >= 1")
    n = order // 2 + 1
    u, wu = roots_jacobi(n, 0.0, 1.0)
    u = 0.5 * (u + 1.0)
    wu = 0.25 * wu
    t, wt = gauss_legendre(n)
    U, T = np.meshgrid(u, t, indexing="ij")
    pts = np.column_stack([(U * (1.0 - T)).ravel(), (U * T).ravel()])
    return pts, np.outer(wu, wt).ravel()


@lru_cache(maxsize=None)
def square_rule(order):
    """Tensor Gauss-Legendre rule on [0, 1]^2, exact to degree ``order`` per variable."""
    x, w = gauss_legendre(max(1, order // 2 + 1))
    S, T = np.meshgrid(x, x, indexing="ij")
    return np.column_stack([S.ravel(), T.ravel()]), np.outer(w, w).ravel()


def periodic_rule(n, period=2.0 * np.pi, offset=0.0):
    """Trapezoid rule for periodic integrands over one period."""
    x = offset + np.arange(n) * (period / n)
    return x, np.full(n, period / n)
