"""Quadrature rules on the reference triangle and the unit interval.

Triangle rules use the collapsed (Duffy-type) Gauss-Jacobi construction:
a tensor product of Gauss-Legendre points in one direction with
Gauss-Jacobi(1, 0) points in the other absorbs the Jacobian of the
square-to-triangle map exactly, so an n x n rule integrates all
polynomials of total degree 2n - 1 on the reference triangle
(0,0)-(1,0)-(0,1).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_DEGREE = 12


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights with a declared polynomial exactness degree."""

    points: np.ndarray  # (nq, dim) reference coordinates; (nq,) for edges
    weights: np.ndarray  # (nq,)
    degree: int


@lru_cache(maxsize=None)
def triangle_rule(min_degree: int) -> QuadratureRule:
    """Rule on the reference triangle, exact to at least `min_degree`.

    Weights sum to the reference measure 1/2.
    """
    if not 0 <= min_degree <= MAX_DEGREE:
        raise ValueError(f"unsupported triangle rule degree {min_degree}")
    n = max(1, (min_degree + 2) // 2)  # 2n - 1 >= min_degree

    xg, wg = roots_legendre(n)
    xj, wj = roots_jacobi(n, 1, 0)
    s = (xj + 1.0) / 2.0  # collapsed direction, weight (1 - s)
    t = (xg + 1.0) / 2.0

    x = np.repeat(s, n)
    y = (1.0 - np.repeat(s, n)) * np.tile(t, n)
    # Jacobi weight carries (1-s): shifted measure picks up 1/8 overall.
    w = (np.repeat(wj, n) * np.tile(wg, n)) / 8.0
    return QuadratureRule(points=np.column_stack([x, y]), weights=w, degree=2 * n - 1)


@lru_cache(maxsize=None)
def edge_rule(min_degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1], exact to at least `min_degree`."""
    if not 0 <= min_degree <= MAX_DEGREE:
        raise ValueError(f"unsupported edge rule degree {min_degree}")
    n = max(1, (min_degree + 2) // 2)
    x, w = roots_legendre(n)
    return QuadratureRule(points=(x + 1.0) / 2.0, weights=w / 2.0, degree=2 * n - 1)
