"""Manufactured solutions of the heat equation on the unit square.

Both examples expose vectorized callables u, grad_u, dudt, f and u0 taking
point arrays of shape (..., 2) and a scalar time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

# e^{-x} underflows to zero below this exponent; skipping such series terms
# avoids useless work without changing any computed value.
_UNDERFLOW_EXPONENT = 700.0


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form solution data for the heat equation."""

    name: str
    u: Callable[[np.ndarray, float], np.ndarray]
    grad_u: Callable[[np.ndarray, float], np.ndarray]
    dudt: Callable[[np.ndarray, float], np.ndarray]
    f: Callable[[np.ndarray, float], np.ndarray]
    u0: Callable[[np.ndarray], np.ndarray]


def example1() -> ExactSolution:
    """Smooth decaying product of sines: u = e^{-pi^2 t} sin(pi x) sin(pi y).

    The source is f = pi^2 u and the initial datum satisfies the boundary
    condition.
    """
    pi2 = np.pi**2

    def u(x: np.ndarray, t: float) -> np.ndarray:
        return np.exp(-pi2 * t) * np.sin(np.pi * x[..., 0]) * np.sin(np.pi * x[..., 1])

    def grad_u(x: np.ndarray, t: float) -> np.ndarray:
        e = np.exp(-pi2 * t)
        sx, cx = np.sin(np.pi * x[..., 0]), np.cos(np.pi * x[..., 0])
        sy, cy = np.sin(np.pi * x[..., 1]), np.cos(np.pi * x[..., 1])
        return np.pi * e * np.stack([cx * sy, sx * cy], axis=-1)

    def dudt(x: np.ndarray, t: float) -> np.ndarray:
        return -pi2 * u(x, t)

    def f(x: np.ndarray, t: float) -> np.ndarray:
        return pi2 * u(x, t)

    def u0(x: np.ndarray) -> np.ndarray:
        return np.sin(np.pi * x[..., 0]) * np.sin(np.pi * x[..., 1])

    return ExactSolution(name="example1", u=u, grad_u=grad_u, dudt=dudt, f=f, u0=u0)


def example2(num_terms: int = 1000) -> ExactSolution:
    """Fourier solution with rough initial datum u0 = (1-x) sqrt(2) sin(pi y).

    The initial datum violates the boundary condition at x = 0; the solution

        u = (2 sqrt(2)/pi) sin(pi y) sum_j e^{-(j^2+1) pi^2 t} sin(j pi x)/j

    is evaluated with `num_terms` modes (terms whose exponential underflows
    are skipped). Every mode solves the homogeneous heat equation, so f = 0.
    The initial datum is returned in closed form, not as a truncated series.
    """
    if num_terms < 1:
        raise ValueError(f"num_terms must be >= 1, got {num_terms}")
    pi2 = np.pi**2
    amp = 2.0 * np.sqrt(2.0) / np.pi

    def _active_modes(t: float) -> np.ndarray:
        j = np.arange(1, num_terms + 1, dtype=float)
        if t > 0.0:
            j = j[(j**2 + 1.0) * pi2 * t < _UNDERFLOW_EXPONENT]
            if j.size == 0:
                j = j[:0]
        return j

    def _series(x: np.ndarray, t: float, weight: Callable[[np.ndarray], np.ndarray],
                trig: str) -> np.ndarray:
        j = _active_modes(t)
        if j.size == 0:
            return np.zeros(x[..., 0].shape)
        decay = np.exp(-(j**2 + 1.0) * pi2 * t)
        coeff = decay * weight(j)
        arg = np.multiply.outer(x[..., 0], np.pi * j)
        modes = np.sin(arg) if trig == "sin" else np.cos(arg)
        return modes @ coeff

    def u(x: np.ndarray, t: float) -> np.ndarray:
        return amp * np.sin(np.pi * x[..., 1]) * _series(x, t, lambda j: 1.0 / j, "sin")

    def grad_u(x: np.ndarray, t: float) -> np.ndarray:
        sy, cy = np.sin(np.pi * x[..., 1]), np.cos(np.pi * x[..., 1])
        dx = amp * sy * _series(x, t, lambda j: np.pi * np.ones_like(j), "cos")
        dy = amp * np.pi * cy * _series(x, t, lambda j: 1.0 / j, "sin")
        return np.stack([dx, dy], axis=-1)

    def dudt(x: np.ndarray, t: float) -> np.ndarray:
        sy = np.sin(np.pi * x[..., 1])
        return amp * sy * _series(x, t, lambda j: -(j**2 + 1.0) * pi2 / j, "sin")

    def f(x: np.ndarray, t: float) -> np.ndarray:
        return np.zeros(x[..., 0].shape)

    def u0(x: np.ndarray) -> np.ndarray:
        return (1.0 - x[..., 0]) * np.sqrt(2.0) * np.sin(np.pi * x[..., 1])

    return ExactSolution(name="example2", u=u, grad_u=grad_u, dudt=dudt, f=f, u0=u0)


def scaled(exact: ExactSolution, c: float) -> ExactSolution:
    """Scale a solution and its data by a constant (the problem is linear)."""
    return ExactSolution(
        name=f"{exact.name}_x{c:g}",
        u=lambda x, t: c * exact.u(x, t),
        grad_u=lambda x, t: c * exact.grad_u(x, t),
        dudt=lambda x, t: c * exact.dudt(x, t),
        f=lambda x, t: c * exact.f(x, t),
        u0=lambda x: c * exact.u0(x),
    )
