"""Error quantities at the final time, stability ratio, and rate fitting.

The six reported errors are

    err_u        = ||u(T) - u_h||
    err_sigma    = sqrt(k) ||grad u(T) - sigma_h||
    err_hat_u    = (||u(T) - lift(u-hat)||^2
                    + k ||grad u(T) - grad lift(u-hat)||^2)^{1/2}
    err_hat_sigma= sqrt(k) (||grad u(T) - rt0(sig-hat)||^2
                    + k ||div grad u(T) - div rt0(sig-hat)||^2)^{1/2}
    err_u0       = ||u_0 - u^0_h||
    err_energy   = dual (energy) norm of the final-step residual in the
                   enriched test space.

The trace errors use the nodal P1 and lowest-order Raviart-Thomas lifts and
are computable upper bounds for the weighted trace-norm errors. The
Laplacian of the exact solution is evaluated as dudt - f, avoiding second
derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import triangle_rule
from .solutions import ExactSolution
from .spaces import element_geometries, p1_lift, rt0_lift, u_trial_values
from .stepping import RunResult

ERROR_DEGREE = 10

# First Dirichlet eigenvalue of the unit square is 2 pi^2.
POINCARE_FRIEDRICHS = 1.0 / (np.pi * np.sqrt(2.0))


@dataclass
class ErrorReport:
    """All per-run error quantities plus run metadata."""

    err_u: float
    err_sigma: float
    err_hat_u: float
    err_hat_sigma: float
    err_u0: float
    err_energy: float
    stability_ratio: float
    x2_bound: float
    C_n: float
    h: float
    k: float
    N: int
    dofs: int
    runtime_s: float


def field_errors(
    result: RunResult, exact: ExactSolution
) -> tuple[float, float]:
    """(err_u, err_sigma) at the final time by high-order quadrature."""
    mesh = result.mesh
    state = result.final_state
    k, T = result.k, state.t
    rule = triangle_rule(ERROR_DEGREE)
    phi_u = u_trial_values(result.config.trial, rule.points)
    u_coeffs = state.u_coefficients()
    sigma_coeffs = state.sigma_coefficients()

    err_u_sq = 0.0
    err_sigma_sq = 0.0
    for geom in element_geometries(mesh):
        pts = geom.to_physical(rule.points)
        w = rule.weights * geom.det
        du = exact.u(pts, T) - u_coeffs[geom.index] @ phi_u
        err_u_sq += float(np.sum(w * du**2))
        dsig = exact.grad_u(pts, T) - sigma_coeffs[geom.index]
        err_sigma_sq += float(np.sum(w * np.sum(dsig**2, axis=-1)))
    return float(np.sqrt(err_u_sq)), float(np.sqrt(k * err_sigma_sq))


def trace_errors(
    result: RunResult, exact: ExactSolution
) -> tuple[float, float]:
    """(err_hat_u, err_hat_sigma) via the P1 and RT0 lifts of the traces."""
    mesh = result.mesh
    state = result.final_state
    k, T = result.k, state.t
    rule = triangle_rule(ERROR_DEGREE)
    ulift = p1_lift(mesh, state.uhat)
    slift = rt0_lift(mesh, state.sighat)

    hat_u_sq = 0.0
    hat_sigma_sq = 0.0
    for geom in element_geometries(mesh):
        t = geom.index
        pts = geom.to_physical(rule.points)
        w = rule.weights * geom.det
        du = exact.u(pts, T) - ulift.value_on_element(t, rule.points)
        dgrad = exact.grad_u(pts, T) - ulift.gradient_on_element(t)
        hat_u_sq += float(np.sum(w * du**2))
        hat_u_sq += k * float(np.sum(w * np.sum(dgrad**2, axis=-1)))
        dsig = exact.grad_u(pts, T) - slift.value_on_element(t, pts)
        # div grad u(T) = Laplacian of u = dudt - f.
        ddiv = (exact.dudt(pts, T) - exact.f(pts, T)) - slift.div_on_element(t)
        hat_sigma_sq += float(np.sum(w * np.sum(dsig**2, axis=-1)))
        hat_sigma_sq += k * float(np.sum(w * ddiv**2))
    return float(np.sqrt(hat_u_sq)), float(np.sqrt(k * hat_sigma_sq))


def energy_error(result: RunResult, exact: ExactSolution) -> float:
    """Energy norm of u(T) - u^N_h over the enriched test space.

    The exact solution enters the extended bilinear form only through
    b(u(T), v) = (f^N - dudt(T) + u(T)/k, v), so the error functional per
    element is that load minus B_K x_K.
    """
    system = result.system
    state = result.final_state
    k, T = result.k, state.t
    residuals = []
    for es in system.elements:
        pts = es.load_points
        data = exact.f(pts, T) - exact.dudt(pts, T) + exact.u(pts, T) / k
        r = es.load_vector(np.asarray(data, dtype=float))
        r -= es.B @ state.x[es.dofs]
        residuals.append(r)
    return system.residual_dual_norm(residuals)


def stability_ratio(result: RunResult) -> float:
    """Final field norm over the cumulative data norm."""
    if not result.steps:
        return 0.0
    last = result.steps[-1]
    num = np.sqrt(last.u_norm**2 + result.k * last.sigma_norm**2)
    den = result.data_norm()
    return float(num / den) if den > 0.0 else 0.0


def cea_constant(k: float) -> float:
    """Quasi-optimality constant sqrt(2) * max(1, sqrt(4 C_PF^2 + 6 k))."""
    if k <= 0.0:
        raise ValueError(f"time step must be positive, got k={k}")
    return float(np.sqrt(2.0) * max(1.0, np.sqrt(4.0 * POINCARE_FRIEDRICHS**2 + 6.0 * k)))


def convergence_rates(h: np.ndarray, err: np.ndarray) -> tuple[float, np.ndarray]:
    """Least-squares slope of log err vs log h, plus pairwise rates."""
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    if h.size < 2 or h.size != err.size:
        raise ValueError("need at least two matching (h, err) samples")
    if np.any(err <= 0.0) or np.any(h <= 0.0):
        raise ValueError("h and err must be positive for log-log fitting")
    slope = float(np.polyfit(np.log(h), np.log(err), 1)[0])
    pairwise = np.diff(np.log(err)) / np.diff(np.log(h))
    return slope, pairwise


def error_report(result: RunResult, exact: ExactSolution) -> ErrorReport:
    """Assemble the full per-run error report."""
    from .mesh import mesh_size

    err_u, err_sigma = field_errors(result, exact)
    err_hat_u, err_hat_sigma = trace_errors(result, exact)
    err_energy = energy_error(result, exact)

    mesh = result.mesh
    rule = triangle_rule(ERROR_DEGREE)
    phi_u = u_trial_values(result.config.trial, rule.points)
    err_u0_sq = 0.0
    for geom in element_geometries(mesh):
        pts = geom.to_physical(rule.points)
        w = rule.weights * geom.det
        du = exact.u0(pts) - result.u0_coefficients[geom.index] @ phi_u
        err_u0_sq += float(np.sum(w * du**2))

    x2_bound = float(
        np.sqrt(err_u**2 + err_sigma**2 + err_hat_u**2 + err_hat_sigma**2)
    )
    return ErrorReport(
        err_u=err_u,
        err_sigma=err_sigma,
        err_hat_u=err_hat_u,
        err_hat_sigma=err_hat_sigma,
        err_u0=float(np.sqrt(err_u0_sq)),
        err_energy=err_energy,
        stability_ratio=stability_ratio(result),
        x2_bound=x2_bound,
        C_n=cea_constant(result.k),
        h=mesh_size(mesh),
        k=result.k,
        N=result.config.time_grid.N,
        dofs=result.dofmap.total,
        runtime_s=result.runtime_s,
    )
