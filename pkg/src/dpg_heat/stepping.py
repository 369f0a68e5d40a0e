"""Backward-Euler driver: initial L2 projection plus N condensed solves."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .assembly import DpgSystem, LOAD_DEGREE
from .mesh import Mesh, TimeGrid, build_uniform_mesh
from .quadrature import triangle_rule
from .solutions import ExactSolution
from .spaces import DofMap, TrialConfig, build_dof_map, element_geometries, u_trial_values


@dataclass(frozen=True)
class StepState:
    """Coefficients of (u, sigma, u-hat, sig-hat) at one time step."""

    n: int
    t: float
    x: np.ndarray
    dofmap: DofMap

    @property
    def u(self) -> np.ndarray:
        return self.x[self.dofmap.u_slice()]

    @property
    def sigma(self) -> np.ndarray:
        return self.x[self.dofmap.sigma_slice()]

    @property
    def uhat(self) -> np.ndarray:
        return self.x[self.dofmap.uhat_slice()]

    @property
    def sighat(self) -> np.ndarray:
        return self.x[self.dofmap.sighat_slice()]

    def u_coefficients(self) -> np.ndarray:
        nu = self.dofmap.n_u_local
        return self.u.reshape(-1, nu)

    def sigma_coefficients(self) -> np.ndarray:
        return self.sigma.reshape(-1, 2)


@dataclass(frozen=True)
class RunConfig:
    """One experiment run: fixed mesh, uniform steps, one exact solution."""

    subdivisions: int
    time_grid: TimeGrid
    trial: TrialConfig = TrialConfig()
    check_step_stability: bool = True


@dataclass
class StepDiagnostics:
    n: int
    t: float
    u_norm: float
    sigma_norm: float
    f_norm: float
    stability_ratio_step: float


@dataclass
class RunResult:
    config: RunConfig
    mesh: Mesh
    dofmap: DofMap
    system: DpgSystem
    final_state: StepState
    u0_coefficients: np.ndarray
    u0_norm: float
    steps: list[StepDiagnostics] = field(default_factory=list)
    runtime_s: float = 0.0

    @property
    def k(self) -> float:
        return self.config.time_grid.k

    def data_norm(self) -> float:
        """Stability denominator ||u_0|| + k * sum_n ||f^n||."""
        return self.u0_norm + self.k * sum(s.f_norm for s in self.steps)


def _element_mass_data(mesh: Mesh, config: TrialConfig):
    """Reference u mass matrix and element areas for discrete L2 norms."""
    rule = triangle_rule(2)
    phi = u_trial_values(config, rule.points)
    m_ref = (phi * rule.weights) @ phi.T  # on the reference triangle, det = 1
    dets = 2.0 * build_area(mesh)
    return m_ref, dets


def build_area(mesh: Mesh) -> np.ndarray:
    return mesh.triangle_areas()


def discrete_u_norm(mesh: Mesh, config: TrialConfig, u_coefficients: np.ndarray) -> float:
    """L2 norm of the elementwise polynomial u field."""
    m_ref, dets = _element_mass_data(mesh, config)
    quad = np.einsum("ti,ij,tj->t", u_coefficients, m_ref, u_coefficients)
    return float(np.sqrt(np.sum(dets * quad)))


def discrete_sigma_norm(mesh: Mesh, sigma_coefficients: np.ndarray) -> float:
    """L2 norm of the elementwise constant sigma field."""
    areas = mesh.triangle_areas()
    return float(np.sqrt(np.sum(areas * np.sum(sigma_coefficients**2, axis=1))))


def l2_norm(mesh: Mesh, func: Callable[[np.ndarray], np.ndarray],
            degree: int = LOAD_DEGREE) -> float:
    """L2(Omega) norm of a callable by elementwise quadrature."""
    rule = triangle_rule(degree)
    v = mesh.vertices[mesh.triangles]
    # x = v0 + [v1-v0, v2-v0] @ xi for all elements at once
    points = v[:, None, 0] + np.einsum("qj,tjd->tqd", rule.points,
                                       v[:, 1:] - v[:, :1])
    vals = np.asarray(func(points), dtype=float)
    dets = 2.0 * mesh.triangle_areas()
    return float(np.sqrt(np.sum(dets[:, None] * rule.weights * vals**2)))


def project_initial(
    mesh: Mesh, dofmap: DofMap, u0: Callable[[np.ndarray], np.ndarray]
) -> np.ndarray:
    """L2 projection of u0 onto the u block: (F, n_u_local) coefficients.

    u0 need not satisfy the homogeneous boundary condition.
    """
    config = dofmap.config
    rule = triangle_rule(LOAD_DEGREE)
    phi = u_trial_values(config, rule.points)
    m_ref = (phi * rule.weights) @ phi.T
    coeffs = np.empty((mesh.num_triangles, config.n_u_local))
    for geom in element_geometries(mesh):
        vals = np.asarray(u0(geom.to_physical(rule.points)), dtype=float)
        b = phi @ (rule.weights * vals)  # det cancels against the mass matrix
        coeffs[geom.index] = np.linalg.solve(m_ref, b)
    return coeffs


def step(
    system: DpgSystem,
    prev_u_coefficients: np.ndarray,
    exact: ExactSolution,
    n: int,
    t_new: float,
) -> StepState:
    """One backward-Euler DPG step; f is evaluated at the new time t_n."""
    x = system.solve(lambda pts: exact.f(pts, t_new), prev_u_coefficients)
    return StepState(n=n, t=t_new, x=x, dofmap=system.dofmap)


def run(
    config: RunConfig,
    exact: ExactSolution,
    mesh: Mesh | None = None,
    stability_slack: float = 1e-8,
) -> RunResult:
    """Project u0 and execute all N backward-Euler steps with diagnostics."""
    t_start = time.perf_counter()
    mesh = mesh or build_uniform_mesh(config.subdivisions)
    dofmap = build_dof_map(mesh, config.trial)
    grid = config.time_grid
    k = grid.k
    system = DpgSystem(mesh, dofmap, k)

    u0_coeffs = project_initial(mesh, dofmap, exact.u0)
    u0_norm = l2_norm(mesh, exact.u0)

    result = RunResult(
        config=config,
        mesh=mesh,
        dofmap=dofmap,
        system=system,
        final_state=StepState(0, 0.0, np.zeros(dofmap.total), dofmap),
        u0_coefficients=u0_coeffs,
        u0_norm=u0_norm,
    )

    prev_coeffs = u0_coeffs
    prev_u_norm = discrete_u_norm(mesh, config.trial, u0_coeffs)
    state = result.final_state
    for n in range(1, grid.N + 1):
        t_new = n * k
        state = step(system, prev_coeffs, exact, n, t_new)
        u_coeffs = state.u_coefficients()
        u_norm = discrete_u_norm(mesh, config.trial, u_coeffs)
        sigma_norm = discrete_sigma_norm(mesh, state.sigma_coefficients())
        f_norm = l2_norm(mesh, lambda pts: exact.f(pts, t_new))
        field_norm = np.sqrt(u_norm**2 + k * sigma_norm**2)
        bound = prev_u_norm + k * f_norm
        ratio = field_norm / bound if bound > 0.0 else 0.0
        result.steps.append(
            StepDiagnostics(
                n=n,
                t=t_new,
                u_norm=u_norm,
                sigma_norm=sigma_norm,
                f_norm=f_norm,
                stability_ratio_step=ratio,
            )
        )
        if config.check_step_stability and ratio > 1.0 + stability_slack:
            raise RuntimeError(
                f"step {n} violates the stability bound: ratio={ratio:.12f}"
            )
        prev_coeffs = u_coeffs
        prev_u_norm = u_norm

    result.final_state = state
    result.runtime_s = time.perf_counter() - t_start
    return result
