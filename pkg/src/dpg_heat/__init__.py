"""Backward-Euler DPG solver for the 2D heat equation on the unit square.

The solver time-steps the heat equation with backward Euler and, at each
step, discretizes the resulting reaction-diffusion problem with a
discontinuous Petrov-Galerkin method in ultra-weak form. Optimal test
functions are computed in an enriched, elementwise test space, which turns
each step into a symmetric positive definite least-squares solve.
"""

from .mesh import Mesh, TimeGrid, build_uniform_mesh, mesh_size
from .quadrature import QuadratureRule, edge_rule, triangle_rule
from .spaces import (
    DofMap,
    TrialConfig,
    build_dof_map,
    p1_lift,
    rt0_lift,
    test_basis_tables,
)
from .assembly import (
    DpgSystem,
    assemble_and_solve,
    condense,
    energy_norm,
    local_b,
    local_gram,
    local_load,
    y_norm_of_fields,
)
from .solutions import ExactSolution, example1, example2
from .stepping import RunConfig, RunResult, StepState, project_initial, run, step
from .errors import (
    ErrorReport,
    cea_constant,
    convergence_rates,
    energy_error,
    error_report,
    field_errors,
    stability_ratio,
    trace_errors,
)

__all__ = [
    "Mesh",
    "TimeGrid",
    "build_uniform_mesh",
    "mesh_size",
    "QuadratureRule",
    "triangle_rule",
    "edge_rule",
    "TrialConfig",
    "DofMap",
    "build_dof_map",
    "test_basis_tables",
    "p1_lift",
    "rt0_lift",
    "DpgSystem",
    "local_gram",
    "local_b",
    "local_load",
    "condense",
    "assemble_and_solve",
    "energy_norm",
    "y_norm_of_fields",
    "ExactSolution",
    "example1",
    "example2",
    "StepState",
    "RunConfig",
    "RunResult",
    "project_initial",
    "step",
    "run",
    "ErrorReport",
    "error_report",
    "field_errors",
    "trace_errors",
    "energy_error",
    "stability_ratio",
    "cea_constant",
    "convergence_rates",
]
