"""Per-element DPG systems and the condensed SPD normal equations.

For every element K the enriched test space carries the Gram matrix

    G_K = (1/k^2)(v, v) + (1/k)(grad v, grad v) + (1/k)(tau, tau)
          + (div tau, div tau),

the trial-to-test matrix B_K of the extended ultra-weak bilinear form

    b(u, v) = (1/k)(u, v) + (u, div tau) + (sigma, grad v + tau)
              - <u-hat, tau . n> - <sig-hat, v>,

and the load vector l_K of (f^n + u^{n-1}/k, v). Condensation with the
per-element Cholesky factors of G_K yields the global SPD system

    S = sum_K B_K^T G_K^{-1} B_K,   rhs = sum_K B_K^T G_K^{-1} l_K,

whose solution is the DPG approximation with (enriched-space) optimal test
functions.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import cho_factor, cho_solve

from .mesh import Mesh
from .quadrature import edge_rule, triangle_rule
from .spaces import (
    DofMap,
    ElementGeometry,
    N_SCALAR_TEST,
    N_TEST,
    TestBasisTables,
    element_geometries,
    scalar_test_values,
    test_basis_tables,
    u_trial_values,
    vector_test_values,
)

# Exactness floors: tau.tau with [P3]^2 has degree 6 (volume), the u-hat
# edge terms have degree 4 (edges); loads and norms of transcendental data
# use the high-order rule.
GRAM_DEGREE = 7
EDGE_DEGREE = 5
LOAD_DEGREE = 10


class SolverError(RuntimeError):
    """Raised when a factorization fails or a solve misses its tolerance."""


def local_gram(
    geom: ElementGeometry, k: float, tables: TestBasisTables | None = None
) -> np.ndarray:
    """Symmetric positive definite 26x26 test-space Gram matrix."""
    if k <= 0.0:
        raise ValueError(f"time step must be positive, got k={k}")
    tables = tables or test_basis_tables(geom, triangle_rule(GRAM_DEGREE))
    w = tables.weights
    G = np.zeros((N_TEST, N_TEST))
    s = slice(0, N_SCALAR_TEST)
    t = slice(N_SCALAR_TEST, N_TEST)
    G[s, s] = (tables.v * w) @ tables.v.T / k**2
    G[s, s] += np.einsum("iqd,q,jqd->ij", tables.grad_v, w, tables.grad_v) / k
    G[t, t] = np.einsum("iqd,q,jqd->ij", tables.tau, w, tables.tau) / k
    G[t, t] += (tables.div_tau * w) @ tables.div_tau.T
    return G


def local_b(
    geom: ElementGeometry,
    k: float,
    dofmap: DofMap,
    tables: TestBasisTables | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Local trial-to-test matrix and its global column dof indices.

    Columns are ordered u-block, sigma-block, u-hat block (local vertex
    order, boundary vertices skipped), sig-hat block (local edge order).
    """
    if k <= 0.0:
        raise ValueError(f"time step must be positive, got k={k}")
    config = dofmap.config
    rule = triangle_rule(GRAM_DEGREE)
    tables = tables or test_basis_tables(geom, rule)
    w = tables.weights
    erule = edge_rule(EDGE_DEGREE)

    columns: list[np.ndarray] = []
    dofs: list[int] = []

    # u columns: (1/k)(phi_u, v) + (phi_u, div tau).
    phi_u = u_trial_values(config, rule.points)
    for i, dof in enumerate(dofmap.u_dofs(geom.index)):
        col = np.zeros(N_TEST)
        col[:N_SCALAR_TEST] = tables.v @ (w * phi_u[i]) / k
        col[N_SCALAR_TEST:] = tables.div_tau @ (w * phi_u[i])
        columns.append(col)
        dofs.append(int(dof))

    # sigma columns: (e_d, grad v + tau).
    for d, dof in enumerate(dofmap.sigma_dofs(geom.index)):
        col = np.zeros(N_TEST)
        col[:N_SCALAR_TEST] = tables.grad_v[:, :, d] @ w
        col[N_SCALAR_TEST:] = tables.tau[:, :, d] @ w
        columns.append(col)
        dofs.append(int(dof))

    # Edge tables, shared by the trace columns.
    s = erule.points
    ew = erule.weights
    edge_ref = [geom.edge_ref_points(j, s) for j in range(3)]
    tau_edge = [vector_test_values(edge_ref[j]) for j in range(3)]
    v_edge = [scalar_test_values(edge_ref[j]) for j in range(3)]

    # u-hat columns: -<hat_p, tau . n_K> over the two adjacent edges.
    for p in range(3):
        dof = dofmap.uhat_dof(int(geom.vertex_ids[p]))
        if dof < 0:
            continue
        col = np.zeros(N_TEST)
        for j, lam in ((p, 1.0 - s), ((p + 2) % 3, s)):
            tn = tau_edge[j] @ geom.outward_normals[j]
            col[N_SCALAR_TEST:] -= geom.edge_lengths[j] * (tn @ (ew * lam))
        columns.append(col)
        dofs.append(dof)

    # sig-hat columns: -sign * <1, v> on the edge.
    for j in range(3):
        col = np.zeros(N_TEST)
        col[:N_SCALAR_TEST] = (
            -geom.edge_signs[j] * geom.edge_lengths[j] * (v_edge[j] @ ew)
        )
        columns.append(col)
        dofs.append(dofmap.sighat_dof(int(geom.edge_ids[j])))

    return np.column_stack(columns), np.asarray(dofs, dtype=np.int64)


def local_load(
    geom: ElementGeometry,
    k: float,
    f_at: Callable[[np.ndarray], np.ndarray],
    u_prev: Callable[[np.ndarray], np.ndarray] | None = None,
    tables: TestBasisTables | None = None,
) -> np.ndarray:
    """Load vector of (f^n + u^{n-1}/k, v); tau rows are zero.

    `f_at` and `u_prev` take physical points; `f_at` is already bound to
    the new time t_n (backward Euler).
    """
    tables = tables or test_basis_tables(geom, triangle_rule(LOAD_DEGREE))
    data = np.asarray(f_at(tables.points), dtype=float)
    if u_prev is not None:
        data = data + np.asarray(u_prev(tables.points), dtype=float) / k
    l = np.zeros(N_TEST)
    l[:N_SCALAR_TEST] = tables.v @ (tables.weights * data)
    return l


def condense(
    G: np.ndarray, B: np.ndarray, l: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Local contribution (B^T G^-1 B, B^T G^-1 l) to the normal equations."""
    try:
        cho = cho_factor(G)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"local Gram matrix not SPD: {exc}") from exc
    W = cho_solve(cho, B)
    return B.T @ W, W.T @ l


class _ElementSystem:
    """Step-independent local data: Gram factor, B, dofs, load tables."""

    def __init__(self, geom: ElementGeometry, k: float, dofmap: DofMap):
        self.geom = geom
        gram_tables = test_basis_tables(geom, triangle_rule(GRAM_DEGREE))
        self.G = local_gram(geom, k, gram_tables)
        try:
            self.cho = cho_factor(self.G)
        except np.linalg.LinAlgError as exc:
            raise SolverError(
                f"Gram matrix of element {geom.index} not SPD: {exc}"
            ) from exc
        self.B, self.dofs = local_b(geom, k, dofmap, gram_tables)
        self.W = cho_solve(self.cho, self.B)  # G^-1 B, optimal test coefficients
        self.A = self.B.T @ self.W
        load_rule = triangle_rule(LOAD_DEGREE)
        self.load_points = geom.to_physical(load_rule.points)
        self.load_weights = load_rule.weights * geom.det
        self.load_v = scalar_test_values(load_rule.points)
        self.load_phi_u = u_trial_values(dofmap.config, load_rule.points)

    def load_vector(self, data: np.ndarray) -> np.ndarray:
        """26-vector of (data, v) with `data` sampled at the load points."""
        l = np.zeros(N_TEST)
        l[:N_SCALAR_TEST] = self.load_v @ (self.load_weights * data)
        return l

    def gram_apply_inverse(self, r: np.ndarray) -> np.ndarray:
        return cho_solve(self.cho, r)


class DpgSystem:
    """Assembled condensed system for one time-step size on a fixed mesh.

    The Gram factors, trial-to-test matrices and the factorized global SPD
    matrix depend only on (mesh, k, trial config) and are reused across all
    backward-Euler steps.
    """

    def __init__(self, mesh: Mesh, dofmap: DofMap, k: float):
        if k <= 0.0:
            raise ValueError(f"time step must be positive, got k={k}")
        self.mesh = mesh
        self.dofmap = dofmap
        self.k = k
        self.elements = [
            _ElementSystem(geom, k, dofmap) for geom in element_geometries(mesh)
        ]

        rows, cols, vals = [], [], []
        for es in self.elements:
            m = es.dofs.size
            rows.append(np.repeat(es.dofs, m))
            cols.append(np.tile(es.dofs, m))
            vals.append(es.A.ravel())
        self.S = sp.csc_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dofmap.total, dofmap.total),
        )
        try:
            self._lu = spla.splu(self.S)
        except RuntimeError as exc:
            raise SolverError(f"global factorization failed: {exc}") from exc

    def u_coefficients(self, x: np.ndarray) -> np.ndarray:
        """(F, n_u_local) element coefficients of the u block of x."""
        nu = self.dofmap.n_u_local
        return x[self.dofmap.u_slice()].reshape(self.mesh.num_triangles, nu)

    def assemble_rhs(
        self,
        f_at: Callable[[np.ndarray], np.ndarray],
        u_prev_coefficients: np.ndarray | None = None,
    ) -> tuple[np.ndarray, list[np.ndarray]]:
        """Global condensed rhs and the per-element load vectors."""
        rhs = np.zeros(self.dofmap.total)
        loads = []
        all_points = np.stack([es.load_points for es in self.elements])
        f_vals = np.asarray(f_at(all_points), dtype=float)
        for t, es in enumerate(self.elements):
            data = f_vals[t]
            if u_prev_coefficients is not None:
                data = data + (u_prev_coefficients[t] @ es.load_phi_u) / self.k
            l = es.load_vector(data)
            loads.append(l)
            rhs[es.dofs] += es.W.T @ l
        return rhs, loads

    def solve(
        self,
        f_at: Callable[[np.ndarray], np.ndarray],
        u_prev_coefficients: np.ndarray | None = None,
        rtol: float = 1e-12,
    ) -> np.ndarray:
        rhs, _ = self.assemble_rhs(f_at, u_prev_coefficients)
        x = self._lu.solve(rhs)
        scale = float(np.linalg.norm(rhs))
        if scale > 0.0:
            res = float(np.linalg.norm(self.S @ x - rhs)) / scale
            if not np.isfinite(res) or res > rtol:
                raise SolverError(f"solver residual {res:.3e} exceeds {rtol:.1e}")
        return x

    def gram_weighted_residual(
        self, x: np.ndarray, loads: Sequence[np.ndarray]
    ) -> float:
        """sum_K (l_K - B_K x)^T G_K^-1 (l_K - B_K x)."""
        total = 0.0
        for es, l in zip(self.elements, loads):
            r = l - es.B @ x[es.dofs]
            total += float(r @ es.gram_apply_inverse(r))
        return total

    def energy_norm(self, x: np.ndarray) -> float:
        """b(x, Theta x)^{1/2} computed in the enriched test space."""
        total = 0.0
        for es in self.elements:
            bx = es.B @ x[es.dofs]
            total += float(bx @ es.gram_apply_inverse(bx))
        return float(np.sqrt(max(total, 0.0)))

    def residual_dual_norm(self, residuals: Sequence[np.ndarray]) -> float:
        """(sum_K r_K^T G_K^-1 r_K)^{1/2} for test-space functionals r_K."""
        total = 0.0
        for es, r in zip(self.elements, residuals):
            total += float(r @ es.gram_apply_inverse(r))
        return float(np.sqrt(max(total, 0.0)))


def y_norm_of_fields(
    mesh: Mesh,
    k: float,
    v: Callable[[np.ndarray], np.ndarray],
    grad_v: Callable[[np.ndarray], np.ndarray],
    tau: Callable[[np.ndarray], np.ndarray],
    div_tau: Callable[[np.ndarray], np.ndarray],
    degree: int = LOAD_DEGREE,
) -> float:
    """Broken test norm of a smooth pair (v, tau) by elementwise quadrature:

        (1/k^2)||v||^2 + (1/k)||grad v||^2 + (1/k)||tau||^2 + ||div tau||^2.
    """
    if k <= 0.0:
        raise ValueError(f"time step must be positive, got k={k}")
    rule = triangle_rule(degree)
    total = 0.0
    for geom in element_geometries(mesh):
        pts = geom.to_physical(rule.points)
        w = rule.weights * geom.det
        total += float(np.sum(w * np.asarray(v(pts)) ** 2)) / k**2
        total += float(np.sum(w * np.sum(np.asarray(grad_v(pts)) ** 2, axis=-1))) / k
        total += float(np.sum(w * np.sum(np.asarray(tau(pts)) ** 2, axis=-1))) / k
        total += float(np.sum(w * np.asarray(div_tau(pts)) ** 2))
    return float(np.sqrt(total))


def assemble_and_solve(
    mesh: Mesh,
    dofmap: DofMap,
    k: float,
    f_at: Callable[[np.ndarray], np.ndarray],
    u_prev_coefficients: np.ndarray | None = None,
) -> np.ndarray:
    """One-shot assembly and solve of the condensed DPG system."""
    return DpgSystem(mesh, dofmap, k).solve(f_at, u_prev_coefficients)


def energy_norm(mesh: Mesh, dofmap: DofMap, k: float, w: np.ndarray) -> float:
    """Energy norm of a discrete trial vector (enriched test space)."""
    return DpgSystem(mesh, dofmap, k).energy_norm(w)
