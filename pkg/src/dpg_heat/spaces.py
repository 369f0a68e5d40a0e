"""Degrees of freedom, local bases, and lifting operators.

Trial space per time step:
    u      elementwise P0 (or discontinuous P1),
    sigma  elementwise constant vectors,
    u-hat  continuous piecewise linears on the skeleton, zero on the
           domain boundary (one dof per interior vertex),
    sig-hat one constant normal flux per edge, stored with respect to the
           edge's canonical normal.

The enriched test space is elementwise P2 (scalar, 6 functions) times
[P3]^2 (vector, 20 functions): 26 local test functions. Bases are plain
monomials in reference coordinates with the constant function first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh
from .quadrature import QuadratureRule

# Monomial exponents: degree <= 2 (scalar test basis), degree <= 3 (each
# component of the vector test basis). Constant first.
_EXP2 = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
_EXP3 = _EXP2 + [(3, 0), (2, 1), (1, 2), (0, 3)]

N_SCALAR_TEST = len(_EXP2)  # 6
N_VECTOR_TEST = 2 * len(_EXP3)  # 20
N_TEST = N_SCALAR_TEST + N_VECTOR_TEST  # 26

_REF_VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


@dataclass(frozen=True)
class TrialConfig:
    """Trial-space options; u_degree 0 is the lowest-order space."""

    u_degree: int = 0

    def __post_init__(self) -> None:
        if self.u_degree not in (0, 1):
            raise ValueError(f"u_degree must be 0 or 1, got {self.u_degree}")

    @property
    def n_u_local(self) -> int:
        return 1 if self.u_degree == 0 else 3


@dataclass(frozen=True)
class DofMap:
    """Contiguous global numbering of the four trial blocks.

    Block order: u, sigma, u-hat, sig-hat. `uhat_of_vertex` maps a vertex
    index to its u-hat dof (or -1 for boundary vertices).
    """

    config: TrialConfig
    num_triangles: int
    num_edges: int
    uhat_of_vertex: np.ndarray
    u_offset: int
    sigma_offset: int
    uhat_offset: int
    sighat_offset: int
    total: int

    @property
    def n_u_local(self) -> int:
        return self.config.n_u_local

    def u_dofs(self, t: int) -> np.ndarray:
        nu = self.n_u_local
        return self.u_offset + nu * t + np.arange(nu)

    def sigma_dofs(self, t: int) -> np.ndarray:
        return self.sigma_offset + 2 * t + np.arange(2)

    def uhat_dof(self, vertex: int) -> int:
        local = self.uhat_of_vertex[vertex]
        return -1 if local < 0 else self.uhat_offset + int(local)

    def sighat_dof(self, edge: int) -> int:
        return self.sighat_offset + edge

    def u_slice(self) -> slice:
        return slice(self.u_offset, self.sigma_offset)

    def sigma_slice(self) -> slice:
        return slice(self.sigma_offset, self.uhat_offset)

    def uhat_slice(self) -> slice:
        return slice(self.uhat_offset, self.sighat_offset)

    def sighat_slice(self) -> slice:
        return slice(self.sighat_offset, self.total)


def build_dof_map(mesh: Mesh, config: TrialConfig | None = None) -> DofMap:
    config = config or TrialConfig()
    nu = config.n_u_local
    F, E = mesh.num_triangles, mesh.num_edges

    uhat_of_vertex = np.full(mesh.num_vertices, -1, dtype=np.int64)
    interior = np.flatnonzero(mesh.interior_vertex)
    uhat_of_vertex[interior] = np.arange(interior.size)

    u_offset = 0
    sigma_offset = nu * F
    uhat_offset = sigma_offset + 2 * F
    sighat_offset = uhat_offset + interior.size
    return DofMap(
        config=config,
        num_triangles=F,
        num_edges=E,
        uhat_of_vertex=uhat_of_vertex,
        u_offset=u_offset,
        sigma_offset=sigma_offset,
        uhat_offset=uhat_offset,
        sighat_offset=sighat_offset,
        total=sighat_offset + E,
    )


class ElementGeometry:
    """Affine geometry of one triangle plus its skeleton connectivity."""

    def __init__(self, mesh: Mesh, t: int):
        tri = mesh.triangles[t]
        verts = mesh.vertices[tri]
        J = np.column_stack([verts[1] - verts[0], verts[2] - verts[0]])
        det = float(np.linalg.det(J))
        if det <= 0.0:
            raise ValueError(f"degenerate or inverted triangle {t} (det={det})")
        self.index = int(t)
        self.vertex_ids = tri.copy()
        self.verts = verts
        self.J = J
        self.invJT = np.linalg.inv(J).T
        self.det = det
        self.area = 0.5 * det
        self.edge_ids = mesh.edge_of_triangle[t].copy()
        self.edge_signs = mesh.edge_sign[t].copy()
        # Local edge j runs from local vertex j to (j+1) % 3.
        tangents = verts[[1, 2, 0]] - verts[[0, 1, 2]]
        self.edge_lengths = np.linalg.norm(tangents, axis=1)
        self.outward_normals = (
            np.column_stack([tangents[:, 1], -tangents[:, 0]])
            / self.edge_lengths[:, None]
        )

    def to_physical(self, ref_pts: np.ndarray) -> np.ndarray:
        return self.verts[0] + ref_pts @ self.J.T

    def edge_ref_points(self, local_edge: int, s: np.ndarray) -> np.ndarray:
        """Reference coordinates of points at parameter s along a local edge."""
        p = _REF_VERTS[local_edge]
        q = _REF_VERTS[(local_edge + 1) % 3]
        return p + np.outer(s, q - p)


def element_geometries(mesh: Mesh) -> list[ElementGeometry]:
    return [ElementGeometry(mesh, t) for t in range(mesh.num_triangles)]


def _monomials(exps, ref_pts: np.ndarray) -> np.ndarray:
    """(nfun, npts) monomial values at reference points."""
    x, y = ref_pts[:, 0], ref_pts[:, 1]
    return np.array([x**p * y**q for p, q in exps])


def _monomial_grads(exps, ref_pts: np.ndarray) -> np.ndarray:
    """(nfun, npts, 2) reference gradients of the monomials."""
    x, y = ref_pts[:, 0], ref_pts[:, 1]
    out = np.zeros((len(exps), ref_pts.shape[0], 2))
    for i, (p, q) in enumerate(exps):
        if p > 0:
            out[i, :, 0] = p * x ** (p - 1) * y**q
        if q > 0:
            out[i, :, 1] = q * x**p * y ** (q - 1)
    return out


def scalar_test_values(ref_pts: np.ndarray) -> np.ndarray:
    """(6, npts) P2 test values; composition with the affine map is implied."""
    return _monomials(_EXP2, ref_pts)


def scalar_test_gradients(geom: ElementGeometry, ref_pts: np.ndarray) -> np.ndarray:
    """(6, npts, 2) physical gradients of the P2 test basis."""
    return _monomial_grads(_EXP2, ref_pts) @ geom.invJT.T


def vector_test_values(ref_pts: np.ndarray) -> np.ndarray:
    """(20, npts, 2) [P3]^2 test values: (m_i, 0) then (0, m_i)."""
    m = _monomials(_EXP3, ref_pts)
    nfun, npts = m.shape
    out = np.zeros((2 * nfun, npts, 2))
    out[:nfun, :, 0] = m
    out[nfun:, :, 1] = m
    return out


def vector_test_divergences(geom: ElementGeometry, ref_pts: np.ndarray) -> np.ndarray:
    """(20, npts) divergences of the vector test basis on the element."""
    g = _monomial_grads(_EXP3, ref_pts) @ geom.invJT.T
    return np.concatenate([g[:, :, 0], g[:, :, 1]], axis=0)


@dataclass(frozen=True)
class TestBasisTables:
    """Values of all 26 enriched test functions at quadrature points.

    Rows 0..5 are the scalar (v) basis, rows 6..25 the vector (tau) basis.
    `weights` are physical quadrature weights on the element.
    """

    v: np.ndarray  # (6, nq)
    grad_v: np.ndarray  # (6, nq, 2)
    tau: np.ndarray  # (20, nq, 2)
    div_tau: np.ndarray  # (20, nq)
    points: np.ndarray  # (nq, 2) physical coordinates
    weights: np.ndarray  # (nq,)


def test_basis_tables(geom: ElementGeometry, rule: QuadratureRule) -> TestBasisTables:
    ref = rule.points
    return TestBasisTables(
        v=scalar_test_values(ref),
        grad_v=scalar_test_gradients(geom, ref),
        tau=vector_test_values(ref),
        div_tau=vector_test_divergences(geom, ref),
        points=geom.to_physical(ref),
        weights=rule.weights * geom.det,
    )


def u_trial_values(config: TrialConfig, ref_pts: np.ndarray) -> np.ndarray:
    """(n_u_local, npts) values of the local u trial basis."""
    if config.u_degree == 0:
        return np.ones((1, ref_pts.shape[0]))
    return _monomials([(0, 0), (1, 0), (0, 1)], ref_pts)


class P1Lift:
    """Continuous piecewise-linear lift of skeleton values, zero on the boundary."""

    def __init__(self, mesh: Mesh, vertex_values: np.ndarray):
        self.mesh = mesh
        self.vertex_values = vertex_values

    def value_on_element(self, t: int, ref_pts: np.ndarray) -> np.ndarray:
        vals = self.vertex_values[self.mesh.triangles[t]]
        lam = np.column_stack(
            [1.0 - ref_pts[:, 0] - ref_pts[:, 1], ref_pts[:, 0], ref_pts[:, 1]]
        )
        return lam @ vals

    def gradient_on_element(self, t: int) -> np.ndarray:
        geom = ElementGeometry(self.mesh, t)
        vals = self.vertex_values[self.mesh.triangles[t]]
        grad_lam_ref = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        return vals @ (grad_lam_ref @ geom.invJT.T)


def p1_lift(mesh: Mesh, uhat_coefficients: np.ndarray) -> P1Lift:
    """Nodal lift of u-hat coefficients into H^1_0 on the mesh."""
    interior = np.flatnonzero(mesh.interior_vertex)
    if uhat_coefficients.shape != (interior.size,):
        raise ValueError(
            f"expected {interior.size} u-hat coefficients, "
            f"got {uhat_coefficients.shape}"
        )
    vertex_values = np.zeros(mesh.num_vertices)
    vertex_values[interior] = uhat_coefficients
    return P1Lift(mesh, vertex_values)


class RT0Lift:
    """Lowest-order Raviart-Thomas field with prescribed edge fluxes.

    On each element the field is gamma * x + b with constant divergence
    2 * gamma; its normal trace on each edge equals the given flux with
    respect to the edge's canonical normal.
    """

    def __init__(self, gamma: np.ndarray, b: np.ndarray):
        self.gamma = gamma  # (F,)
        self.b = b  # (F, 2)

    def value_on_element(self, t: int, phys_pts: np.ndarray) -> np.ndarray:
        return self.gamma[t] * phys_pts + self.b[t]

    def div_on_element(self, t: int) -> float:
        return 2.0 * float(self.gamma[t])


def rt0_lift(mesh: Mesh, sighat_coefficients: np.ndarray) -> RT0Lift:
    """RT0 interpolant of per-edge normal fluxes (canonical orientation)."""
    if sighat_coefficients.shape != (mesh.num_edges,):
        raise ValueError(
            f"expected {mesh.num_edges} edge fluxes, got {sighat_coefficients.shape}"
        )
    F = mesh.num_triangles
    gamma = np.zeros(F)
    b = np.zeros((F, 2))
    verts = mesh.vertices
    for t in range(F):
        geom = ElementGeometry(mesh, t)
        for j in range(3):
            flux = sighat_coefficients[geom.edge_ids[j]]
            opp = verts[mesh.triangles[t][(j + 2) % 3]]
            # RT0 basis for outward-unit-normal flux 1 on local edge j:
            # |e_j| / (2|K|) * (x - p_opp); signs convert to canonical flux.
            scale = geom.edge_signs[j] * flux * geom.edge_lengths[j] / (2.0 * geom.area)
            gamma[t] += scale
            b[t] -= scale * opp
    return RT0Lift(gamma, b)
