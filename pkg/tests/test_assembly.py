"""Local Gram/B/load matrices against an independent integration oracle,
the condensed solve against a dense least-squares oracle, and the test-norm
identity for the broken Y norm."""

import numpy as np
import pytest

from dpg_heat import (
    DpgSystem,
    TrialConfig,
    assemble_and_solve,
    build_dof_map,
    build_uniform_mesh,
    condense,
    energy_norm,
    local_b,
    local_gram,
    local_load,
    y_norm_of_fields,
)
from dpg_heat.mesh import Mesh
from dpg_heat.spaces import ElementGeometry, N_SCALAR_TEST, N_TEST
from oracles import strip_rule, tri_integrate

# The enriched local test basis: P2 scalars and [P3]^2 vectors, plain
# monomials in reference coordinates with the constant first.
EXP2 = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
EXP3 = EXP2 + [(3, 0), (2, 1), (1, 2), (0, 3)]
REF_VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def _mono(exps, ref):
    x, y = ref[:, 0], ref[:, 1]
    return np.array([x**p * y**q for p, q in exps])


def _mono_grad(exps, ref):
    x, y = ref[:, 0], ref[:, 1]
    out = np.zeros((len(exps), ref.shape[0], 2))
    for i, (p, q) in enumerate(exps):
        if p > 0:
            out[i, :, 0] = p * x ** (p - 1) * y**q
        if q > 0:
            out[i, :, 1] = q * x**p * y ** (q - 1)
    return out


def _gauss01(n=32):
    xg, wg = np.polynomial.legendre.leggauss(n)
    return (xg + 1.0) / 2.0, wg / 2.0


def oracle_matrices(mesh, t, k, dofmap):
    """(G, B, dofs) for one element via the strip rule and hand-rolled maps."""
    verts = mesh.vertices[mesh.triangles[t]]
    jac = np.array([verts[1] - verts[0], verts[2] - verts[0]])  # rows d x_i/d xi
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    # x = v0 + J xi with J = jac.T, so row gradients map by J^{-1} on the right.
    inv_jac = np.linalg.inv(jac.T)
    ref, w = strip_rule(24)
    w = w * det

    v = _mono(EXP2, ref)
    grad_v = _mono_grad(EXP2, ref) @ inv_jac
    m3 = _mono(EXP3, ref)
    g3 = _mono_grad(EXP3, ref) @ inv_jac
    tau = np.zeros((20, ref.shape[0], 2))
    tau[:10, :, 0] = m3
    tau[10:, :, 1] = m3
    div_tau = np.concatenate([g3[:, :, 0], g3[:, :, 1]])

    G = np.zeros((26, 26))
    G[:6, :6] = (v * w) @ v.T / k**2
    G[:6, :6] += np.einsum("iqd,q,jqd->ij", grad_v, w, grad_v) / k
    G[6:, 6:] = np.einsum("iqd,q,jqd->ij", tau, w, tau) / k
    G[6:, 6:] += (div_tau * w) @ div_tau.T

    config = dofmap.config
    phi_u = (
        np.ones((1, ref.shape[0]))
        if config.u_degree == 0
        else _mono([(0, 0), (1, 0), (0, 1)], ref)
    )
    cols, dofs = [], []
    for i, dof in enumerate(dofmap.u_dofs(t)):
        col = np.zeros(26)
        col[:6] = v @ (w * phi_u[i]) / k
        col[6:] = div_tau @ (w * phi_u[i])
        cols.append(col)
        dofs.append(int(dof))
    for d, dof in enumerate(dofmap.sigma_dofs(t)):
        col = np.zeros(26)
        col[:6] = grad_v[:, :, d] @ w
        col[6:] = tau[:, :, d] @ w
        cols.append(col)
        dofs.append(int(dof))

    s, ws = _gauss01()
    tri = mesh.triangles[t]
    edge_geom = []
    for j in range(3):
        p, q = verts[j], verts[(j + 1) % 3]
        tangent = q - p
        length = float(np.linalg.norm(tangent))
        normal = np.array([tangent[1], -tangent[0]]) / length
        ref_edge = REF_VERTS[j] + np.outer(s, REF_VERTS[(j + 1) % 3] - REF_VERTS[j])
        edge_geom.append((length, normal, ref_edge))
    for p in range(3):
        dof = dofmap.uhat_dof(int(tri[p]))
        if dof < 0:
            continue
        col = np.zeros(26)
        for j, lam in ((p, 1.0 - s), ((p + 2) % 3, s)):
            length, normal, ref_edge = edge_geom[j]
            tau_e = np.zeros((20, s.size, 2))
            me = _mono(EXP3, ref_edge)
            tau_e[:10, :, 0] = me
            tau_e[10:, :, 1] = me
            col[6:] -= length * ((tau_e @ normal) @ (ws * lam))
        cols.append(col)
        dofs.append(dof)
    for j in range(3):
        length, normal, ref_edge = edge_geom[j]
        col = np.zeros(26)
        col[:6] = -mesh.edge_sign[t, j] * length * (_mono(EXP2, ref_edge) @ ws)
        cols.append(col)
        dofs.append(dofmap.sighat_dof(int(mesh.edge_of_triangle[t, j])))

    return G, np.column_stack(cols), np.asarray(dofs)


def test_gram_trivial_entry():
    mesh = build_uniform_mesh(2)
    geom = ElementGeometry(mesh, 0)
    for k in (1.0, 0.25):
        G = local_gram(geom, k)
        assert G[0, 0] == pytest.approx(geom.area / k**2, rel=1e-14)


@pytest.mark.parametrize("n,t,k", [(1, 0, 1.0), (1, 1, 0.37), (3, 7, 0.37), (2, 5, 0.01)])
def test_gram_matches_oracle(n, t, k):
    mesh = build_uniform_mesh(n)
    dofmap = build_dof_map(mesh)
    G = local_gram(ElementGeometry(mesh, t), k)
    G_oracle, _, _ = oracle_matrices(mesh, t, k, dofmap)
    assert np.allclose(G, G_oracle, atol=1e-12 * max(1.0, np.abs(G_oracle).max()))
    assert np.allclose(G, G.T, atol=1e-14)


def test_gram_scaling_in_k():
    """G(k) = M/k^2 + K/k + Mt/k + D: blocks recovered from two step sizes
    predict a third step size exactly."""
    mesh = build_uniform_mesh(2)
    geom = ElementGeometry(mesh, 3)
    G1, G2 = local_gram(geom, 1.0), local_gram(geom, 2.0)
    s, t = slice(0, 6), slice(6, 26)
    # scalar block: G1 = M + K, G2 = M/4 + K/2.
    M = (G2[s, s] - 0.5 * G1[s, s]) / -0.25
    K = G1[s, s] - M
    # vector block: G1 = Mt + D, G2 = Mt/2 + D.
    Mt = 2.0 * (G1[t, t] - G2[t, t])
    D = G1[t, t] - Mt
    G4 = local_gram(geom, 4.0)
    assert np.allclose(G4[s, s], M / 16.0 + K / 4.0, atol=1e-13)
    assert np.allclose(G4[t, t], Mt / 4.0 + D, atol=1e-13)
    assert np.allclose(G4[s, t], 0.0)


@pytest.mark.parametrize("k", [1e-4, 1e-2, 1.0])
def test_gram_spd_for_all_elements(k):
    mesh = build_uniform_mesh(4)
    for t in range(mesh.num_triangles):
        G = local_gram(ElementGeometry(mesh, t), k)
        np.linalg.cholesky(G)  # raises if not SPD


def test_gram_invalid_k():
    geom = ElementGeometry(build_uniform_mesh(1), 0)
    with pytest.raises(ValueError):
        local_gram(geom, 0.0)
    with pytest.raises(ValueError):
        local_gram(geom, -1.0)


def test_b_u_constant_entry():
    """(1/k)(1, 1)_K: the u-constant column against the v-constant row."""
    mesh = build_uniform_mesh(1)
    dofmap = build_dof_map(mesh)
    for k in (1.0, 0.2):
        B, dofs = local_b(ElementGeometry(mesh, 0), k, dofmap)
        assert B[0, 0] == pytest.approx(0.5 / k, rel=1e-14)
        assert dofs[0] == dofmap.u_dofs(0)[0]


def test_b_sighat_edge_entry():
    """-sign * |e| <1, v=1>: the hypotenuse of the n=1 mesh has length
    sqrt(2), so that column's constant-v row has magnitude sqrt(2)."""
    mesh = build_uniform_mesh(1)
    dofmap = build_dof_map(mesh)
    geom = ElementGeometry(mesh, 0)
    B, dofs = local_b(geom, 1.0, dofmap)
    hyp_local = [j for j in range(3) if geom.edge_lengths[j] > 1.2]
    assert len(hyp_local) == 1
    j = hyp_local[0]
    col = list(dofs).index(dofmap.sighat_dof(int(geom.edge_ids[j])))
    assert abs(B[0, col]) == pytest.approx(np.sqrt(2.0), rel=1e-14)
    assert B[0, col] == pytest.approx(-geom.edge_signs[j] * np.sqrt(2.0), rel=1e-14)


@pytest.mark.parametrize("n,t,k,u_degree", [
    (1, 0, 1.0, 0), (1, 1, 0.37, 0), (3, 7, 0.37, 0), (2, 4, 0.05, 1),
])
def test_b_matches_oracle(n, t, k, u_degree):
    mesh = build_uniform_mesh(n)
    dofmap = build_dof_map(mesh, TrialConfig(u_degree=u_degree))
    B, dofs = local_b(ElementGeometry(mesh, t), k, dofmap)
    _, B_oracle, dofs_oracle = oracle_matrices(mesh, t, k, dofmap)
    assert np.array_equal(dofs, dofs_oracle)
    assert np.allclose(B, B_oracle, atol=1e-12 * max(1.0, np.abs(B_oracle).max()))


def test_local_load_constant_data():
    mesh = build_uniform_mesh(2)
    geom = ElementGeometry(mesh, 1)
    k = 0.5
    l = local_load(geom, k, lambda pts: np.ones(pts.shape[0]))
    assert l[0] == pytest.approx(geom.area, rel=1e-14)
    assert np.allclose(l[N_SCALAR_TEST:], 0.0)
    # adding u_prev = 3 contributes 3/k against each scalar test function.
    l2 = local_load(
        geom, k,
        lambda pts: np.ones(pts.shape[0]),
        lambda pts: 3.0 * np.ones(pts.shape[0]),
    )
    assert l2[0] == pytest.approx(geom.area * (1.0 + 3.0 / k), rel=1e-14)


def test_local_load_matches_oracle():
    mesh = build_uniform_mesh(2)
    geom = ElementGeometry(mesh, 6)
    verts = mesh.vertices[mesh.triangles[6]]

    def data(pts):
        return np.sin(3.0 * pts[..., 0]) * np.exp(pts[..., 1])

    l = local_load(geom, 1.0, data)
    jac = np.array([verts[1] - verts[0], verts[2] - verts[0]])
    for i, (p, q) in enumerate(EXP2):
        def integrand(pts):
            ref = np.linalg.solve(jac.T, (pts - verts[0]).T).T
            return data(pts) * ref[:, 0] ** p * ref[:, 1] ** q
        assert l[i] == pytest.approx(tri_integrate(integrand, verts), abs=1e-12)


def test_condense_basics():
    rng = np.random.default_rng(2)
    mesh = build_uniform_mesh(2)
    dofmap = build_dof_map(mesh)
    geom = ElementGeometry(mesh, 2)
    G = local_gram(geom, 0.3)
    B, _ = local_b(geom, 0.3, dofmap)
    A, rhs = condense(G, B, np.zeros(N_TEST))
    assert np.allclose(rhs, 0.0)
    assert np.allclose(A, A.T, atol=1e-13)
    # matches the explicit inverse
    A_ref = B.T @ np.linalg.solve(G, B)
    assert np.allclose(A, A_ref, atol=1e-12 * np.abs(A_ref).max())
    l = rng.standard_normal(N_TEST)
    _, rhs = condense(G, B, l)
    assert np.allclose(rhs, B.T @ np.linalg.solve(G, l), atol=1e-12)


def test_condense_rejects_indefinite_gram():
    from dpg_heat.assembly import SolverError

    G = -np.eye(N_TEST)
    B = np.eye(N_TEST)
    with pytest.raises(SolverError):
        condense(G, B, np.zeros(N_TEST))


def _dense_weighted_system(system):
    """Stacked Cholesky-weighted (B, l) blocks for the dense oracle."""
    blocks, loads = [], []
    for es in system.elements:
        L = np.linalg.cholesky(es.G)
        Bw = np.linalg.solve(L, es.B)
        block = np.zeros((N_TEST, system.dofmap.total))
        block[:, es.dofs] = Bw
        blocks.append(block)
        loads.append(L)
    return blocks, loads


def test_solve_matches_dense_least_squares():
    """The condensed SPD solve reproduces the minimizer of the Gram-weighted
    residual computed by dense lstsq on the n=1 mesh."""
    mesh = build_uniform_mesh(1)
    dofmap = build_dof_map(mesh)
    k = 0.05
    system = DpgSystem(mesh, dofmap, k)

    def f_at(pts):
        return np.sin(np.pi * pts[..., 0]) * np.sin(np.pi * pts[..., 1])

    x = system.solve(f_at)
    rhs_rows, rhs_vals = [], []
    for es in system.elements:
        L = np.linalg.cholesky(es.G)
        row = np.zeros((N_TEST, dofmap.total))
        row[:, es.dofs] = np.linalg.solve(L, es.B)
        rhs_rows.append(row)
        l = es.load_vector(f_at(es.load_points))
        rhs_vals.append(np.linalg.solve(L, l))
    A = np.vstack(rhs_rows)
    b = np.concatenate(rhs_vals)
    x_oracle, *_ = np.linalg.lstsq(A, b, rcond=None)
    assert np.allclose(x, x_oracle, atol=1e-10 * max(1.0, np.abs(x_oracle).max()))


def test_solution_minimizes_weighted_residual():
    """100 random perturbations of the solution strictly increase the
    Gram-weighted residual (the DPG minimum-residual property)."""
    mesh = build_uniform_mesh(1)
    dofmap = build_dof_map(mesh)
    system = DpgSystem(mesh, dofmap, 0.05)

    def f_at(pts):
        return np.cos(pts[..., 0]) + pts[..., 1]

    rhs, loads = system.assemble_rhs(f_at)
    x = system.solve(f_at)
    base = system.gram_weighted_residual(x, loads)
    rng = np.random.default_rng(42)
    for _ in range(100):
        dx = rng.standard_normal(x.size)
        dx *= (1e-3 * max(np.linalg.norm(x), 1.0)) / np.linalg.norm(dx)
        perturbed = system.gram_weighted_residual(x + dx, loads)
        assert perturbed > base * (1.0 + 1e-10)


def test_zero_data_gives_zero_solution():
    mesh = build_uniform_mesh(2)
    dofmap = build_dof_map(mesh)
    x = assemble_and_solve(mesh, dofmap, 0.1, lambda pts: np.zeros(pts.shape[:-1]))
    assert np.allclose(x, 0.0)


def test_solution_invariant_under_element_reordering():
    mesh = build_uniform_mesh(2)
    rng = np.random.default_rng(9)
    perm = rng.permutation(mesh.num_triangles)
    permuted = Mesh(
        vertices=mesh.vertices,
        triangles=mesh.triangles[perm],
        edges=mesh.edges,
        edge_of_triangle=mesh.edge_of_triangle[perm],
        edge_sign=mesh.edge_sign[perm],
        boundary_edge=mesh.boundary_edge,
        interior_vertex=mesh.interior_vertex,
    )
    dm1 = build_dof_map(mesh)
    dm2 = build_dof_map(permuted)
    k = 0.05

    def f_at(pts):
        return np.sin(np.pi * pts[..., 0]) * pts[..., 1]

    x1 = assemble_and_solve(mesh, dm1, k, f_at)
    x2 = assemble_and_solve(permuted, dm2, k, f_at)
    scale = max(1.0, np.abs(x1).max())
    for i, t in enumerate(perm):
        assert np.allclose(x1[dm1.u_dofs(t)], x2[dm2.u_dofs(i)], atol=1e-10 * scale)
        assert np.allclose(
            x1[dm1.sigma_dofs(t)], x2[dm2.sigma_dofs(i)], atol=1e-10 * scale
        )
    assert np.allclose(x1[dm1.uhat_slice()], x2[dm2.uhat_slice()], atol=1e-10 * scale)
    assert np.allclose(
        x1[dm1.sighat_slice()], x2[dm2.sighat_slice()], atol=1e-10 * scale
    )


def test_energy_norm_properties():
    mesh = build_uniform_mesh(2)
    dofmap = build_dof_map(mesh)
    k = 0.1
    assert energy_norm(mesh, dofmap, k, np.zeros(dofmap.total)) == 0.0
    rng = np.random.default_rng(17)
    w = rng.standard_normal(dofmap.total)
    e1 = energy_norm(mesh, dofmap, k, w)
    assert e1 > 0.0
    assert energy_norm(mesh, dofmap, k, 2.0 * w) == pytest.approx(2.0 * e1, rel=1e-12)


def test_energy_norm_against_oracle_bilinear_form():
    """||w||_E^2 = b(w, Theta w): evaluate the bilinear form with the
    oracle B matrices against the implementation's optimal test functions."""
    mesh = build_uniform_mesh(2)
    dofmap = build_dof_map(mesh)
    k = 0.3
    system = DpgSystem(mesh, dofmap, k)
    rng = np.random.default_rng(23)
    w = rng.standard_normal(dofmap.total)
    total = 0.0
    for t, es in enumerate(system.elements):
        theta = np.linalg.solve(es.G, es.B @ w[es.dofs])  # optimal test coeffs
        _, B_oracle, dofs = oracle_matrices(mesh, t, k, dofmap)
        total += float((B_oracle @ w[dofs]) @ theta)
    assert system.energy_norm(w) ** 2 == pytest.approx(total, rel=1e-10)


def test_y_norm_identity():
    """For v in H^1_0 and tau in H(div) with G = v/k + div tau and
    F = grad v + tau:  ||(v, tau)||_Y^2 = ||G||^2 + (1/k) ||F||^2."""
    mesh = build_uniform_mesh(2)
    k = 0.37

    def v(pts):
        x, y = pts[..., 0], pts[..., 1]
        return x * (1 - x) * y * (1 - y)

    def grad_v(pts):
        x, y = pts[..., 0], pts[..., 1]
        return np.stack(
            [(1 - 2 * x) * y * (1 - y), x * (1 - x) * (1 - 2 * y)], axis=-1
        )

    def F(pts):
        x, y = pts[..., 0], pts[..., 1]
        return np.stack([x**2, x * y], axis=-1)

    def tau(pts):
        return F(pts) - grad_v(pts)

    def div_tau(pts):
        x, y = pts[..., 0], pts[..., 1]
        laplace_v = -2 * y * (1 - y) - 2 * x * (1 - x)
        return 3 * x - laplace_v

    def G_fun(pts):
        return v(pts) / k + div_tau(pts)

    lhs = y_norm_of_fields(mesh, k, v, grad_v, tau, div_tau) ** 2
    norm_G_sq = sum(
        tri_integrate(lambda p: G_fun(p) ** 2, mesh.vertices[tri])
        for tri in mesh.triangles
    )
    norm_F_sq = sum(
        tri_integrate(lambda p: np.sum(F(p) ** 2, axis=-1), mesh.vertices[tri])
        for tri in mesh.triangles
    )
    assert lhs == pytest.approx(norm_G_sq + norm_F_sq / k, rel=1e-10)


def test_y_norm_identity_fails_without_matching_fields():
    """Sanity check that the identity is not vacuous: dropping the coupling
    between tau and grad v breaks it."""
    mesh = build_uniform_mesh(1)
    k = 0.5

    def v(pts):
        x, y = pts[..., 0], pts[..., 1]
        return x * (1 - x) * y * (1 - y)

    def grad_v(pts):
        x, y = pts[..., 0], pts[..., 1]
        return np.stack(
            [(1 - 2 * x) * y * (1 - y), x * (1 - x) * (1 - 2 * y)], axis=-1
        )

    def tau(pts):
        return np.stack([pts[..., 0] ** 2, 0 * pts[..., 0]], axis=-1)

    def div_tau(pts):
        return 2 * pts[..., 0]

    def wrong_F(pts):
        return tau(pts)  # missing grad v

    def G_fun(pts):
        return v(pts) / k + div_tau(pts)

    lhs = y_norm_of_fields(mesh, k, v, grad_v, tau, div_tau) ** 2
    rhs = sum(
        tri_integrate(lambda p: G_fun(p) ** 2, mesh.vertices[tri])
        + tri_integrate(lambda p: np.sum(wrong_F(p) ** 2, axis=-1), mesh.vertices[tri])
        / k
        for tri in mesh.triangles
    )
    assert abs(lhs - rhs) > 1e-3 * lhs


def test_system_invalid_k():
    mesh = build_uniform_mesh(1)
    dofmap = build_dof_map(mesh)
    with pytest.raises(ValueError):
        DpgSystem(mesh, dofmap, 0.0)
    with pytest.raises(ValueError):
        y_norm_of_fields(mesh, -1.0, None, None, None, None)
