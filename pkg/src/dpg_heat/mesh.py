"""Uniform triangular meshes of the unit square and their skeletons.

The mesh is fixed over all time steps. Each cell of an n-by-n grid is split
along the diagonal from its lower-left to its upper-right corner, giving
2*n**2 congruent triangles with positive (counter-clockwise) orientation
and mesh size sqrt(2)/n.

Edges carry a canonical orientation (lower vertex index to higher vertex
index); the canonical edge normal is the 90-degree counter-clockwise
rotation of the oriented tangent. Per triangle and local edge, `edge_sign`
records whether the triangle's outward normal agrees (+1) or disagrees (-1)
with the canonical normal. This makes the normal-flux trace unknown
single-valued across interior edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Mesh:
    """Conforming triangulation of the unit square.

    Attributes:
        vertices: (V, 2) vertex coordinates in [0, 1]^2.
        triangles: (F, 3) vertex indices, counter-clockwise.
        edges: (E, 2) vertex indices, canonical orientation lo -> hi.
        edge_of_triangle: (F, 3) global edge index of local edge j,
            where local edge j connects local vertices j and (j+1) % 3.
        edge_sign: (F, 3) +1 if the triangle's outward normal on that edge
            equals the canonical edge normal, -1 otherwise.
        boundary_edge: (E,) flag, True for edges on the domain boundary.
        interior_vertex: (V,) flag, True for vertices not on the boundary.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    edge_of_triangle: np.ndarray
    edge_sign: np.ndarray
    boundary_edge: np.ndarray
    interior_vertex: np.ndarray

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    def triangle_area(self, t: int) -> float:
        a, b, c = self.vertices[self.triangles[t]]
        d1, d2 = b - a, c - a
        return 0.5 * float(d1[0] * d2[1] - d1[1] * d2[0])

    def triangle_areas(self) -> np.ndarray:
        v = self.vertices[self.triangles]
        d1, d2 = v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid on [0, T] with N steps of size k = T/N."""

    T: float
    N: int

    def __post_init__(self) -> None:
        if self.T <= 0.0 or self.N < 1:
            raise ValueError(f"invalid time grid: T={self.T}, N={self.N}")

    @property
    def k(self) -> float:
        return self.T / self.N

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.N + 1)


def build_uniform_mesh(n: int) -> Mesh:
    """Build the uniform n x n criss-cross-free triangulation of (0,1)^2.

    Every square cell is split from lower-left to upper-right, giving
    2*n**2 triangles, (n+1)**2 vertices and 3*n**2 + 2*n edges.
    """
    if n < 1:
        raise ValueError(f"subdivision count must be >= 1, got n={n}")

    m = n + 1
    xs = np.linspace(0.0, 1.0, m)
    xv, yv = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([xv.ravel(), yv.ravel()])

    def vid(i: int, j: int) -> int:
        return j * m + i

    triangles = []
    for j in range(n):
        for i in range(n):
            v00 = vid(i, j)
            v10 = vid(i + 1, j)
            v01 = vid(i, j + 1)
            v11 = vid(i + 1, j + 1)
            triangles.append((v00, v10, v11))
            triangles.append((v00, v11, v01))
    triangles = np.asarray(triangles, dtype=np.int64)

    edge_index: dict[tuple[int, int], int] = {}
    edges: list[tuple[int, int]] = []
    edge_of_triangle = np.empty_like(triangles)
    edge_sign = np.empty_like(triangles)
    edge_refcount: list[int] = []

    for t, tri in enumerate(triangles):
        for j in range(3):
            p, q = int(tri[j]), int(tri[(j + 1) % 3])
            key = (min(p, q), max(p, q))
            e = edge_index.get(key)
            if e is None:
                e = len(edges)
                edge_index[key] = e
                edges.append(key)
                edge_refcount.append(0)
            edge_refcount[e] += 1
            edge_of_triangle[t, j] = e
            # Outward normal of a CCW triangle along p->q is the clockwise
            # rotation of the tangent; canonical normal is the CCW rotation
            # of the lo->hi tangent. They agree iff the traversal runs hi->lo.
            edge_sign[t, j] = -1 if p < q else 1

    edges = np.asarray(edges, dtype=np.int64)
    boundary_edge = np.asarray(edge_refcount) == 1

    interior_vertex = np.ones(vertices.shape[0], dtype=bool)
    interior_vertex[np.unique(edges[boundary_edge])] = False

    return Mesh(
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        edge_of_triangle=edge_of_triangle,
        edge_sign=edge_sign,
        boundary_edge=boundary_edge,
        interior_vertex=interior_vertex,
    )


def mesh_size(mesh: Mesh) -> float:
    """Maximum element diameter (longest edge over all triangles)."""
    v = mesh.vertices[mesh.triangles]
    d01 = np.linalg.norm(v[:, 0] - v[:, 1], axis=1)
    d12 = np.linalg.norm(v[:, 1] - v[:, 2], axis=1)
    d20 = np.linalg.norm(v[:, 2] - v[:, 0], axis=1)
    return float(np.max(np.column_stack([d01, d12, d20])))
