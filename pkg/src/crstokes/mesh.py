"""Triangulations of the unit square with uniform red refinement."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class VertexPatch:
    """Triangles whose closure contains a given vertex (support of its hat)."""

    vertex: int
    triangles: frozenset[int]


@dataclass(eq=False)
class Mesh:
    """Conforming triangle mesh.

    Attributes
    ----------
    vertices : (V, 2) float array
    triangles : (T, 3) int array, counter-clockwise
    edges : (E, 2) int array, smaller vertex index first
    tri_edges : (T, 3) int array, local edge k is opposite local vertex k
    edge_tris : (E, 2) int array, adjacent triangles, ``-1`` marks a missing neighbour
    level : refinement level
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray = field(init=False)
    tri_edges: np.ndarray = field(init=False)
    edge_tris: np.ndarray = field(init=False)
    level: int = 0

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        self.edges, self.tri_edges, self.edge_tris = _build_edges(self.triangles)
        for arr in (self.vertices, self.triangles, self.edges, self.tri_edges, self.edge_tris):
            arr.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        """Boolean flag per edge."""
        flags = self.edge_tris[:, 1] < 0
        flags.setflags(write=False)
        return flags

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def areas(self) -> np.ndarray:
        return np.abs(self.signed_areas)

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        p = self.vertices[self.edges]
        return np.linalg.norm(p[:, 1] - p[:, 0], axis=1)

    @property
    def h(self) -> float:
        """Mesh size: longest edge."""
        return float(self.edge_lengths.max())

    @cached_property
    def diameters(self) -> np.ndarray:
        return self.edge_lengths[self.tri_edges].max(axis=1)

    @cached_property
    def edge_midpoints(self) -> np.ndarray:
        return self.vertices[self.edges].mean(axis=1)

    def vertex_patch(self, i: int) -> VertexPatch:
        if not 0 <= i < self.n_vertices:
            raise IndexError(f"vertex index {i} out of range [0, {self.n_vertices})")
        tris = np.flatnonzero((self.triangles == i).any(axis=1))
        return VertexPatch(vertex=int(i), triangles=frozenset(int(t) for t in tris))

    def refine(self) -> Mesh:
        return refine_uniform(self)

    def dump(self, path=None) -> str:
        """Plain-text dump: ``V E T`` header, vertex lines, triangle lines."""
        lines = [f"{self.n_vertices} {self.n_edges} {self.n_triangles}"]
        lines += [f"{x!r} {y!r}" for x, y in self.vertices.tolist()]
        lines += [f"{i} {j} {k}" for i, j, k in self.triangles.tolist()]
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def _build_edges(triangles):
    n_tri = len(triangles)
    # local edge k joins the two vertices other than k
    local = np.array([[1, 2], [2, 0], [0, 1]])
    pairs = triangles[:, local].reshape(-1, 2)
    keys = np.sort(pairs, axis=1)
    edges, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    tri_edges = inverse.reshape(n_tri, 3)

    edge_tris = -np.ones((len(edges), 2), dtype=np.int64)
    owner = np.repeat(np.arange(n_tri), 3)
    order = np.argsort(inverse, kind="stable")
    counts = np.bincount(inverse, minlength=len(edges))
    if counts.max() > 2:
        raise ValueError("non-manifold mesh: an edge is shared by more than two triangles")
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    edge_tris[:, 0] = owner[order[starts]]
    two = counts == 2
    edge_tris[two, 1] = owner[order[starts[two] + 1]]
    return edges, tri_edges, edge_tris


def refine_uniform(m: Mesh) -> Mesh:
    """Split every triangle into four similar children through edge midpoints."""
    nv = m.n_vertices
    vertices = np.vstack([m.vertices, m.edge_midpoints])
    v0, v1, v2 = m.triangles.T
    m0, m1, m2 = (m.tri_edges + nv).T
    children = np.stack(
        [
            np.stack([v0, m2, m1], axis=1),
            np.stack([m2, v1, m0], axis=1),
            np.stack([m1, m0, v2], axis=1),
            np.stack([m0, m1, m2], axis=1),
        ],
        axis=1,
    ).reshape(-1, 3)
    return Mesh(vertices, children, level=m.level + 1)


def _initial_mesh() -> Mesh:
    # 2x2 squares, each cut along the lower-left to upper-right diagonal
    xs = np.linspace(0.0, 1.0, 3)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    tris = []
    for j in range(2):
        for i in range(2):
            a = 3 * j + i
            b, c, d = a + 1, a + 4, a + 3
            tris += [(a, b, c), (a, c, d)]
    return Mesh(vertices, np.array(tris), level=0)


def build_unit_square(level: int) -> Mesh:
    """Eight-triangle unit square mesh refined ``level`` times."""
    if level < 0:
        raise ValueError("level must be non-negative")
    m = _initial_mesh()
    for _ in range(level):
        m = refine_uniform(m)
    return m


def read_mesh(path) -> Mesh:
    lines = Path(path).read_text().split("\n")
    nv, _, nt = (int(s) for s in lines[0].split())
    vertices = np.array([[float(s) for s in ln.split()] for ln in lines[1 : 1 + nv]])
    triangles = np.array([[int(s) for s in ln.split()] for ln in lines[1 + nv : 1 + nv + nt]])
    return Mesh(vertices, triangles)
