"""Discrete exterior calculus on an icosphere and the Hodge Laplacian on 1-cochains.

Primal-dual DEC with a circumcentric dual: ``star0`` are Voronoi vertex
areas, ``star1`` cotan weights (dual edge length over primal edge length)
and ``star2`` inverse triangle areas.  The 1-form Laplacian

    L1 = d0 star0^-1 d0^T star1 + star1^-1 d1^T star2 d1

is returned as the generalized symmetric pencil (star1 L1, star1).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg

from .errors import DimensionError, MeshQualityError
from .weitzenboeck import BoundCheck, eigen_bound_constants

MAX_LEVEL = 5
DENSE_EDGE_LIMIT = 2000
ZERO_TOL = 1e-8
_MIN_AREA = 1e-14


@dataclass(frozen=True, eq=False)
class TriMesh:
    vertices: np.ndarray
    triangles: np.ndarray

    @cached_property
    def edges(self) -> np.ndarray:
        """Sorted unique vertex pairs (a < b) of all triangle sides."""
        t = self.triangles
        pairs = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        pairs.sort(axis=1)
        return np.unique(pairs, axis=0)

    @property
    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edges) + len(self.triangles)

    def to_off(self) -> str:
        lines = ["OFF", f"{len(self.vertices)} {len(self.triangles)} 0"]
        lines += [" ".join(format(x, ".17g") for x in v) for v in self.vertices]
        lines += ["3 " + " ".join(str(i) for i in t) for t in self.triangles]
        return "\n".join(lines) + "\n"


def _icosahedron():
    phi = (1.0 + 5.0**0.5) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=float,
    )
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    return verts / np.linalg.norm(verts, axis=1, keepdims=True), faces


def icosphere(level: int) -> TriMesh:
    """Icosahedron subdivided ``level`` times (midpoint split), projected to S^2."""
    if not isinstance(level, (int, np.integer)) or not 0 <= level <= MAX_LEVEL:
        raise DimensionError(f"icosphere level must be in [0, {MAX_LEVEL}], got {level!r}")
    verts, faces = _icosahedron()
    verts = list(verts)
    for _ in range(level):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = np.array(new)
    V = np.array(verts)
    # outward orientation
    tri = V[faces]
    normal = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    flip = np.einsum("ij,ij->i", normal, tri.sum(axis=1)) < 0
    faces = faces.copy()
    faces[flip] = faces[flip][:, [0, 2, 1]]
    return TriMesh(V, faces.astype(np.intp))


@dataclass(frozen=True, eq=False)
class DECOperators:
    d0: sp.csr_matrix
    d1: sp.csr_matrix
    star0: np.ndarray
    star1: np.ndarray
    star2: np.ndarray


def _cot(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    cross = np.linalg.norm(np.cross(u, v), axis=1)
    return np.einsum("ij,ij->i", u, v) / cross


def dec_operators(mesh: TriMesh) -> DECOperators:
    V, T, E = mesh.vertices, mesh.triangles, mesh.edges
    nv, ne, nf = len(V), len(E), len(T)
    rows = np.repeat(np.arange(ne), 2)
    d0 = sp.csr_matrix(
        (np.tile([-1.0, 1.0], ne), (rows, E.ravel())), shape=(ne, nv)
    )

    edge_index = {(int(a), int(b)): i for i, (a, b) in enumerate(E)}
    d1_rows, d1_cols, d1_vals = [], [], []
    for f, (a, b, c) in enumerate(T):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (int(min(u, v)), int(max(u, v)))
            d1_rows.append(f)
            d1_cols.append(edge_index[key])
            d1_vals.append(1.0 if u < v else -1.0)
    d1 = sp.csr_matrix((d1_vals, (d1_rows, d1_cols)), shape=(nf, ne))

    p0, p1, p2 = V[T[:, 0]], V[T[:, 1]], V[T[:, 2]]
    area = 0.5 * np.linalg.norm(np.cross(p1 - p0, p2 - p0), axis=1)
    if np.any(area < _MIN_AREA):
        raise MeshQualityError(f"degenerate triangle, min area {area.min():.3e}")
    # cotangent of the angle at each corner
    cot0 = _cot(p1 - p0, p2 - p0)
    cot1 = _cot(p2 - p1, p0 - p1)
    cot2 = _cot(p0 - p2, p1 - p2)

    star1 = np.zeros(ne)
    star0 = np.zeros(nv)
    for (u, v, w), cot_w in (((0, 1, 2), cot2), ((1, 2, 0), cot0), ((2, 0, 1), cot1)):
        idx = np.array([edge_index[(int(min(x, y)), int(max(x, y)))] for x, y in zip(T[:, u], T[:, v])])
        np.add.at(star1, idx, 0.5 * cot_w)
        length_sq = np.sum((V[T[:, u]] - V[T[:, v]]) ** 2, axis=1)
        np.add.at(star0, T[:, u], length_sq * cot_w / 8.0)
        np.add.at(star0, T[:, v], length_sq * cot_w / 8.0)
    if np.any(star1 <= 0):
        raise MeshQualityError(f"non-positive cotan weight {star1.min():.3e}")
    if np.any(star0 <= 0):
        raise MeshQualityError(f"non-positive dual area {star0.min():.3e}")
    return DECOperators(d0, d1, star0, star1, 1.0 / area)


def hodge1_matrix(mesh: TriMesh, ops: DECOperators | None = None):
    """Stiffness A and diagonal mass M (sparse) with ``A v = lambda M v``.

    ``A = star1 d0 star0^-1 d0^T star1 + d1^T star2 d1`` is symmetric positive
    semidefinite; ``M = star1``.
    """
    ops = ops or dec_operators(mesh)
    s1 = sp.diags(ops.star1)
    exact = s1 @ ops.d0 @ sp.diags(1.0 / ops.star0) @ ops.d0.T @ s1
    coexact = ops.d1.T @ sp.diags(ops.star2) @ ops.d1
    A = (exact + coexact).tocsr()
    A = 0.5 * (A + A.T)
    return A.tocsr(), s1.tocsr()


def hodge1_spectrum(mesh: TriMesh, k: int) -> np.ndarray:
    """The ``k`` smallest eigenvalues of the discrete 1-form Hodge Laplacian."""
    if k < 0:
        raise ValueError("k must be >= 0")
    A, M = hodge1_matrix(mesh)
    ne = A.shape[0]
    k = min(k, ne)
    if k == 0:
        return np.zeros(0)
    if ne <= DENSE_EDGE_LIMIT or k >= ne - 1:
        evals = scipy.linalg.eigh(
            A.toarray(), M.toarray(), eigvals_only=True, subset_by_index=[0, k - 1]
        )
    else:
        # shift below the nonnegative spectrum so A - sigma M is definite
        evals = scipy.sparse.linalg.eigsh(
            A, k=k, M=M, sigma=-1.0, which="LM", return_eigenvectors=False
        )
    return np.sort(evals)


def verify_form_bound(mesh: TriMesh, k: int = 8, evals: np.ndarray | None = None) -> BoundCheck:
    """Check the lowest nonzero 1-form eigenvalue on the unit sphere against q(n-q)alpha.

    With n = 2, q = 1 and alpha = 1 (exact for the unit sphere) the bound is 1.
    """
    if evals is None:
        evals = hodge1_spectrum(mesh, k)
    rhs = eigen_bound_constants(2, 1, 1.0, "sec4-eigen")
    nonzero = evals[evals > ZERO_TOL]
    inputs = {
        "vertices": int(len(mesh.vertices)),
        "edges": int(len(mesh.edges)),
        "k": int(len(evals)),
        "n": 2,
        "degree": 1,
        "alpha": 1.0,
        "zero_eigenvalues": int(np.sum(np.abs(evals) <= ZERO_TOL)),
    }
    if nonzero.size == 0:
        return BoundCheck("sec4-eigen", rhs, float("nan"), float("nan"), True, True, inputs)
    lam = float(nonzero[0])
    return BoundCheck("sec4-eigen", rhs, lam, lam - rhs, lam - rhs >= -1e-9, False, inputs)
