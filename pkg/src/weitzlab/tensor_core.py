"""Index bookkeeping for symmetric and alternating tensors, plus dense kernels.

All tensors live over an n-dimensional space with a fixed orthonormal frame,
so upper and lower indices coincide.  A tensor of degree p is stored by its
values on canonical index tuples (nondecreasing for symmetric tensors,
strictly increasing for alternating ones).  The inner product is the full
contraction over all n**p index tuples, which in canonical coordinates is
the weighted sum ``sum(weight * a * b)``.

Operator matrices elsewhere in the package are expressed in *orthonormal
coordinates* ``u = sqrt(weight) * c`` so that self-adjoint operators become
symmetric matrices.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import DimensionError, SymmetryError

SYMMETRIC = "symmetric"
ALTERNATING = "alternating"

JACOBI_TOL = 1e-13
_MAX_SWEEPS = 80


@dataclass(frozen=True, eq=False)
class MultiIndexBasis:
    """Ordered canonical basis of S^p or Lambda^q over R^n."""

    n: int
    degree: int
    symmetry: str
    tuples: tuple[tuple[int, ...], ...]
    weights: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.tuples)

    @cached_property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.weights)

    @cached_property
    def position(self) -> dict[tuple[int, ...], int]:
        return {t: i for i, t in enumerate(self.tuples)}

    @cached_property
    def scatter(self) -> np.ndarray:
        """Matrix mapping canonical coefficients to flattened full tensors.

        Entry ``[flat, a]`` is +1/-1 when the full multi-index ``flat`` is a
        (signed) permutation of canonical tuple ``a``, else 0.
        """
        n, p = self.n, self.degree
        out = np.zeros((n**p, self.dim))
        for flat, idx in enumerate(itertools.product(range(n), repeat=p)):
            key = tuple(sorted(idx))
            if self.symmetry == ALTERNATING:
                if len(set(idx)) < p:
                    continue
                out[flat, self.position[key]] = _parity(idx)
            else:
                out[flat, self.position[key]] = 1.0
        out.flags.writeable = False
        return out

    @cached_property
    def gather(self) -> np.ndarray:
        """Flat positions of the canonical tuples inside a full tensor."""
        n = self.n
        flat = [sum(i * n ** (self.degree - 1 - s) for s, i in enumerate(t)) for t in self.tuples]
        return np.asarray(flat, dtype=np.intp)

    def expand(self, coeffs: np.ndarray) -> np.ndarray:
        """Full n**p tensor(s) from canonical coefficients.

        ``coeffs`` may carry trailing batch axes; the result has shape
        ``(n,)*p + coeffs.shape[1:]``.
        """
        coeffs = np.asarray(coeffs, dtype=float)
        full = self.scatter @ coeffs
        return full.reshape((self.n,) * self.degree + coeffs.shape[1:])

    def restrict(self, full: np.ndarray) -> np.ndarray:
        """Canonical coefficients read off a full tensor (leading p axes)."""
        full = np.asarray(full, dtype=float)
        flat = full.reshape((self.n**self.degree,) + full.shape[self.degree :])
        return flat[self.gather]

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.sum(self.weights * np.asarray(a) * np.asarray(b)))

    def to_orthonormal(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=float)
        return coeffs * self.sqrt_weights.reshape((-1,) + (1,) * (coeffs.ndim - 1))

    def from_orthonormal(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return u / self.sqrt_weights.reshape((-1,) + (1,) * (u.ndim - 1))


@dataclass(frozen=True, eq=False)
class TensorCoeffs:
    """A tensor given by its values on the canonical tuples of ``basis``."""

    basis: MultiIndexBasis
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.basis.dim,):
            raise DimensionError(
                f"expected {self.basis.dim} coefficients, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("tensor coefficients must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_full(cls, basis: MultiIndexBasis, full: np.ndarray) -> "TensorCoeffs":
        return cls(basis, basis.restrict(full))

    def full(self) -> np.ndarray:
        return self.basis.expand(self.values)

    def norm_sq(self) -> float:
        return self.basis.inner(self.values, self.values)

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())


def _parity(idx) -> float:
    """Sign of the permutation sorting ``idx`` (distinct entries)."""
    idx = list(idx)
    sign = 1.0
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j]:
                sign = -sign
    return sign


@lru_cache(maxsize=None)
def build_basis(n: int, degree: int, symmetry: str = SYMMETRIC) -> MultiIndexBasis:
    """Canonical basis of symmetric (S^p) or alternating (Lambda^q) tensors.

    Degree 0 is accepted and yields the one-dimensional space of scalars;
    it is the target of the trace map on 2-tensors.
    """
    if n < 2:
        raise DimensionError(f"dimension must be >= 2, got {n}")
    if degree < 0:
        raise DimensionError(f"degree must be >= 0, got {degree}")
    if symmetry == SYMMETRIC:
        tuples = tuple(itertools.combinations_with_replacement(range(n), degree))
        weights = [
            math.factorial(degree)
            / math.prod(math.factorial(c) for c in _multiplicities(t))
            for t in tuples
        ]
    elif symmetry == ALTERNATING:
        if degree > n:
            raise DimensionError(f"alternating degree {degree} exceeds dimension {n}")
        tuples = tuple(itertools.combinations(range(n), degree))
        weights = [float(math.factorial(degree))] * len(tuples)
    else:
        raise ValueError(f"unknown symmetry class {symmetry!r}")
    w = np.asarray(weights, dtype=float)
    w.flags.writeable = False
    return MultiIndexBasis(n, degree, symmetry, tuples, w)


def _multiplicities(t):
    counts: dict[int, int] = {}
    for i in t:
        counts[i] = counts.get(i, 0) + 1
    return counts.values()


def trace_map(basis_p: MultiIndexBasis, slot_pair: tuple[int, int] = (0, 1)) -> np.ndarray:
    """Matrix of the contraction over two slots, in canonical coefficients.

    Slots are 0-based.  Maps degree-p coefficients to degree p-2
    coefficients of the basis ``build_basis(n, p - 2)``.
    """
    if basis_p.symmetry != SYMMETRIC:
        raise SymmetryError("pair traces of alternating tensors vanish identically")
    p = basis_p.degree
    a, b = slot_pair
    if p < 2 or not (0 <= a < b < p):
        raise DimensionError(f"invalid slot pair {slot_pair} for degree {p}")
    target = build_basis(basis_p.n, p - 2)
    full = basis_p.expand(np.eye(basis_p.dim))
    traced = np.trace(full, axis1=a, axis2=b)
    return target.restrict(traced)


@dataclass(frozen=True, eq=False)
class TracelessBasis:
    """Orthonormal basis of totally traceless symmetric tensors S^p_0.

    ``vectors`` has shape (dim S^p, dim S^p_0); its columns are canonical
    coefficient vectors, orthonormal for the full-contraction product.
    """

    basis: MultiIndexBasis
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def orthonormal_vectors(self) -> np.ndarray:
        """The same columns in orthonormal coordinates (Euclidean-orthonormal)."""
        return self.basis.to_orthonormal(self.vectors)

    def projector(self) -> np.ndarray:
        """Orthogonal projector onto S^p_0 in canonical coefficients."""
        return self.vectors @ (self.vectors.T * self.basis.weights)


@lru_cache(maxsize=None)
def traceless_basis(n: int, p: int) -> TracelessBasis:
    if p < 2:
        raise DimensionError(f"traceless tensors need degree >= 2, got {p}")
    basis = build_basis(n, p)
    maps = [trace_map(basis, pair) for pair in itertools.combinations(range(p), 2)]
    stacked = np.vstack(maps) / basis.sqrt_weights
    u = kernel_basis(stacked, tol=1e-10)
    vectors = basis.from_orthonormal(u)
    vectors.flags.writeable = False
    return TracelessBasis(basis, vectors)


def asymmetry(m: np.ndarray) -> float:
    m = np.asarray(m, dtype=float)
    return float(np.max(np.abs(m - m.T))) if m.size else 0.0


def check_symmetric(m: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Return ``m`` as a float array, raising SymmetryError if it is not symmetric."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise SymmetryError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.linalg.norm(m)))
    if asymmetry(m) > rtol * scale:
        raise SymmetryError(f"matrix asymmetry {asymmetry(m):.3e} exceeds {rtol:g} * {scale:.3e}")
    return m


def _round_robin(m: int):
    """Rounds of disjoint index pairs covering every pair once (m even)."""
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        rounds.append([(players[i], players[m - 1 - i]) for i in range(m // 2)])
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


@lru_cache(maxsize=64)
def _schedule(dim: int):
    m = dim + (dim % 2)
    out = []
    for rnd in _round_robin(m):
        pairs = [(min(p, q), max(p, q)) for p, q in rnd if p < dim and q < dim]
        if pairs:
            p_idx = np.array([p for p, _ in pairs], dtype=np.intp)
            q_idx = np.array([q for _, q in pairs], dtype=np.intp)
            out.append((p_idx, q_idx))
    return tuple(out)


def sym_eigen(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a dense symmetric matrix by cyclic Jacobi rotations.

    Each sweep visits every off-diagonal pair once in a fixed round-robin
    order; the pairs within a round are disjoint, so their rotations are
    applied together.  Iterates until the off-diagonal Frobenius norm is at
    most ``JACOBI_TOL`` times the matrix norm.

    Returns eigenvalues in ascending order and a matrix whose columns are
    the eigenvectors, each with its first nonzero component positive.
    """
    a = check_symmetric(m).copy()
    dim = a.shape[0]
    v = np.eye(dim)
    if dim == 0:
        return np.zeros(0), v
    a = 0.5 * (a + a.T)
    scale = float(np.linalg.norm(a))
    target = JACOBI_TOL * scale
    schedule = _schedule(dim)
    last_off = np.inf
    stalled = 0
    for _ in range(_MAX_SWEEPS):
        # computed directly: subtracting the diagonal from the total norm cancels
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= target:
            break
        # rounding floor reached above target (huge dims): no progress for 3 sweeps
        stalled = stalled + 1 if off >= last_off else 0
        if stalled >= 3:
            break
        last_off = off
        for p, q in schedule:
            apq = a[p, q]
            active = np.abs(apq) > 1e-300
            if not np.any(active):
                continue
            app = a[p, p]
            aqq = a[q, q]
            with np.errstate(divide="ignore", invalid="ignore"):
                theta = np.where(active, (aqq - app) / (2.0 * np.where(active, apq, 1.0)), 0.0)
            t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            cols_p = a[:, p].copy()
            cols_q = a[:, q]
            a[:, p] = cols_p * c - cols_q * s
            a[:, q] = cols_p * s + cols_q * c
            rows_p = a[p, :].copy()
            rows_q = a[q, :]
            a[p, :] = c[:, None] * rows_p - s[:, None] * rows_q
            a[q, :] = s[:, None] * rows_p + c[:, None] * rows_q
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp = v[:, p].copy()
            vq = v[:, q]
            v[:, p] = vp * c - vq * s
            v[:, q] = vp * s + vq * c
    evals = np.diag(a).copy()
    order = np.argsort(evals, kind="stable")
    evals = evals[order]
    v = v[:, order]
    for k in range(dim):
        nz = np.flatnonzero(np.abs(v[:, k]) > 1e-12)
        if nz.size and v[nz[0], k] < 0:
            v[:, k] = -v[:, k]
    return evals, v


def kernel_basis(m: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (as columns) of the numerical null space of ``m``.

    A right singular vector belongs to the kernel when its singular value
    is at most ``tol`` times the largest one.
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    cols = m.shape[1]
    if m.size == 0 or not np.any(m):
        return np.eye(cols)
    _, sv, vt = np.linalg.svd(m, full_matrices=True)
    sigma = np.zeros(cols)
    sigma[: sv.size] = sv
    null = vt[sigma <= tol * sv[0]].T
    return np.ascontiguousarray(null)
