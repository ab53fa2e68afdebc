"""Algebraic curvature tensors: construction, validation and basic contractions.

Sign convention: ``R[i, j, k, l]`` with ``sec(e_i, e_j) = R[i, j, i, j]``;
the unit sphere has ``R_ijkl = d_ik d_jl - d_il d_jk``.  Ricci is
``Ric_kl = sum_i R[i, k, i, l]``.

Besse writes the second-kind operator with ``R_ikjl`` and the opposite sign
of the curvature tensor; under that convention his ``R_ikjl phi^kl`` equals
our ``R_iklj phi^kl``, so both describe the same operator on S^2_0.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .errors import DegeneratePlaneError, DimensionError
from .tensor_core import kernel_basis

VALIDATE_RTOL = 1e-10


@lru_cache(maxsize=None)
def canonical_quadruples(n: int) -> tuple[tuple[int, int, int, int], ...]:
    """Independent index quadruples (0-based): i<j, k<l, (i,j) <= (k,l)."""
    pairs = list(itertools.combinations(range(n), 2))
    return tuple((i, j, k, l) for a, (i, j) in enumerate(pairs) for (k, l) in pairs[a:])


def _expand_canonical(n: int, values: np.ndarray) -> np.ndarray:
    full = np.zeros((n, n, n, n))
    for (i, j, k, l), v in zip(canonical_quadruples(n), values):
        for a, b, c, d in ((i, j, k, l), (k, l, i, j)):
            full[a, b, c, d] = v
            full[b, a, c, d] = -v
            full[a, b, d, c] = -v
            full[b, a, d, c] = v
    return full


@dataclass(frozen=True, eq=False)
class CurvatureTensor:
    """Curvature tensor in an orthonormal frame, held as a full n**4 array.

    Build valid tensors with :meth:`from_canonical` or the model generators;
    :meth:`from_array` keeps raw data as given, so :func:`validate` can
    report broken symmetries.
    """

    n: int
    array: np.ndarray
    model: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = np.array(self.array, dtype=float)
        if self.n < 2 or arr.shape != (self.n,) * 4:
            raise DimensionError(f"expected shape {(self.n,) * 4}, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("curvature components must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "array", arr)

    @classmethod
    def from_array(cls, array, model: dict | None = None) -> "CurvatureTensor":
        array = np.asarray(array, dtype=float)
        return cls(array.shape[0], array, dict(model or {}))

    @classmethod
    def from_canonical(cls, n: int, values, model: dict | None = None) -> "CurvatureTensor":
        values = np.asarray(values, dtype=float)
        if values.shape != (len(canonical_quadruples(n)),):
            raise DimensionError(
                f"expected {len(canonical_quadruples(n))} canonical values for n={n}"
            )
        return cls(n, _expand_canonical(n, values), dict(model or {}))

    @cached_property
    def canonical(self) -> np.ndarray:
        idx = np.array(canonical_quadruples(self.n)).T
        return self.array[tuple(idx)]

    def __add__(self, other: "CurvatureTensor") -> "CurvatureTensor":
        return CurvatureTensor(self.n, self.array + other.array)

    def scaled(self, factor: float) -> "CurvatureTensor":
        return CurvatureTensor(self.n, factor * self.array)

    def digest(self) -> str:
        """SHA-256 of the canonical components (provenance tag for reports)."""
        payload = json.dumps([float(v) for v in self.canonical]).encode()
        return hashlib.sha256(f"{self.n}:".encode() + payload).hexdigest()


@dataclass(frozen=True)
class ValidationReport:
    antisymmetry: float
    pair_symmetry: float
    bianchi: float
    tolerance: float

    @property
    def max_residual(self) -> float:
        return max(self.antisymmetry, self.pair_symmetry, self.bianchi)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance

    def as_dict(self) -> dict:
        return {
            "antisymmetry": self.antisymmetry,
            "pair_symmetry": self.pair_symmetry,
            "bianchi": self.bianchi,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def validate(R: CurvatureTensor, rtol: float = VALIDATE_RTOL) -> ValidationReport:
    a = R.array
    anti = max(
        float(np.max(np.abs(a + a.transpose(1, 0, 2, 3)))),
        float(np.max(np.abs(a + a.transpose(0, 1, 3, 2)))),
    )
    pair = float(np.max(np.abs(a - a.transpose(2, 3, 0, 1))))
    # R_ijkl + R_iklj + R_iljk
    bianchi = a + a.transpose(0, 2, 3, 1) + a.transpose(0, 3, 1, 2)
    tol = rtol * max(1.0, float(np.linalg.norm(a)))
    return ValidationReport(anti, pair, float(np.max(np.abs(bianchi))), tol)


def constant_curvature(n: int, kappa: float) -> CurvatureTensor:
    if n < 2:
        raise DimensionError(f"dimension must be >= 2, got {n}")
    d = np.eye(n)
    arr = kappa * (np.einsum("ik,jl->ijkl", d, d) - np.einsum("il,jk->ijkl", d, d))
    return CurvatureTensor(n, arr, {"tag": "constant", "n": n, "kappa": float(kappa)})


def product_space(factors) -> CurvatureTensor:
    """Riemannian product of space forms, given as ``[(n_i, kappa_i), ...]``."""
    factors = [(int(m), float(k)) for m, k in factors]
    if len(factors) < 2:
        raise DimensionError("a product needs at least two factors")
    if any(m < 2 for m, _ in factors):
        raise DimensionError("every factor needs dimension >= 2")
    n = sum(m for m, _ in factors)
    arr = np.zeros((n, n, n, n))
    start = 0
    for m, kappa in factors:
        block = slice(start, start + m)
        arr[block, block, block, block] = constant_curvature(m, kappa).array
        start += m
    return CurvatureTensor(
        n, arr, {"tag": "product", "factors": [[m, k] for m, k in factors]}
    )


def complex_structure(m: int) -> np.ndarray:
    """Standard J on R^{2m}: J e_{2a} = e_{2a+1}, J e_{2a+1} = -e_{2a} (0-based)."""
    J = np.zeros((2 * m, 2 * m))
    for a in range(m):
        J[2 * a + 1, 2 * a] = 1.0
        J[2 * a, 2 * a + 1] = -1.0
    return J


def fubini_study(m: int) -> CurvatureTensor:
    """Fubini-Study curvature with holomorphic sectional curvature 4.

    Sectional curvatures fill [1, 4]; Ricci is 2(m+1) times the identity.
    """
    if m < 2:
        raise DimensionError(f"complex dimension must be >= 2, got {m}")
    n = 2 * m
    g = np.eye(n)
    # <J e_a, e_b> = J[b, a]
    w = complex_structure(m).T
    arr = (
        np.einsum("ik,jl->ijkl", g, g)
        - np.einsum("il,jk->ijkl", g, g)
        + np.einsum("ik,jl->ijkl", w, w)
        - np.einsum("il,jk->ijkl", w, w)
        + 2.0 * np.einsum("ij,kl->ijkl", w, w)
    )
    return CurvatureTensor(n, arr, {"tag": "fubini_study", "m": m})


@lru_cache(maxsize=None)
def _curvature_subspace(n: int) -> np.ndarray:
    """Orthonormal basis (canonical coordinates) of tensors obeying first Bianchi.

    Canonical storage already enforces the antisymmetries and pair symmetry,
    so only the Bianchi rows remain as constraints.
    """
    quads = canonical_quadruples(n)
    size = len(quads)
    rows = []
    for col in range(size):
        unit = np.zeros(size)
        unit[col] = 1.0
        a = _expand_canonical(n, unit)
        rows.append((a + a.transpose(0, 2, 3, 1) + a.transpose(0, 3, 1, 2)).ravel())
    constraint = np.array(rows).T
    basis = kernel_basis(constraint, tol=1e-10)
    basis.flags.writeable = False
    return basis


def random_curvature(
    n: int, seed: int, base: CurvatureTensor | None = None, eps: float = 1.0
) -> CurvatureTensor:
    """``base + eps * P``, with P a seeded random algebraic curvature tensor.

    P is a Gaussian vector in canonical coordinates projected by least
    squares onto the Bianchi-satisfying subspace, scaled to unit max-abs
    entry.  With ``eps == 0`` the base is returned unchanged.
    """
    if n < 2:
        raise DimensionError(f"dimension must be >= 2, got {n}")
    if base is not None and base.n != n:
        raise DimensionError(f"base has dimension {base.n}, expected {n}")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps == 0 and base is not None:
        return base
    model = {
        "tag": "random_perturbed",
        "n": n,
        "seed": int(seed),
        "eps": float(eps),
        "base": dict(base.model) if base is not None else None,
    }
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal(len(canonical_quadruples(n)))
    basis = _curvature_subspace(n)
    projected = basis @ (basis.T @ raw)
    full = _expand_canonical(n, projected)
    full /= np.max(np.abs(full))
    arr = eps * full
    if base is not None:
        arr = base.array + arr
    return CurvatureTensor(n, arr, model)


def ricci(R: CurvatureTensor) -> np.ndarray:
    return np.einsum("ikil->kl", R.array)


def scalar(R: CurvatureTensor) -> float:
    return float(np.trace(ricci(R)))


def sectional(R: CurvatureTensor, X, Y) -> float:
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != (R.n,) or Y.shape != (R.n,):
        raise DimensionError(f"vectors must have length {R.n}")
    gram = float(X @ X) * float(Y @ Y) - float(X @ Y) ** 2
    if gram <= 1e-12:
        raise DegeneratePlaneError(f"Gram determinant {gram:.3e} does not span a plane")
    # evaluate on an orthonormal frame of the plane; the Gram quotient loses
    # digits to cancellation when X and Y are nearly parallel
    e1 = X / np.linalg.norm(X)
    e2 = Y - (e1 @ Y) * e1
    e2 /= np.linalg.norm(e2)
    return float(np.einsum("ijkl,i,j,k,l->", R.array, e1, e2, e1, e2))


# --- JSON interchange -------------------------------------------------------


class CurvatureFormatError(ValueError):
    """Malformed curvature JSON (bad structure, indices or types)."""


def to_json_dict(R: CurvatureTensor) -> dict:
    comps = [
        {"i": i + 1, "j": j + 1, "k": k + 1, "l": l + 1, "value": float(v)}
        for (i, j, k, l), v in zip(canonical_quadruples(R.n), R.canonical)
        if v != 0.0
    ]
    return {"n": R.n, "components": comps}


def dumps(R: CurvatureTensor) -> str:
    return json.dumps(to_json_dict(R), indent=1, sort_keys=True) + "\n"


def from_json_dict(data) -> CurvatureTensor:
    """Rebuild a tensor from the curvature JSON format.

    Each listed entry is written together with its antisymmetry and
    pair-symmetry images; the caller re-validates (first Bianchi can still
    fail).  Structural problems raise CurvatureFormatError.
    """
    try:
        n = data["n"]
        comps = data["components"]
    except (KeyError, TypeError) as exc:
        raise CurvatureFormatError(f"missing field: {exc}") from None
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        raise CurvatureFormatError(f"'n' must be an integer >= 2, got {n!r}")
    if not isinstance(comps, list):
        raise CurvatureFormatError("'components' must be a list")
    arr = np.zeros((n, n, n, n))
    seen = np.zeros((n, n, n, n), dtype=bool)
    for entry in comps:
        try:
            idx = [entry[key] for key in ("i", "j", "k", "l")]
            value = float(entry["value"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CurvatureFormatError(f"bad component {entry!r}: {exc}") from None
        if not all(isinstance(x, int) and not isinstance(x, bool) and 1 <= x <= n for x in idx):
            raise CurvatureFormatError(f"indices out of range in {entry!r}")
        if not np.isfinite(value):
            raise CurvatureFormatError(f"non-finite value in {entry!r}")
        i, j, k, l = (x - 1 for x in idx)
        if i == j or k == l:
            if value != 0.0:
                # contradicts antisymmetry; keep it so validation reports it
                arr[i, j, k, l] = value
            continue
        for a, b, c, d, sign in (
            (i, j, k, l, 1), (j, i, k, l, -1), (i, j, l, k, -1), (j, i, l, k, 1),
            (k, l, i, j, 1), (l, k, i, j, -1), (k, l, j, i, -1), (l, k, j, i, 1),
        ):
            if seen[a, b, c, d] and arr[a, b, c, d] != sign * value:
                # conflicting duplicate: record raw value, validation flags it
                arr[i, j, k, l] = value
                break
            arr[a, b, c, d] = sign * value
            seen[a, b, c, d] = True
    return CurvatureTensor(n, arr)


def loads(text: str) -> CurvatureTensor:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CurvatureFormatError(f"invalid JSON: {exc}") from None
    return from_json_dict(data)
