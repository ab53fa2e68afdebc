"""Weitzenboeck curvature operators as explicit matrices, and the pointwise bounds.

For a p-tensor phi the curvature term is

    Rw(phi)_{i1..ip} = sum_a Ric_{ia k} phi(.. k at slot a ..)
                       - sum_{a != b} R_{ia k ib l} phi(.. k at a .., .. l at b ..)

The same formula acts on symmetric tensors, on their traceless part and on
alternating forms.  Matrices are returned in orthonormal coordinates of the
chosen space, so they are symmetric and their eigenvalues are those of the
operator for the full-contraction inner product.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .curvature import CurvatureTensor, ricci, scalar
from .errors import DimensionError
from .tensor_core import (
    ALTERNATING,
    SYMMETRIC,
    MultiIndexBasis,
    TensorCoeffs,
    asymmetry,
    build_basis,
    sym_eigen,
    traceless_basis,
)

SYM = "S^p"
SYM0 = "S^p_0"
FORMS = "Lambda^q"
SECOND_KIND = "S^2_0-second-kind"

BOUND_SLACK = 1e-9
EINSTEIN_RTOL = 1e-8
STRICT_MARGIN = 1e-9

POSITIVE_TAGS = ("eq2.7", "eq2.9")
ALL_TAGS = ("eq2.7", "eq2.9", "eq3.1", "eq4.1", "thm3", "sec3-eigen", "sec4-eigen")


@dataclass(frozen=True, eq=False)
class WeitzenboeckMatrix:
    space: str
    degree: int
    n: int
    t: float
    matrix: np.ndarray
    basis: MultiIndexBasis
    # canonical coefficient vectors spanning the space (None: the whole basis)
    vectors: np.ndarray | None = None
    asymmetry: float = 0.0

    def eigen(self):
        return sym_eigen(self.matrix)

    def canonical_matrix(self) -> np.ndarray:
        """The operator in canonical coefficients of ``basis`` (S^p / Lambda^q only)."""
        if self.vectors is not None:
            raise DimensionError("canonical form is only defined on the full basis")
        s = self.basis.sqrt_weights
        return self.matrix * s[None, :] / s[:, None]


def apply_curvature_term(R: CurvatureTensor, full: np.ndarray, degree: int) -> np.ndarray:
    """Apply the curvature term to full tensors with ``degree`` leading axes.

    Trailing axes of ``full`` are batch axes and are carried along.
    """
    if degree == 0:
        return np.zeros_like(full)
    ric = ricci(R)
    out = np.zeros_like(full)
    for a in range(degree):
        term = np.tensordot(ric, full, axes=([1], [a]))
        out += np.moveaxis(term, 0, a)
    for a, b in itertools.permutations(range(degree), 2):
        term = np.tensordot(R.array, full, axes=([1, 3], [a, b]))
        out -= np.moveaxis(term, [0, 1], [a, b])
    return out


def _assemble(R, basis: MultiIndexBasis, vectors: np.ndarray, op) -> tuple[np.ndarray, float]:
    full = basis.expand(vectors)
    image = basis.restrict(op(full))
    m = vectors.T @ (basis.weights[:, None] * image)
    asym = asymmetry(m)
    return 0.5 * (m + m.T), asym


def weitz_matrix(
    R: CurvatureTensor, space: str, degree: int, t: float = 1.0
) -> WeitzenboeckMatrix:
    """Matrix of ``t`` times the curvature term on S^p, S^p_0 or Lambda^q.

    ``t = 1`` is the Lichnerowicz / Hodge sign, ``t = -1`` the Sampson sign.
    Degree 0 on S^p gives the zero operator on scalars.
    """
    n = R.n
    if space == SYM:
        if degree < 0:
            raise DimensionError(f"degree must be >= 0, got {degree}")
        basis = build_basis(n, degree, SYMMETRIC)
        vectors = None
    elif space == SYM0:
        if degree < 2:
            raise DimensionError(f"traceless tensors need degree >= 2, got {degree}")
        tb = traceless_basis(n, degree)
        basis, vectors = tb.basis, tb.vectors
    elif space == FORMS:
        if not 1 <= degree <= n:
            raise DimensionError(f"form degree must be in [1, {n}], got {degree}")
        basis = build_basis(n, degree, ALTERNATING)
        vectors = None
    else:
        raise DimensionError(f"unknown space {space!r}")
    cols = vectors if vectors is not None else np.diag(1.0 / basis.sqrt_weights)
    m, asym = _assemble(R, basis, cols, lambda f: apply_curvature_term(R, f, degree))
    return WeitzenboeckMatrix(space, degree, n, float(t), t * m, basis, vectors, abs(t) * asym)


def second_kind_matrix(R: CurvatureTensor) -> WeitzenboeckMatrix:
    """Curvature operator of the second kind, phi -> R_iklj phi^kl, on S^2_0.

    Its image need not be traceless; the matrix is the restriction of the
    bilinear form to S^2_0 (i.e. followed by the traceless projection).
    """
    tb = traceless_basis(R.n, 2)

    def op(full):
        return np.einsum("iklj,kl...->ij...", R.array, full)

    m, asym = _assemble(R, tb.basis, tb.vectors, op)
    return WeitzenboeckMatrix(SECOND_KIND, 2, R.n, 1.0, m, tb.basis, tb.vectors, asym)


def q_form_value(R: CurvatureTensor, phi: TensorCoeffs) -> float:
    """g(Rw(phi), phi) for a symmetric tensor or an alternating form."""
    basis = phi.basis
    if basis.n != R.n:
        raise DimensionError(f"tensor dimension {basis.n} != curvature dimension {R.n}")
    space = SYM if basis.symmetry == SYMMETRIC else FORMS
    wm = weitz_matrix(R, space, basis.degree)
    u = basis.to_orthonormal(phi.values)
    return float(u @ wm.matrix @ u)


def _as_matrix_2tensor(n: int, phi) -> np.ndarray:
    if isinstance(phi, TensorCoeffs):
        if phi.basis.degree != 2 or phi.basis.symmetry != SYMMETRIC or phi.basis.n != n:
            raise DimensionError("expected a symmetric 2-tensor of matching dimension")
        return phi.full()
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (n, n):
        raise DimensionError(f"expected an {n}x{n} matrix")
    return phi


@dataclass(frozen=True)
class DiagonalIdentity:
    q_value: float
    sectional_sum: float
    residual: float


def diag_identity_residual(R: CurvatureTensor, phi) -> DiagonalIdentity:
    """Compare Q_2(phi) with sum_{i!=j} sec(e_i, e_j) (eps_i - eps_j)^2.

    ``(e_i, eps_i)`` diagonalize phi.  The residual is relative to
    ``max(1, |Q_2|)``.
    """
    mat = _as_matrix_2tensor(R.n, phi)
    basis = build_basis(R.n, 2)
    q = q_form_value(R, TensorCoeffs.from_full(basis, mat))
    eps, frame = sym_eigen(mat)
    # sec(e_i, e_j) = R(e_i, e_j, e_i, e_j) with e_i the columns of frame
    rot = np.einsum("abcd,ai,bj,ck,dl->ijkl", R.array, frame, frame, frame, frame)
    sec = np.einsum("ijij->ij", rot)
    diff = (eps[:, None] - eps[None, :]) ** 2
    total = float(np.sum(sec * diff) - np.sum(np.diag(sec) * np.diag(diff)))
    return DiagonalIdentity(q, total, abs(q - total) / max(1.0, abs(q)))


# --- bound certificates -----------------------------------------------------


@dataclass(frozen=True)
class BoundCheck:
    bound_tag: str
    rhs_constant: float
    lambda_extreme: float
    margin: float
    satisfied: bool
    vacuous: bool
    inputs_digest: dict = field(default_factory=dict)
    tolerance: float = BOUND_SLACK

    def as_dict(self) -> dict:
        return {
            "bound_tag": self.bound_tag,
            "rhs_constant": self.rhs_constant,
            "lambda_extreme": self.lambda_extreme,
            "margin": self.margin,
            "satisfied": self.satisfied,
            "vacuous": self.vacuous,
            "tolerance": self.tolerance,
            "inputs": self.inputs_digest,
        }


def _check(tag, rhs, extreme, margin, hypotheses_hold, inputs) -> BoundCheck:
    ok = margin >= -BOUND_SLACK
    return BoundCheck(
        bound_tag=tag,
        rhs_constant=float(rhs),
        lambda_extreme=float(extreme),
        margin=float(margin),
        satisfied=bool(ok or not hypotheses_hold),
        vacuous=not hypotheses_hold,
        inputs_digest=inputs,
    )


def _report(R, report):
    if report is None:
        from .pinching import classify

        report = classify(R)
    return report


def _inputs(R, degree, space, report, **extra):
    out = {
        "curvature_sha256": R.digest(),
        "n": R.n,
        "degree": degree,
        "space": space,
        "sec_min": report.sec_min,
        "sec_max": report.sec_max,
        "ric_max": report.ric_max,
    }
    out.update(extra)
    return out


def bound_positive_sym(
    R: CurvatureTensor, p: int, strict_weak: str = "eq2.7", report=None
) -> BoundCheck:
    """lambda_min of the curvature term on S^p_0 against p(n+p-2)alpha (eq2.7)
    or p(n-1)alpha (eq2.9), with alpha the minimal sectional curvature."""
    if strict_weak not in POSITIVE_TAGS:
        raise ValueError(f"unknown bound tag {strict_weak!r}")
    report = _report(R, report)
    n, alpha = R.n, report.sec_min
    if strict_weak == "eq2.7":
        rhs = p * (n + p - 2) * alpha
        holds = report.verdicts["lemma1_strict"] or report.verdicts["double_pinch_strict"]
    else:
        rhs = p * (n - 1) * alpha
        holds = report.verdicts["lemma1_nonneg"] or report.verdicts["double_pinch_nonneg"]
    lam = weitz_matrix(R, SYM0, p).eigen()[0][0]
    return _check(strict_weak, rhs, lam, lam - rhs, holds, _inputs(R, p, SYM0, report, alpha=alpha))


def bound_negative_sym(R: CurvatureTensor, p: int, report=None) -> BoundCheck:
    """lambda_max on S^p_0 against -p(n+p-2)beta with beta = -sec_max."""
    report = _report(R, report)
    n, beta = R.n, -report.sec_max
    rhs = -p * (n + p - 2) * beta
    holds = report.verdicts["lemma2_nonneg"]
    lam = weitz_matrix(R, SYM0, p).eigen()[0][-1]
    return _check("eq3.1", rhs, lam, rhs - lam, holds, _inputs(R, p, SYM0, report, beta=beta))


def bound_form(R: CurvatureTensor, q: int, report=None) -> BoundCheck:
    """lambda_min on Lambda^q against q(n-q)alpha."""
    report = _report(R, report)
    n, alpha = R.n, report.sec_min
    rhs = q * (n - q) * alpha
    holds = report.verdicts["lemma1_strict"] or report.verdicts["double_pinch_strict"]
    lam = weitz_matrix(R, FORMS, q).eigen()[0][0]
    return _check("eq4.1", rhs, lam, lam - rhs, holds, _inputs(R, q, FORMS, report, alpha=alpha))


def eigen_bound_constants(n: int, degree: int, value: float, which: str) -> float:
    """Lower bound for nonzero eigenvalues: p(n+p-2)alpha, p(n+p-2)beta or q(n-q)alpha."""
    if value <= 0 or n < 2 or degree < 1:
        raise ValueError("expects n >= 2, degree >= 1 and a positive curvature constant")
    if which in ("thm3", "sec3-eigen"):
        return degree * (n + degree - 2) * value
    if which == "sec4-eigen":
        return degree * (n - degree) * value
    raise ValueError(f"unknown eigenvalue bound {which!r}")


# --- Einstein rigidity ------------------------------------------------------

RIGID = "rigid"
INCONCLUSIVE = "inconclusive"
NOT_EINSTEIN = "not_einstein"


@dataclass(frozen=True)
class RigidityReport:
    verdict: str
    scalar: float
    sec_min: float
    threshold: float
    einstein_defect: float
    second_kind_min: float

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "scalar": self.scalar,
            "sec_min": self.sec_min,
            "threshold_n2_alpha": self.threshold,
            "einstein_defect": self.einstein_defect,
            "second_kind_min": self.second_kind_min,
            "tolerances": {"einstein_rtol": EINSTEIN_RTOL, "strict_margin": STRICT_MARGIN},
        }


def rigidity_check(R: CurvatureTensor, report=None) -> RigidityReport:
    """Einstein rigidity criterion s < n^2 alpha, with lambda_min of the
    second-kind operator reported as the direct positivity witness."""
    report = _report(R, report)
    n = R.n
    s = scalar(R)
    defect = float(np.linalg.norm(ricci(R) - (s / n) * np.eye(n)))
    threshold = n * n * report.sec_min
    if defect > EINSTEIN_RTOL * max(1.0, abs(s)):
        verdict = NOT_EINSTEIN
    elif report.sec_min > STRICT_MARGIN and s < threshold - STRICT_MARGIN:
        verdict = RIGID
    else:
        verdict = INCONCLUSIVE
    return RigidityReport(verdict, s, report.sec_min, threshold, defect, report.second_kind_min)


# --- diagnostics for the auxiliary 2-tensors built from a q-form ------------


def printed_form_quadratic(R: CurvatureTensor, omega: TensorCoeffs) -> float:
    """q (Ric(w, w) - (q-1)/2 R_ijkl w^{ik..} w^{jl..}), full contractions.

    This is the coefficient as displayed for forms; it differs from
    :func:`q_form_value` (which uses (q-1) in place of (q-1)/2) except when
    q = 1.
    """
    q = omega.basis.degree
    w = omega.full()
    ric_term = _ricci_form_term(R, w, q)
    pair = _pair_form_term(R, w, q)
    return q * (ric_term - 0.5 * (q - 1) * pair)


def _ricci_form_term(R, w, q):
    # R_ij w^{i k2..kq} w^{j}_{k2..kq}
    return float(np.sum(np.tensordot(ricci(R), w, axes=([1], [0])) * w))


def _pair_form_term(R, w, q):
    # R_ijkl w^{ik k3..} w^{jl}_{k3..}
    if q < 2:
        return 0.0
    t = np.tensordot(R.array, w, axes=([0, 2], [0, 1]))  # (j, l, rest)
    return float(np.sum(t * w))


def form_auxiliary_diagnostic(R: CurvatureTensor, omega: TensorCoeffs) -> dict:
    """Evaluate the auxiliary traceless 2-tensors attached to a q-form.

    For each increasing multi-index I the tensor is
    ``sum_a (w_{I, slot a -> j} d_{k ia} + w_{I, slot a -> k} d_{j ia}) - (3q/n) d_jk w_I``.
    Reports its largest trace and both sides of the two contraction
    identities claimed for it.  Nothing here is asserted anywhere; the
    trace coefficient does not produce traceless tensors in general.
    """
    basis = omega.basis
    if basis.symmetry != ALTERNATING or basis.n != R.n:
        raise DimensionError("expected a form of matching dimension")
    n, q = basis.n, basis.degree
    w = omega.full()
    eye = np.eye(n)
    lhs1 = 0.0
    lhs2 = 0.0
    max_trace = 0.0
    for I in basis.tuples:
        phi = -(3.0 * q / n) * eye * w[I]
        for a, ia in enumerate(I):
            for j in range(n):
                idx = list(I)
                idx[a] = j
                val = w[tuple(idx)]
                phi[j, ia] += val
                phi[ia, j] += val
        max_trace = max(max_trace, abs(float(np.trace(phi))))
        lhs1 += float(np.einsum("ijkl,il,jk->", R.array, phi, phi))
        lhs2 += float(np.sum(phi * phi))
    norm_sq = float(np.sum(w * w))
    ric_term = _ricci_form_term(R, w, q)
    # R_ijkl w^{ij i3..} w^{kl}_{i3..}
    pair_ij = float(np.sum(np.tensordot(R.array, w, axes=([2, 3], [0, 1])) * w)) if q >= 2 else 0.0
    s = scalar(R)
    rhs1 = q * (2.0 * (n + 4 * q) / n * ric_term - 3.0 * (q - 1) * pair_ij - 4.0 * q / n**2 * s * norm_sq)
    rhs2 = 2.0 * q * (n + 2) * (n - q) / n * norm_sq
    return {
        "q": q,
        "n": n,
        "max_abs_trace": max_trace,
        "identity1_lhs": lhs1,
        "identity1_rhs": rhs1,
        "identity2_lhs": lhs2,
        "identity2_rhs": rhs2,
        "printed_Q_q": printed_form_quadratic(R, omega),
        "restricted_Q_q": q_form_value(R, omega),
    }
