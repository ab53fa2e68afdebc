"""Sectional / Ricci curvature extrema and the pinching verdicts.

Extrema of the sectional curvature are searched over orthonormal 2-frames
by multi-start projected gradient descent on the Stiefel manifold.  The
seeds are every coordinate plane plus ``budget`` random frames.  All starts
run together as one batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curvature import CurvatureTensor, ricci
from .tensor_core import sym_eigen

DEFAULT_BUDGET = 64
DEFAULT_TOL = 1e-10
STRICT_MARGIN = 1e-9
_MAX_ITER = 5000
_ARMIJO = 1e-4


def _jacobi_matrix(R: np.ndarray) -> np.ndarray:
    """R rearranged so that ``(y (x) y) @ M`` gives the operator x -> R(x, y, ., y)."""
    n = R.shape[0]
    # M[(j, l), (i, k)] = R[i, j, k, l]
    return np.ascontiguousarray(R.transpose(1, 3, 0, 2).reshape(n * n, n * n))


def _frames_value(jm: np.ndarray, F: np.ndarray) -> np.ndarray:
    n = F.shape[1]
    X, Y = F[:, :, 0], F[:, :, 1]
    jac = ((Y[:, :, None] * Y[:, None, :]).reshape(-1, n * n) @ jm).reshape(-1, n, n)
    return np.einsum("bi,bik,bk->b", X, jac, X)


def _frames_value_grad(jm: np.ndarray, F: np.ndarray):
    n = F.shape[1]
    X, Y = F[:, :, 0], F[:, :, 1]
    # R(x, y, x, y) is symmetric under x <-> y, so one kernel serves both
    jac_y = ((Y[:, :, None] * Y[:, None, :]).reshape(-1, n * n) @ jm).reshape(-1, n, n)
    jac_x = ((X[:, :, None] * X[:, None, :]).reshape(-1, n * n) @ jm).reshape(-1, n, n)
    gx = 2.0 * np.einsum("bik,bk->bi", jac_y, X)
    gy = 2.0 * np.einsum("bik,bk->bi", jac_x, Y)
    value = 0.5 * np.einsum("bi,bi->b", X, gx)
    return value, np.stack([gx, gy], axis=2)


def _retract(F: np.ndarray) -> np.ndarray:
    """Gram-Schmidt on the two columns (the Q factor with positive R diagonal)."""
    X = F[:, :, 0]
    X = X / np.linalg.norm(X, axis=1, keepdims=True)
    Y = F[:, :, 1] - np.einsum("bi,bi->b", X, F[:, :, 1])[:, None] * X
    Y = Y / np.linalg.norm(Y, axis=1, keepdims=True)
    return np.stack([X, Y], axis=2)


def _tangent(F: np.ndarray, G: np.ndarray) -> np.ndarray:
    sym = np.einsum("zia,zic->zac", F, G)
    sym = 0.5 * (sym + np.transpose(sym, (0, 2, 1)))
    return G - F @ sym


def _seed_frames(n: int, budget: int, seed: int) -> np.ndarray:
    frames = []
    eye = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            frames.append(np.stack([eye[i], eye[j]], axis=1))
    rng = np.random.default_rng(seed)
    rand = rng.standard_normal((budget, n, 2))
    frames = np.concatenate([np.array(frames), _retract(rand)], axis=0)
    return frames


def _descend(jm: np.ndarray, F: np.ndarray, sign: np.ndarray, tol: float, step0: float):
    """Minimize ``sign * sec`` for each frame in the batch; returns frames and sec values.

    Projected gradient with Armijo backtracking; each trial step starts from
    the Barzilai-Borwein estimate of the previous accepted move.
    """
    F = F.copy()
    value, grad = _frames_value_grad(jm, F)
    value = sign * value
    direction = -_tangent(F, sign[:, None, None] * grad)
    step = np.full(F.shape[0], step0)
    lo, hi = 1e-6 * step0, 1e4 * step0
    active = np.ones(F.shape[0], dtype=bool)
    for _ in range(_MAX_ITER):
        if not np.any(active):
            break
        idx = np.flatnonzero(active)
        d = direction[idx]
        dnorm_sq = np.einsum("bia,bia->b", d, d)
        done = np.sqrt(dnorm_sq) * step[idx] < tol
        trial = _retract(F[idx] + step[idx, None, None] * d)
        trial_value = sign[idx] * _frames_value(jm, trial)
        accept = trial_value <= value[idx] - _ARMIJO * step[idx] * dnorm_sq
        accept &= ~done
        acc = idx[accept]
        if acc.size:
            s = trial[accept] - F[acc]
            F[acc] = trial[accept]
            v, g = _frames_value_grad(jm, F[acc])
            value[acc] = sign[acc] * v
            new_dir = -_tangent(F[acc], sign[acc, None, None] * g)
            # y = grad_new - grad_old = direction_old - direction_new
            sy = np.einsum("bia,bia->b", s, direction[acc] - new_dir)
            ss = np.einsum("bia,bia->b", s, s)
            with np.errstate(divide="ignore", invalid="ignore"):
                bb = np.where(sy > 0, ss / sy, 2.0 * step[acc])
            step[acc] = np.clip(bb, lo, hi)
            direction[acc] = new_dir
        rej = idx[~accept & ~done]
        step[rej] *= 0.5
        # a step that can no longer move the frame counts as converged
        stuck = rej[step[rej] * np.sqrt(np.einsum("bia,bia->b", direction[rej], direction[rej])) < tol]
        active[idx[done]] = False
        active[stuck] = False
    return F, sign * value


@dataclass(frozen=True)
class SecExtrema:
    sec_min: float
    sec_max: float
    argmin_plane: np.ndarray
    argmax_plane: np.ndarray


def sec_extrema(
    R: CurvatureTensor, budget: int = DEFAULT_BUDGET, tol: float = DEFAULT_TOL, seed: int = 0
) -> SecExtrema:
    """Min and max sectional curvature with the orthonormal frames achieving them.

    The values are local optima certified by the returned planes; global
    optimality is not proven.  Planes are returned as (2, n) arrays.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    arr = R.array
    seeds = _seed_frames(R.n, budget, seed)
    count = seeds.shape[0]
    # minimization and maximization starts share one batch
    frames = np.concatenate([seeds, seeds])
    sign = np.concatenate([np.ones(count), -np.ones(count)])
    scale = max(float(np.max(np.abs(arr))), 1e-300)
    final, values = _descend(_jacobi_matrix(arr), frames, sign, tol, 0.1 / scale)
    lo_frames, lo_vals = final[:count], values[:count]
    hi_frames, hi_vals = final[count:], values[count:]
    i_lo = int(np.argmin(lo_vals))
    i_hi = int(np.argmax(hi_vals))
    return SecExtrema(
        float(lo_vals[i_lo]),
        float(hi_vals[i_hi]),
        lo_frames[i_lo].T.copy(),
        hi_frames[i_hi].T.copy(),
    )


def ricci_extrema(R: CurvatureTensor) -> tuple[float, float]:
    evals, _ = sym_eigen(ricci(R))
    return float(evals[0]), float(evals[-1])


def _lt(x: float, y: float) -> bool:
    return x <= y - STRICT_MARGIN


def _le(x: float, y: float) -> bool:
    return x <= y + STRICT_MARGIN


@dataclass(frozen=True)
class PinchingReport:
    n: int
    sec_min: float
    sec_max: float
    argmin_plane: np.ndarray
    argmax_plane: np.ndarray
    ric_min: float
    ric_max: float
    second_kind_min: float
    second_kind_max: float
    verdicts: dict
    margins: dict
    tolerances: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "sec_min": self.sec_min,
            "sec_max": self.sec_max,
            "argmin_plane": self.argmin_plane.tolist(),
            "argmax_plane": self.argmax_plane.tolist(),
            "ric_min": self.ric_min,
            "ric_max": self.ric_max,
            "second_kind_min": self.second_kind_min,
            "second_kind_max": self.second_kind_max,
            "verdicts": dict(self.verdicts),
            "margins": dict(self.margins),
            "tolerances": dict(self.tolerances),
            "citations": {
                "lemma1": "Lemma 1",
                "double_pinch": "Corollary 3 (double inequality)",
                "lemma2": "Lemma 2",
            },
        }


def verdicts_from_extrema(n: int, sec_min, sec_max, ric_max):
    """Verdict flags and their margins (positive margin = inequality holds)."""
    ratio = n / (n - 1)
    beta = -sec_max
    margins = {
        "sec_min_positive": sec_min,
        "lemma1_ric": n * sec_min - ric_max,
        "double_pinch": ratio * sec_min - sec_max,
        "sec_max_negative": -sec_max,
        "lemma2_lower": sec_min + ratio * beta,
    }
    positive = sec_min > STRICT_MARGIN
    negative = sec_max < -STRICT_MARGIN
    verdicts = {
        "lemma1_strict": positive and _lt(ric_max, n * sec_min),
        "lemma1_nonneg": positive and _le(ric_max, n * sec_min),
        "double_pinch_strict": positive and _lt(sec_max, ratio * sec_min),
        "double_pinch_nonneg": positive and _le(sec_max, ratio * sec_min),
        "lemma2_strict": negative and _lt(-ratio * beta, sec_min),
        "lemma2_nonneg": negative and _le(-ratio * beta, sec_min),
    }
    return verdicts, margins


def classify(
    R: CurvatureTensor, budget: int = DEFAULT_BUDGET, tol: float = DEFAULT_TOL, seed: int = 0
) -> PinchingReport:
    from .weitzenboeck import second_kind_matrix

    ext = sec_extrema(R, budget, tol, seed)
    ric_min, ric_max = ricci_extrema(R)
    sk = second_kind_matrix(R).eigen()[0]
    verdicts, margins = verdicts_from_extrema(R.n, ext.sec_min, ext.sec_max, ric_max)
    return PinchingReport(
        n=R.n,
        sec_min=ext.sec_min,
        sec_max=ext.sec_max,
        argmin_plane=ext.argmin_plane,
        argmax_plane=ext.argmax_plane,
        ric_min=ric_min,
        ric_max=ric_max,
        second_kind_min=float(sk[0]),
        second_kind_max=float(sk[-1]),
        verdicts=verdicts,
        margins=margins,
        tolerances={"strict_margin": STRICT_MARGIN, "optimizer_tol": tol, "restarts": budget, "seed": seed},
    )
