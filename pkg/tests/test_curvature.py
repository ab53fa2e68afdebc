import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weitzlab.curvature import (
    CurvatureFormatError,
    CurvatureTensor,
    canonical_quadruples,
    constant_curvature,
    dumps,
    fubini_study,
    loads,
    product_space,
    random_curvature,
    ricci,
    scalar,
    sectional,
    validate,
)
from weitzlab.errors import DegeneratePlaneError, DimensionError


def _filled_1212(n=3):
    a = np.zeros((n, n, n, n))
    for i, j, k, l, s in [(0, 1, 0, 1, 1), (1, 0, 1, 0, 1), (0, 1, 1, 0, -1), (1, 0, 0, 1, -1)]:
        a[i, j, k, l] = s
    return a


# --- validate ------------------------------------------------------------------


def test_validate_constant_is_exact():
    rep = validate(constant_curvature(3, 1.0))
    assert rep.passed
    assert rep.antisymmetry == rep.pair_symmetry == rep.bianchi == 0.0


def test_validate_all_images_filled():
    assert validate(CurvatureTensor.from_array(_filled_1212())).passed


def test_validate_wrong_sign_image():
    a = np.zeros((3, 3, 3, 3))
    a[0, 1, 0, 1] = 1.0
    a[1, 0, 0, 1] = 1.0
    rep = validate(CurvatureTensor.from_array(a))
    assert rep.antisymmetry == pytest.approx(2.0)
    assert not rep.passed


def test_canonical_quadruple_count():
    # n^2 (n^2 - 1) / 12 independent components before Bianchi is imposed... plus the Bianchi ones
    for n in (2, 3, 4, 5):
        m = n * (n - 1) // 2
        assert len(canonical_quadruples(n)) == m * (m + 1) // 2


# --- models --------------------------------------------------------------------


def test_constant_curvature_examples():
    R = constant_curvature(3, 1.0)
    rng = np.random.default_rng(1)
    for _ in range(10):
        x, y = rng.standard_normal((2, 3))
        assert sectional(R, x, y) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(ricci(constant_curvature(4, 1.0)), 3 * np.eye(4))
    assert scalar(constant_curvature(4, -1.0)) == pytest.approx(-12.0)


def test_constant_curvature_entries():
    kappa = 0.7
    R = constant_curvature(4, kappa)
    d = np.eye(4)
    expect = kappa * (np.einsum("ik,jl->ijkl", d, d) - np.einsum("il,jk->ijkl", d, d))
    assert np.array_equal(R.array, expect)


def test_product_examples():
    R = product_space([(2, 1.0), (2, 1.0)])
    e = np.eye(4)
    assert sectional(R, e[0], e[2]) == 0.0
    assert sectional(R, e[0], e[1]) == pytest.approx(1.0)
    assert scalar(R) == pytest.approx(4.0)
    assert np.allclose(ricci(R), np.eye(4))


def test_product_ricci_is_direct_sum():
    factors = [(2, 1.5), (3, -0.5), (2, 2.0)]
    R = product_space(factors)
    blocks = [(n - 1) * k * np.ones(n) for n, k in factors]
    assert np.max(np.abs(ricci(R) - np.diag(np.concatenate(blocks)))) <= 1e-12
    assert abs(scalar(R) - sum(n * (n - 1) * k for n, k in factors)) <= 1e-12


def test_product_rejects_bad_factors():
    with pytest.raises(DimensionError):
        product_space([(2, 1.0)])
    with pytest.raises(DimensionError):
        product_space([(1, 1.0), (2, 1.0)])


def test_fubini_study_contractions():
    R = fubini_study(2)
    # direct contraction loop oracle
    ric = np.zeros((4, 4))
    for k in range(4):
        for l in range(4):
            ric[k, l] = sum(R.array[i, k, i, l] for i in range(4))
    assert np.allclose(ric, 6 * np.eye(4), atol=1e-12)
    assert np.allclose(ricci(R), ric, atol=1e-12)
    assert scalar(R) == pytest.approx(24.0)


def test_fubini_study_holomorphic_planes():
    R = fubini_study(3)
    e = np.eye(6)
    # some plane X, JX has sec 4 and some orthogonal non-complex plane has sec 1
    secs = [sectional(R, e[i], e[j]) for i in range(6) for j in range(i + 1, 6)]
    assert max(secs) == pytest.approx(4.0)
    assert min(secs) == pytest.approx(1.0)


def test_fubini_study_requires_m2():
    with pytest.raises(DimensionError):
        fubini_study(1)


@pytest.mark.parametrize(
    "R",
    [
        constant_curvature(2, 3.0),
        constant_curvature(5, -2.0),
        product_space([(2, 1.0), (3, -1.0)]),
        fubini_study(2),
        fubini_study(3),
        random_curvature(4, 1),
        random_curvature(5, 2, constant_curvature(5, 1.0), 0.3),
    ],
)
def test_generators_validate(R):
    assert validate(R, 1e-10).passed


# --- random_curvature -------------------------------------------------------------


def test_random_eps_zero_returns_base():
    base = constant_curvature(3, 1.0)
    R = random_curvature(3, 9, base, 0.0)
    assert np.array_equal(R.canonical, base.canonical)
    assert np.array_equal(R.array, base.array)


def test_random_deterministic():
    a = random_curvature(4, 123)
    b = random_curvature(4, 123)
    c = random_curvature(4, 124)
    assert np.array_equal(a.canonical, b.canonical)
    assert not np.array_equal(a.canonical, c.canonical)


def test_random_perturbation_validates():
    R = random_curvature(4, 5, constant_curvature(4, 1.0), 0.01)
    rep = validate(R)
    assert rep.max_residual <= 1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10**6), st.floats(0.0, 2.0))
def test_random_always_valid(n, seed, eps):
    R = random_curvature(n, seed, constant_curvature(n, 1.0), eps)
    assert validate(R).passed


# --- contractions -----------------------------------------------------------------


def test_ricci_matches_loop():
    R = random_curvature(4, 77)
    a = R.array
    ric = np.zeros((4, 4))
    for k in range(4):
        for l in range(4):
            for i in range(4):
                ric[k, l] += a[i, k, i, l]
    assert np.allclose(ricci(R), ric, atol=1e-14)
    assert scalar(R) == pytest.approx(np.trace(ric))


def test_sectional_examples():
    R = constant_curvature(3, -0.4)
    assert sectional(R, [2, 0, 0], [1, 1, 0]) == pytest.approx(-0.4)
    with pytest.raises(DegeneratePlaneError):
        sectional(R, [1, 2, 3], [2, 4, 6])


def test_sectional_basis_invariance():
    rng = np.random.default_rng(42)
    for trial in range(200):
        n = int(rng.integers(2, 6))
        R = random_curvature(n, trial)
        x, y = rng.standard_normal((2, n))
        g = rng.standard_normal((2, 2))
        while abs(np.linalg.det(g)) < 0.1:
            g = rng.standard_normal((2, 2))
        x2 = g[0, 0] * x + g[0, 1] * y
        y2 = g[1, 0] * x + g[1, 1] * y
        s1, s2 = sectional(R, x, y), sectional(R, x2, y2)
        assert abs(s1 - s2) <= 1e-10 * max(1.0, abs(s1))


def test_tensor_is_readonly_and_addition():
    R = constant_curvature(3, 1.0)
    with pytest.raises(ValueError):
        R.array[0, 1, 0, 1] = 5.0
    S = R + constant_curvature(3, 1.0).scaled(-1.0)
    assert np.all(S.array == 0)


# --- JSON ---------------------------------------------------------------------------


@pytest.mark.parametrize("R", [fubini_study(2), random_curvature(3, 4), constant_curvature(4, 1.0)])
def test_json_round_trip(R):
    text = dumps(R)
    data = json.loads(text)
    assert all(c["i"] >= 1 for c in data["components"])
    back = loads(text)
    assert np.array_equal(back.array, R.array)
    assert validate(back).passed


def test_json_lists_only_canonical():
    data = json.loads(dumps(constant_curvature(3, 1.0)))
    # 3 diagonal planes, each with one canonical entry
    assert len(data["components"]) == 3
    for c in data["components"]:
        assert c["i"] < c["j"] and c["k"] < c["l"]


def test_json_malformed():
    for text in ("not json", '{"n": 3}', '{"n": "x", "components": []}',
                 '{"n": 3, "components": [{"i": 1, "j": 2, "k": 1}]}',
                 '{"n": 3, "components": [{"i": 1, "j": 9, "k": 1, "l": 2, "value": 1}]}'):
        with pytest.raises(CurvatureFormatError):
            loads(text)


def test_json_corrupted_fails_validation():
    data = json.loads(dumps(constant_curvature(3, 1.0)))
    # breaks Bianchi: a lone R_1213 entry has no balancing partners
    data["components"].append({"i": 1, "j": 2, "k": 1, "l": 3, "value": 0.5})
    data["components"].append({"i": 1, "j": 3, "k": 2, "l": 3, "value": 0.5})
    R = loads(json.dumps(data))
    assert validate(R).passed  # these are still valid symmetric entries
    data["components"].append({"i": 1, "j": 1, "k": 2, "l": 3, "value": 1.0})
    assert not validate(loads(json.dumps(data))).passed
