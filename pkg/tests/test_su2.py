import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ymhlab import su2 as alg

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
vec3 = arrays(np.float64, 3, elements=finite)
quat = arrays(np.float64, 4, elements=st.floats(-1, 1, allow_nan=False)).filter(
    lambda q: np.linalg.norm(q) > 1e-3).map(alg.qnormalize)


def quat_matrix(q):
    # 2x2 complex matrix of a quaternion w + xi + yj + zk
    w, x, y, z = q
    return np.array([[w + 1j * x, y + 1j * z], [-y + 1j * z, w - 1j * x]])


def test_basis_brackets():
    # [i, j] = ij - ji = 2k and cyclic
    assert np.allclose(alg.bracket(alg.I, alg.J), 2 * alg.K)
    assert np.allclose(alg.bracket(alg.J, alg.K), 2 * alg.I)
    assert np.allclose(alg.bracket(alg.K, alg.I), 2 * alg.J)


def test_bracket_is_quaternion_commutator():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(2, 3))
    qa, qb = alg.as_quaternion(a), alg.as_quaternion(b)
    comm = alg.qmul(qa, qb) - alg.qmul(qb, qa)
    assert abs(comm[0]) < 1e-14
    assert np.allclose(comm[1:], alg.bracket(a, b))


def test_qmul_matches_matrix_product():
    rng = np.random.default_rng(2)
    p, q = rng.normal(size=(2, 4))
    m = quat_matrix(p) @ quat_matrix(q)
    assert np.allclose(quat_matrix(alg.qmul(p, q)), m)


@given(vec3, vec3, vec3)
def test_jacobi(a, b, c):
    br = alg.bracket
    s = br(a, br(b, c)) + br(b, br(c, a)) + br(c, br(a, b))
    scale = 1 + np.linalg.norm(a) * np.linalg.norm(b) * np.linalg.norm(c)
    assert np.max(np.abs(s)) <= 1e-13 * scale


@given(vec3, vec3, vec3)
def test_bracket_invariance_of_inner(a, b, c):
    lhs = alg.inner(a, alg.bracket(b, c))
    rhs = alg.inner(alg.bracket(a, b), c)
    scale = 1 + np.linalg.norm(a) * np.linalg.norm(b) * np.linalg.norm(c)
    assert abs(lhs - rhs) <= 1e-13 * scale


@given(vec3, vec3)
def test_antisymmetry(a, b):
    assert np.array_equal(alg.bracket(a, b), -alg.bracket(b, a))


@given(quat, vec3)
def test_adjoint_is_conjugation(g, a):
    direct = alg.qmul(alg.qmul(alg.qconj(g), alg.as_quaternion(a)), g)
    assert np.allclose(alg.adjoint(g, a), direct[1:], atol=1e-12 * (1 + np.linalg.norm(a)))


@given(quat, vec3, vec3)
def test_adjoint_preserves_bracket_and_norm(g, a, b):
    tol = 1e-11 * (1 + np.linalg.norm(a) * np.linalg.norm(b))
    assert np.allclose(alg.adjoint(g, alg.bracket(a, b)),
                       alg.bracket(alg.adjoint(g, a), alg.adjoint(g, b)), atol=tol)
    assert np.isclose(np.linalg.norm(alg.adjoint(g, a)), np.linalg.norm(a), atol=1e-12 * (1 + np.linalg.norm(a)))


@given(arrays(np.float64, 3, elements=st.floats(-3, 3, allow_nan=False)))
def test_exp_log_roundtrip(a):
    if np.linalg.norm(a) >= np.pi - 1e-6:
        return
    q = alg.exp_map(a)
    assert alg.is_unit(q)
    assert np.allclose(alg.log_map(q), a, atol=1e-10)


def test_exp_small_angle_series():
    a = np.array([1e-10, -2e-10, 3e-10])
    q = alg.exp_map(a)
    assert np.allclose(q[1:], a, rtol=1e-12)
    assert q[0] == pytest.approx(1.0)


@given(vec3, vec3)
def test_transverse_longitudinal_split(e, b):
    if np.linalg.norm(e) < 1e-3:
        return
    e = e / np.linalg.norm(e)
    t = alg.transverse_project(e, b)
    lng = alg.longitudinal_project(e, b)
    assert np.allclose(t + lng, b, atol=1e-12 * (1 + np.linalg.norm(b)))
    assert abs(alg.inner(t, e)) <= 1e-11 * (1 + np.linalg.norm(b))
    # the bracket form of the transverse part
    assert np.allclose(t, -0.25 * alg.bracket(e, alg.bracket(e, b)), atol=1e-11 * (1 + np.linalg.norm(b)))


def test_transverse_project_needs_unit_direction():
    with pytest.raises(ValueError):
        alg.transverse_project(np.array([2.0, 0, 0]), np.ones(3))


def test_broadcasting_shapes():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(4, 5, 3))
    b = rng.normal(size=(3,))
    assert alg.bracket(a, b).shape == (4, 5, 3)
    g = alg.random_gauge(rng, (4, 5))
    assert alg.adjoint(g, a).shape == (4, 5, 3)
    assert alg.qmul(g, alg.qconj(g)).shape == (4, 5, 4)
    assert np.allclose(alg.qmul(g, alg.qconj(g)), alg.IDENTITY)


@settings(max_examples=50)
@given(quat, quat)
def test_qmul_associative_and_unit(p, q):
    r = alg.qnormalize(p + q + np.array([0.3, 0, 0, 0]))
    assert np.allclose(alg.qmul(alg.qmul(p, q), r), alg.qmul(p, alg.qmul(q, r)), atol=1e-12)
    assert alg.is_unit(alg.qmul(p, q), tol=1e-12)
