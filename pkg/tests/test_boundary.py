import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ymhlab import boundary as bdry
from ymhlab import hopf
from ymhlab.dec import CubicalComplex


@pytest.fixture(scope="module")
def cx():
    return CubicalComplex(12)


def sphere_points(n=500, seed=0):
    x = np.random.default_rng(seed).normal(size=(n, 3))
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def test_constant(cx):
    d = bdry.generate_boundary_data("constant", cx)
    assert np.array_equal(d.sample(cx), np.tile([0.0, 0.0, 1.0], (int(cx.boundary_mask.sum()), 1)))
    assert d.params == {"value": (0.0, 0.0, 1.0)}


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_equatorial_wrap_degree_zero(cx, k):
    d = bdry.generate_boundary_data("equatorial_wrap", cx, k=k)
    v = d(sphere_points())
    # the image lies in the equator
    assert np.allclose(v[:, 2], 0.0) and np.allclose(np.linalg.norm(v, axis=-1), 1.0)
    assert hopf.boundary_degree(cx, d.sample(cx)) == 0


@pytest.mark.parametrize("a", [0.3, 0.6, 0.9])
def test_dipole_trace_degree_zero(cx, a):
    d = bdry.generate_boundary_data("dipole_trace", cx, a=a)
    assert np.allclose(np.linalg.norm(d(sphere_points()), axis=-1), 1.0)
    assert hopf.boundary_degree(cx, d.sample(cx)) == 0


def test_dipole_field_points_away_from_positive_pole():
    f = bdry.dipole_field(0.3)
    # on the axis above the +1 source the field points up; below the -1 source it points up too
    assert np.allclose(f(np.array([0.0, 0.0, 0.8])), [0, 0, 1])
    assert np.allclose(f(np.array([0.0, 0.0, -0.8])), [0, 0, 1])
    # between the poles it points from + to -
    assert np.allclose(f(np.array([0.0, 0.0, 0.0])), [0, 0, -1])


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 0.95), st.integers(1, 3))
def test_random_smooth(seed, amp, band):
    d = bdry.random_smooth(seed=seed, bandlimit=band, amplitude=amp)
    x = sphere_points(2000, seed)
    v = d(x)
    assert np.allclose(np.linalg.norm(v, axis=-1), 1.0)
    # amplitude below one keeps the field in the open upper hemisphere around e3
    assert np.all(v[:, 2] > 0.0)
    assert np.array_equal(d(x), bdry.random_smooth(seed=seed, bandlimit=band, amplitude=amp)(x))


def test_random_smooth_degree_and_errors(cx):
    d = bdry.generate_boundary_data("random_smooth", cx, seed=4, amplitude=0.8)
    assert hopf.boundary_degree(cx, d.sample(cx)) == 0
    with pytest.raises(ValueError):
        bdry.random_smooth(amplitude=1.0)
    with pytest.raises(ValueError):
        bdry.dipole_trace(1.2)


def test_unknown_name_and_nonzero_degree(cx, monkeypatch):
    with pytest.raises(ValueError, match="unknown boundary data"):
        bdry.generate_boundary_data("hedgehog", cx)
    monkeypatch.setattr(bdry.hopf, "boundary_degree", lambda c, phi: 1)
    with pytest.raises(ValueError, match="degree 1"):
        bdry.generate_boundary_data("constant", cx)
    # without a complex the degree gate is skipped
    assert bdry.generate_boundary_data("constant").name == "constant"


def test_extension_carries_trace(cx):
    for name, kw in (("dipole_trace", {"a": 0.3}), ("random_smooth", {"seed": 1}), ("constant", {})):
        d = bdry.generate_boundary_data(name, cx, **kw)
        u = d.extend(cx)
        assert np.array_equal(u[cx.boundary_mask], d.sample(cx))
        assert np.allclose(np.linalg.norm(u[cx.vertex_mask], axis=-1), 1.0)
        assert np.all(u[~cx.vertex_mask] == 0.0)


def test_radial_extension_is_zero_homogeneous():
    f = bdry.random_smooth(seed=2).func
    x = sphere_points(50)
    assert np.allclose(bdry.radial_extension(f, 0.3 * x), f(x))
    assert np.allclose(bdry.radial_extension(f, np.zeros((1, 3))), f(np.array([[0.0, 0.0, 1.0]])))
