import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from ymhlab import dec, energies, gauge, hopf
from ymhlab import experiments as ex
from ymhlab.dec import Cochain, CubicalComplex

s3pt = arrays(np.float64, 4, elements=st.floats(-1, 1, allow_nan=False)).filter(
    lambda w: np.linalg.norm(w) > 1e-2).map(lambda w: w / np.linalg.norm(w))


def smooth_lift_field(cx):
    return hopf.S3Field(cx, dec.masked(cx.vertex_mask, ex.smooth_s3(cx.vertex_pos)))


def test_hopf_map_poles_and_rejection():
    assert np.allclose(hopf.hopf_map(np.array([1.0, 0, 0, 0])), [0, 0, 1])
    assert np.allclose(hopf.hopf_map(np.array([0, 0, 1.0, 0])), [0, 0, -1])
    with pytest.raises(ValueError):
        hopf.hopf_map(np.array([2.0, 0, 0, 0]))
    with pytest.raises(ValueError):
        hopf.hopf_map(np.array([1.0, 0, 0]))


@given(s3pt, st.floats(-np.pi, np.pi))
def test_hopf_map_unit_and_fibre_invariant(w, t):
    v = hopf.hopf_map(w)
    assert abs(np.linalg.norm(v) - 1) < 1e-12
    assert np.allclose(hopf.hopf_map(hopf.phase_rotate(w, t)), v, atol=1e-12)
    # the fibre direction is tangent and in the kernel of the differential
    f = hopf.fibre_direction(w)
    assert abs(np.dot(f, w)) < 1e-12 and abs(hopf.contact_form(w, f) - 1) < 1e-12
    assert np.allclose(hopf.hopf_jacobian(w) @ f, 0.0, atol=1e-12)


def test_hopf_jacobian_matches_finite_differences():
    rng = np.random.default_rng(0)
    w = rng.normal(size=4)
    w /= np.linalg.norm(w)
    J = hopf.hopf_jacobian(w)
    t = 1e-6
    for k in range(4):
        e = np.zeros(4)
        e[k] = t
        # the polynomial formula extends off the sphere
        f = lambda x: np.array([2 * (x[0] * x[2] + x[1] * x[3]), 2 * (x[0] * x[3] - x[1] * x[2]),
                                x[0] ** 2 + x[1] ** 2 - x[2] ** 2 - x[3] ** 2])
        assert np.allclose((f(w + e) - f(w - e)) / (2 * t), J[:, k], atol=1e-8)


def test_gradient_norm_is_two_root_two():
    rng = np.random.default_rng(1)
    w = rng.normal(size=(5000, 4))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    assert np.max(np.abs(hopf.hopf_gradient_norm(w) - 2 * np.sqrt(2))) < 1e-10


@given(arrays(np.float64, 3, elements=st.floats(-1, 1, allow_nan=False)).filter(lambda v: np.linalg.norm(v) > 1e-2))
def test_preimage_is_a_section(v):
    v = v / np.linalg.norm(v)
    w = hopf.preimage(v)
    assert abs(np.linalg.norm(w) - 1) < 1e-12
    assert np.allclose(hopf.hopf_map(w), v, atol=1e-10)


def test_alpha_pullback_constant_and_bound():
    c = CubicalComplex(8)
    w = np.zeros(c.vertex_pos.shape[:-1] + (4,))
    w[c.vertex_mask] = [0.6, 0, 0.8, 0]
    assert np.max(np.abs(hopf.alpha_pullback(hopf.S3Field(c, w)).data)) == 0.0
    S = smooth_lift_field(c)
    a = hopf.alpha_pullback(S).data
    dw = np.linalg.norm(dec.d0(c, S.data), axis=-1)
    assert np.all(np.abs(a) <= dw + 1e-14)


def test_dalpha_is_half_pullback():
    errs = []
    for n in (8, 16):
        c = CubicalComplex(n)
        S = smooth_lift_field(c)
        da = dec.d1(c, hopf.alpha_pullback_array(c, S.data))
        P = gauge.pullback_area_array(c, S.project().data)
        errs.append(np.max(np.abs(da - 0.5 * P)[c.face_mask]))
    assert errs[1] < 0.6 * errs[0]


def test_s3field_requires_unit():
    c = CubicalComplex(4)
    w = np.zeros(c.vertex_pos.shape[:-1] + (4,))
    w[c.vertex_mask] = [1.0, 0, 0, 1e-5]
    with pytest.raises(ValueError):
        hopf.S3Field(c, w)


def test_constant_lift():
    c = CubicalComplex(8)
    u = np.zeros(c.vertex_pos.shape)
    u[c.vertex_mask] = [0.0, 0.6, 0.8]
    lift = hopf.hopf_lift(Cochain(c, 0, u), c.zeros(1))
    vals = lift.data[c.vertex_mask]
    assert np.allclose(vals, vals[0], atol=1e-12)
    assert lift.cycle_defect < 1e-12


def test_lift_roundtrip_and_compatibility():
    c = CubicalComplex(12)
    u = smooth_lift_field(c).project()
    eta = hopf.compatible_eta(u)
    assert np.max(np.abs(dec.d1(c, eta) - gauge.pullback_area_array(c, u.data))) < 1e-9
    lift = hopf.hopf_lift(u, eta)
    assert np.max(np.abs(lift.project().data - u.data)) < 1e-8
    # check(u)* alpha = eta / 2 up to O(h)
    a = hopf.alpha_pullback_array(c, lift.data)
    assert np.max(np.abs(a - 0.5 * eta)[c.edge_mask]) < 2 * c.h * (1 + np.max(np.abs(eta)))


def test_lift_phase_gauge_and_determinism():
    c = CubicalComplex(8)
    u = smooth_lift_field(c).project()
    eta = hopf.compatible_eta(u)
    a = hopf.hopf_lift(u, eta)
    b = hopf.hopf_lift(u, eta)
    assert np.array_equal(a.data, b.data)
    rot = hopf.S3Field(c, dec.masked(c.vertex_mask, hopf.phase_rotate(a.data, 0.7)))
    assert hopf.s3_dirichlet(rot) == pytest.approx(hopf.s3_dirichlet(a), rel=1e-12)
    assert np.allclose(rot.project().data, a.project().data, atol=1e-12)
    assert hopf.root_vertex(c) == hopf.root_vertex(c)


def test_lift_energy_identity_order():
    errs = []
    for n in (8, 16):
        c = CubicalComplex(n)
        u = smooth_lift_field(c).project()
        eta = hopf.compatible_eta(u)
        errs.append(abs(hopf.lift_energy_defect(u, eta, hopf.hopf_lift(u, eta))))
    assert ex.order(errs, (8, 16)) >= 0.9


def test_rtau_of_compatible_pair_is_half_lift_dirichlet():
    vals = []
    for n in (8, 16):
        c = CubicalComplex(n)
        u = smooth_lift_field(c).project()
        eta = hopf.compatible_eta(u)
        lift = hopf.hopf_lift(u, eta)
        R = [energies.rtau_energy(u, eta, t).total for t in (0.01, 1.0, 100.0)]
        assert max(R) - min(R) <= 1e-10 * R[0]
        vals.append(abs(R[0] - hopf.s3_dirichlet(lift)) / R[0])
    assert vals[1] < 0.6 * vals[0]


def test_non_liftable_pair():
    c = CubicalComplex(8)
    u = Cochain(c, 0, oracles.unit(c, ex.smooth_unit(c.vertex_pos)))
    with pytest.raises(hopf.NonLiftablePair, match="non-liftable"):
        hopf.hopf_lift(u, dec.masked(c.edge_mask, 5.0 * np.random.default_rng(0).normal(size=c.zeros(1).shape)))


def test_boundary_degree_examples():
    c = CubicalComplex(12)
    nb = int(c.boundary_mask.sum())
    assert hopf.boundary_degree(c, np.tile([0, 0, 1.0], (nb, 1))) == 0
    normal = c.boundary_normal[c.boundary_mask]
    assert hopf.boundary_degree(c, normal) == 1
    assert hopf.boundary_degree(c, -normal) == -1
    with pytest.raises(ValueError):
        hopf.boundary_degree(c, 2 * normal)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_boundary_degree_stable_under_perturbation(seed):
    c = CubicalComplex(12)
    rng = np.random.default_rng(seed)
    normal = c.boundary_normal[c.boundary_mask]
    p = normal + 0.05 * rng.normal(size=normal.shape)
    p /= np.linalg.norm(p, axis=-1, keepdims=True)
    assert hopf.boundary_degree(c, p) == 1


def test_unresolved_boundary_degree(monkeypatch):
    c = CubicalComplex(8)
    normal = c.boundary_normal[c.boundary_mask]
    monkeypatch.setattr(hopf, "boundary_flux", lambda cx, u: 0.5 * 4 * np.pi)
    with pytest.raises(hopf.UnresolvedBoundaryDegree):
        hopf.boundary_degree(c, normal)
