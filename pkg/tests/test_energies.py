import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ymhlab import dec, energies, gauge, hopf
from ymhlab import experiments as ex
from ymhlab.dec import Cochain, CubicalComplex
from ymhlab.energies import EnergyReport, Params


@pytest.fixture(scope="module")
def cx():
    return CubicalComplex(16)


def unit_const(cx):
    u = np.zeros(cx.vertex_pos.shape)
    u[..., 2] = 1.0
    return dec.masked(cx.vertex_mask, u)


def smooth_cfg(cx, seed=0):
    rng = np.random.default_rng(seed)
    u = dec.masked(cx.vertex_mask, ex.smooth_unit(cx.vertex_pos) * (1 + 0.1 * rng.normal(size=cx.vertex_pos.shape[:-1] + (1,))))
    return gauge.FieldConfig(cx, u, ex.smooth_connection(cx))


def test_params_validation():
    with pytest.raises(ValueError):
        Params(eps=0)
    with pytest.raises(ValueError):
        Params(tau=-1)
    with pytest.raises(ValueError):
        Params(lam=-1)
    assert energies.potential_coefficient(Params(eps=0.5, lam=2, mu=3)) == pytest.approx(2 * 3 / (4 * 0.125))


def test_cymh_zero_for_constant_unit(cx):
    cfg = gauge.FieldConfig(cx, unit_const(cx), cx.zeros(1, (3,)))
    assert energies.cymh_energy(cfg, Params()).total == 0.0


def test_cymh_potential_only(cx):
    cfg = gauge.FieldConfig(cx, cx.zeros(0, (3,)), cx.zeros(1, (3,)), phi=np.tile([0, 0, 1.0], (int(cx.boundary_mask.sum()), 1)))
    rep = energies.cymh_energy(cfg, Params(eps=1, lam=1, mu=1))
    assert rep.term_A == rep.term_cov == rep.term_curv == 0.0
    # the vertex Riemann sum of 1/4 over the ball
    assert rep.term_pot == pytest.approx(0.25 * cx.vertex_mask.sum() * cx.h**3)
    assert abs(rep.term_pot - np.pi / 3) < 0.25 * 4 * np.pi * cx.h


def test_cymh_report_terms_and_columns(cx):
    rep = energies.cymh_energy(smooth_cfg(cx), Params(eps=0.3, lam=2, mu=1.5))
    vals = [rep.term_A, rep.term_cov, rep.term_curv, rep.term_pot]
    assert all(v >= 0 for v in vals)
    assert abs(rep.total - sum(vals)) <= 1e-12 * rep.total
    row = rep.as_row()
    assert list(row) == EnergyReport.columns()
    assert row["total"] == rep.total


def test_fadeev_closed_form_matches_cymh():
    # the consistent coefficient 1/128 reproduces CYMH(u, A_ref) up to the discretization
    errs = []
    for n in (8, 16):
        c = CubicalComplex(n)
        u = Cochain(c, 0, dec.masked(c.vertex_mask, ex.smooth_unit(c.vertex_pos)))
        p = Params(eps=0.5, lam=1.0, mu=1.0)
        cy = energies.cymh_energy(gauge.FieldConfig(c, u.data, gauge.reference_connection(u).data), p).total
        errs.append(abs(cy - energies.fadeev_energy(u, p)) / cy)
    assert errs[-1] < 0.01


def test_rtau_trivial_and_faddeev_skyrme(cx):
    z = cx.zeros(1)
    uc = Cochain(cx, 0, unit_const(cx))
    assert energies.rtau_energy(uc, z, 3.0).total == 0.0
    u = Cochain(cx, 0, dec.masked(cx.vertex_mask, ex.smooth_unit(cx.vertex_pos)))
    tau = 2.5
    rep = energies.rtau_energy(u, z, tau)
    P = gauge.pullback_area_array(cx, u.data)
    fs = 0.125 * dec.l2_array(cx, dec.d0(cx, u.data)) + 0.125 * tau * dec.l2_array(cx, P)
    assert rep.total == pytest.approx(fs, rel=1e-12)
    with pytest.raises(ValueError):
        energies.rtau_energy(u, z, 0.0)
    with pytest.raises(ValueError):
        energies.rtau_energy(Cochain(cx, 0, 2 * u.data), z, 1.0)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.01, 100), st.floats(0.01, 100))
def test_rtau_monotone_in_tau(t1, t2):
    c = CubicalComplex(8)
    u = Cochain(c, 0, dec.masked(c.vertex_mask, ex.smooth_unit(c.vertex_pos)))
    eta = ex.smooth_eta(c)
    lo, hi = sorted((t1, t2))
    assert energies.rtau_energy(u, eta, lo).total <= energies.rtau_energy(u, eta, hi).total


def test_rtau_tau_independent_for_compatible_pair(cx):
    u = hopf.S3Field(cx, dec.masked(cx.vertex_mask, ex.smooth_s3(cx.vertex_pos))).project()
    eta = hopf.compatible_eta(u)
    R = [energies.rtau_energy(u, eta, t).total for t in (0.01, 1.0, 1e2)]
    assert max(R) - min(R) <= 1e-10 * R[0]


def test_rtau_connection_form_consistency():
    errs = []
    for n in (8, 16):
        c = CubicalComplex(n)
        u = Cochain(c, 0, dec.masked(c.vertex_mask, ex.smooth_unit(c.vertex_pos)))
        eta = ex.smooth_eta(c)
        a = energies.rtau_energy(u, eta, 1.0).total
        b = energies.rtau_via_connection(u, eta, 1.0)
        errs.append(abs(a - b))
    assert errs[1] < 0.6 * errs[0]


def test_dirichlet_energy_examples(cx):
    assert energies.dirichlet_energy(Cochain(cx, 0, unit_const(cx))) == 0.0
    X = cx.vertex_pos
    u = dec.masked(cx.vertex_mask, np.stack([np.sin(X[..., 0]), np.cos(X[..., 0]), 0 * X[..., 0]], -1))
    E = energies.dirichlet_energy(Cochain(cx, 0, u))
    assert abs(E - 0.5 * 4 * np.pi / 3) < 4 * cx.h
    assert energies.dirichlet_energy(Cochain(cx, 0, 3 * u)) == pytest.approx(9 * E)


def test_gauge_invariance_of_ymh_part():
    errs = [ex.resolution_errors(n)["ymh_invariance"] for n in (8, 16)]
    assert errs[1] < 0.6 * errs[0]


def test_relaxed_energy_smooth_and_dipole():
    c = CubicalComplex(16)
    u = Cochain(c, 0, dec.masked(c.vertex_mask, ex.smooth_unit(c.vertex_pos)))
    rel = energies.bcl_relaxed_energy(u)
    assert rel.L == 0.0 and rel.charges == 0
    assert rel.relaxed == pytest.approx(energies.dirichlet_energy(u))
    d = Cochain(c, 0, ex.dipole_map(c, 0.3))
    rd = energies.bcl_relaxed_energy(d)
    assert rd.charges == 2
    assert abs(rd.L - 0.6) <= 2 * c.h
    assert rd.relaxed >= rd.dirichlet
    assert rd.scaled == pytest.approx(0.25 * rd.dirichlet + np.pi * rd.L)
    assert energies.bcl_relaxed_energy(d, method="lp").L == pytest.approx(rd.L, abs=2 * c.h)
    with pytest.raises(ValueError):
        energies.bcl_relaxed_energy(d, method="nope")


def test_density_ratio_constant_density(cx):
    cfg = gauge.FieldConfig(cx, cx.zeros(0, (3,)), cx.zeros(1, (3,)), phi=np.tile([0, 0, 1.0], (int(cx.boundary_mask.sum()), 1)))
    p = Params(1, 1, 1)
    for r in (0.4, 0.6, 0.8):
        # density 3/2 per unit volume: (3/2)(4 pi r^3 / 3) / (2r) = pi r^2
        assert energies.density_ratio(cfg, p, (0, 0, 0), r) == pytest.approx(np.pi * r**2, rel=3 * cx.h / r)


def test_density_ratio_zero_and_errors(cx):
    cfg = gauge.FieldConfig(cx, unit_const(cx), cx.zeros(1, (3,)))
    p = Params()
    assert energies.density_ratio(cfg, p, (0, 0, 0), 0.5) == 0.0
    with pytest.raises(ValueError):
        energies.density_ratio(cfg, p, (0, 0, 0), cx.h)
    with pytest.raises(ValueError):
        energies.density_ratio(cfg, p, (0.6, 0, 0), 0.5)


def test_density_ratio_translation_invariance():
    c = CubicalComplex(16)
    rng = np.random.default_rng(1)
    u = dec.masked(c.vertex_mask, rng.normal(size=c.zeros(0, (3,)).shape))
    A = dec.masked(c.edge_mask, rng.normal(size=c.zeros(1, (3,)).shape))
    # shift by whole cells inside a region away from the boundary
    shift = 2
    u2 = np.roll(u, shift, axis=0)
    A2 = np.roll(A, shift, axis=1)
    p = Params(0.5, 1, 1)
    x0 = np.array([-0.25, 0.0, 0.0])
    r = 0.3
    a = energies.density_ratio(gauge.FieldConfig(c, u, A, phi=u[c.boundary_mask]), p, x0, r)
    b = energies.density_ratio(gauge.FieldConfig(c, dec.masked(c.vertex_mask, u2), dec.masked(c.edge_mask, A2),
                                                  phi=u2[c.boundary_mask]), p, x0 + shift * c.h * np.array([1, 0, 0]), r)
    assert a == pytest.approx(b, rel=1e-12)
