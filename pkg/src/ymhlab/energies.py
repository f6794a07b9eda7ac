"""Energy functionals and the density-ratio diagnostic."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from . import dec
from . import gauge
from . import su2 as alg
from .dec import Cochain


@dataclass(frozen=True)
class Params:
    eps: float = 1.0
    lam: float = 1.0
    mu: float = 1.0
    tau: float = 1.0

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.lam < 0 or self.mu < 0:
            raise ValueError("lam and mu must be nonnegative")


def potential_coefficient(p: Params) -> float:
    # mu * lam / (2 eps^3) times the 1/2 in front of the Higgs Lagrangian
    return p.lam * p.mu / (4.0 * p.eps**3)


@dataclass(frozen=True)
class EnergyReport:
    mode: str = "cymh"
    term_A: float = 0.0
    term_cov: float = 0.0
    term_curv: float = 0.0
    term_pot: float = 0.0
    term_du: float = 0.0
    term_eta: float = 0.0
    term_defect: float = 0.0

    @property
    def total(self) -> float:
        return (self.term_A + self.term_cov + self.term_curv + self.term_pot
                + self.term_du + self.term_eta + self.term_defect)

    @property
    def ymh(self) -> float:
        """Gauge-invariant part (everything except the mass term)."""
        return self.term_cov + self.term_curv + self.term_pot

    def as_row(self) -> dict:
        row = asdict(self)
        row["total"] = self.total
        return row

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)] + ["total"]


def _norm2(cx, a):
    return dec.l2_array(cx, a)


def cymh_parts(cx, u, A):
    """Dense intermediate fields shared by the energy and its gradient."""
    D = gauge.cov_derivative_array(cx, u, A)
    F = gauge.curvature_array(cx, A)
    s = 1.0 - alg.norm2(u)
    s = dec.masked(cx.vertex_mask, s)
    return D, F, s


def cymh_energy(cfg: gauge.FieldConfig, p: Params) -> EnergyReport:
    cx = cfg.complex
    D, F, s = cymh_parts(cx, cfg.u, cfg.A)
    return EnergyReport(
        mode="cymh",
        term_A=0.5 * _norm2(cx, cfg.A),
        term_cov=p.mu / (2.0 * p.eps) * _norm2(cx, D),
        term_curv=p.mu * p.eps / 2.0 * _norm2(cx, F),
        term_pot=potential_coefficient(p) * float(np.sum(s * s) * cx.h**3),
    )


def _arr(x):
    return x.data if isinstance(x, Cochain) else np.asarray(x, dtype=float)


def london_field(cx, u, eta):
    """``dη - u*ω`` on faces."""
    return dec.d1(cx, eta) - gauge.pullback_area_array(cx, u)


def rtau_energy(u, eta, tau: float) -> EnergyReport:
    """``(1/8) [ |du|^2 + |eta|^2 + tau |d eta - u*omega|^2 ]`` over the ball."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    cx = u.complex
    ud = _arr(u)
    ed = _arr(eta)
    gauge.require_unit(cx, ud)
    G = london_field(cx, ud, ed)
    return EnergyReport(
        mode="rtau",
        term_du=0.125 * _norm2(cx, dec.d0(cx, ud)),
        term_eta=0.125 * _norm2(cx, ed),
        term_defect=0.125 * tau * _norm2(cx, G),
    )


def rtau_via_connection(u, eta, tau: float) -> float:
    """``(1/2) [ |A(u, eta)|^2 + tau |F_A(u, eta)|^2 ]``, the connection form of R_tau."""
    cx = u.complex
    A = gauge.connection_from_eta(u, eta).data
    F = gauge.curvature_array(cx, A)
    return 0.5 * (_norm2(cx, A) + tau * _norm2(cx, F))


def dirichlet_energy(u) -> float:
    cx = u.complex
    return 0.5 * _norm2(cx, dec.d0(cx, _arr(u)))


def fadeev_energy(u, p: Params) -> float:
    """CYMH value of ``(u, A_ref(u))`` for unit ``u`` in closed form.

    ``F_{A_ref} = -[du ^ du] / 8`` so the value is
    ``(1/8) |du|^2 + (mu eps / 128) |[du ^ du]|^2``.
    """
    cx = u.complex
    ud = _arr(u)
    du = dec.d0(cx, ud)
    W = dec.wedge11_array(cx, du, du, "bracket")
    return 0.125 * _norm2(cx, du) + p.mu * p.eps / 128.0 * _norm2(cx, W)


@dataclass(frozen=True)
class RelaxedEnergy:
    dirichlet: float
    L: float
    charges: int

    @property
    def relaxed(self) -> float:
        """``E(u) + 4 pi L``."""
        return self.dirichlet + 4.0 * np.pi * self.L

    @property
    def scaled(self) -> float:
        """``(1/8) |du|^2 + pi L``, the limit normalization of the eps sweep."""
        return 0.25 * self.dirichlet + np.pi * self.L


def bcl_relaxed_energy(u, phi=None, method: str = "matching", lenient: bool = False) -> RelaxedEnergy:
    """Dirichlet energy plus the minimal connection of the singularities of ``u``.

    ``lenient`` merges fractional cell degrees into clusters and lets
    unbalanced charges discharge through the sphere (used on computed
    minimizers whose cores sit on the lattice or near the boundary layer).
    """
    from . import charges

    cx = u.complex
    gauge.require_unit(cx, _arr(u))
    E = dirichlet_energy(u)
    cs = charges.locate_charges(u, merge_fractional=lenient)
    if method == "matching":
        L = charges.minimal_connection_matching(cs, boundary_sink=lenient)
    elif method == "lp":
        L = charges.minimal_connection_dual_lp(u, phi)
    else:
        raise ValueError(f"unknown method {method!r}")
    return RelaxedEnergy(E, L, len(cs))


def density_ratio(cfg: gauge.FieldConfig, p: Params, x0, r: float) -> float:
    """Scaled local energy ``(1/2r) * int_{B_r(x0)} e_r`` used for monotonicity.

    The density is ``|A|^2 + mu |d_A u|^2 / eps + 3 lam mu (1 - |u|^2)^2 / (2 eps^3)
    + (2r / |x - x0| - 1) mu eps |F_A|^2``, each term summed over the elements
    (edges, vertices, faces) whose centers fall in the ball.
    """
    cx = cfg.complex
    x0 = np.asarray(x0, dtype=float)
    if r < 2 * cx.h:
        raise ValueError(f"radius {r} below 2h = {2 * cx.h}")
    if np.linalg.norm(x0) + r > 1.0 + 1e-12:
        raise ValueError("ball B_r(x0) is not contained in the unit ball")
    D, F, s = cymh_parts(cx, cfg.u, cfg.A)
    h3 = cx.h**3

    def inside(k):
        dist = np.linalg.norm(cx.centers(k) - x0, axis=-1)
        return (dist < r) & cx.mask(k), dist

    em, _ = inside(1)
    vm, _ = inside(0)
    fm, fd = inside(2)
    wgt = 2.0 * r / np.maximum(fd, 0.5 * cx.h) - 1.0
    tot = np.sum(alg.norm2(cfg.A)[em]) + p.mu / p.eps * np.sum(alg.norm2(D)[em])
    tot += 1.5 * p.lam * p.mu / p.eps**3 * np.sum((s * s)[vm])
    tot += p.mu * p.eps * np.sum((wgt * alg.norm2(F))[fm])
    return float(tot * h3 / (2.0 * r))
