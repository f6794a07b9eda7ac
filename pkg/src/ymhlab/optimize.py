"""Descent for the CYMH and R_tau energies and related projections.

Gradients are the exact gradients of the discrete energies (hand-written
adjoints of every stencil); they carry the ``h^3`` cell weight, so dividing
by ``h^3`` gives the discrete Euler-Lagrange density.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import splu

from . import dec
from . import gauge
from . import hopf
from . import su2 as alg
from .energies import Params, cymh_parts, potential_coefficient

log = logging.getLogger(__name__)

MODES = ("cymh", "rtau")


@dataclass(frozen=True)
class Schedule:
    max_iter: int = 50_000
    gtol: float = 1e-6  # relative to the initial gradient norm
    atol: float = 0.0  # absolute floor on the (volume-weighted) gradient norm
    initial_step: float = 1e-2
    backtrack: float = 0.5
    armijo: float = 1e-4
    min_step: float = 1e-16
    max_step: float = 1e6
    time_limit: float | None = None

    def __post_init__(self):
        if self.max_iter < 0 or self.gtol < 0 or self.atol < 0 or self.initial_step <= 0:
            raise ValueError("schedule values must be positive")
        if not 0.0 < self.backtrack < 1.0 or not 0.0 < self.armijo < 1.0:
            raise ValueError("backtracking factor and Armijo constant must lie in (0, 1)")


@dataclass
class MinimizeTrace:
    records: list = field(default_factory=list)  # (iter, energy, gradnorm, step, residual)
    reason: str = ""

    COLUMNS = ("iter", "energy", "gradnorm", "step", "residual")

    def add(self, it, energy, gradnorm, step, residual):
        self.records.append((int(it), float(energy), float(gradnorm), float(step), float(residual)))

    @property
    def energies(self):
        return np.array([r[1] for r in self.records])

    @property
    def iterations(self) -> int:
        return self.records[-1][0] if self.records else 0

    @property
    def final_residual(self) -> float:
        return self.records[-1][4] if self.records else float("nan")

    @property
    def initial_residual(self) -> float:
        return self.records[0][4] if self.records else float("nan")


# -- energies and gradients on raw arrays ---------------------------------------------

def cymh_value(cx, u, A, p: Params) -> float:
    D, F, s = cymh_parts(cx, u, A)
    h3 = cx.h**3
    return float(h3 * (0.5 * np.sum(A * A) + p.mu / (2 * p.eps) * np.sum(D * D)
                       + p.mu * p.eps / 2 * np.sum(F * F) + potential_coefficient(p) * np.sum(s * s)))


def cymh_gradient(cx, u, A, p: Params):
    D, F, s = cymh_parts(cx, u, A)
    h3 = cx.h**3
    cD = p.mu / (2 * p.eps)
    cF = p.mu * p.eps / 2
    ub = dec.v2e(cx, u)
    Aa, Ab = dec.e2f(cx, A)
    gF = dec.d1T(cx, F) + dec.e2fT(cx, alg.bracket(Ab, F), -alg.bracket(Aa, F))
    gA = h3 * (A + 2 * cD * alg.bracket(ub, D) + 2 * cF * gF)
    gu = h3 * (2 * cD * (dec.d0T(cx, D) + dec.v2eT(cx, alg.bracket(D, A)))
               - 4 * potential_coefficient(p) * s[..., None] * u)
    gu = dec.masked(cx.interior_mask, gu)
    return gu, dec.masked(cx.edge_mask, gA)


def rtau_value(cx, u, eta, tau) -> float:
    du = dec.d0(cx, u)
    G = dec.d1(cx, eta) - gauge.pullback_area_array(cx, u)
    return float(0.125 * cx.h**3 * (np.sum(du * du) + np.sum(eta * eta) + tau * np.sum(G * G)))


def rtau_gradient(cx, u, eta, tau, project=True):
    h3 = cx.h**3
    du = dec.d0(cx, u)
    G = dec.d1(cx, eta) - gauge.pullback_area_array(cx, u)
    gu = 0.25 * h3 * (dec.d0T(cx, du) - tau * gauge.pullback_area_vjp(cx, u, G))
    if project:
        gu = gu - alg.inner(gu, u)[..., None] * u
    gu = dec.masked(cx.interior_mask, gu)
    ge = 0.25 * h3 * (eta + tau * dec.d1T(cx, G))
    return gu, dec.masked(cx.edge_mask, ge)


def _require_eta(cfg):
    if cfg.eta is None:
        return cfg.complex.zeros(1)
    return cfg.eta


def energy_value(cfg: gauge.FieldConfig, p: Params, mode: str) -> float:
    cx = cfg.complex
    if mode == "cymh":
        return cymh_value(cx, cfg.u, cfg.A, p)
    if mode == "rtau":
        return rtau_value(cx, cfg.u, _require_eta(cfg), p.tau)
    raise ValueError(f"unknown mode {mode!r}")


def energy_gradient(cfg: gauge.FieldConfig, p: Params, mode: str = "cymh") -> dict:
    """Gradient blocks ``{"u": ..., "A": ...}`` (cymh) or ``{"u": ..., "eta": ...}`` (rtau).

    The u-block vanishes on boundary vertices; in rtau mode it is tangent to S^2.
    """
    cx = cfg.complex
    if mode == "cymh":
        gu, gA = cymh_gradient(cx, cfg.u, cfg.A, p)
        return {"u": gu, "A": gA}
    if mode == "rtau":
        gauge.require_unit(cx, cfg.u)
        gu, ge = rtau_gradient(cx, cfg.u, _require_eta(cfg), p.tau)
        return {"u": gu, "eta": ge}
    raise ValueError(f"unknown mode {mode!r}")


# -- generic projected descent ---------------------------------------------------------

def _dot(xs, ys):
    return float(sum(np.sum(x * y) for x, y in zip(xs, ys)))


def _normalize_u(cx, u):
    n = np.linalg.norm(u, axis=-1, keepdims=True)
    out = np.where(n > 0, u / np.where(n > 0, n, 1.0), 0.0)
    return dec.masked(cx.vertex_mask, out)


def descend(x0, value, gradient, retract, sched: Schedule, weight=1.0, residual=None):
    """Projected gradient descent with a Barzilai-Borwein trial step and Armijo backtracking.

    ``x0`` is a list of arrays; ``gradient`` returns a list of the same shapes.
    Steps are taken along ``-g / weight``.  Returns ``(x, trace)``.
    """
    t0 = time.perf_counter()
    trace = MinimizeTrace()
    x = [np.array(a, dtype=float) for a in x0]
    E = value(x)
    g = gradient(x)
    gn = np.sqrt(_dot(g, g)) / weight
    tol = max(sched.gtol * gn, sched.atol)
    res = residual(x, g) if residual else gn
    trace.add(0, E, gn, 0.0, res)
    step = sched.initial_step
    prev = None
    it = 0
    if gn == 0.0 or gn <= tol:
        trace.reason = "converged"
        return x, trace
    while True:
        if it >= sched.max_iter:
            trace.reason = "max_iter"
            break
        if sched.time_limit is not None and time.perf_counter() - t0 > sched.time_limit:
            trace.reason = "time_limit"
            break
        d = [gi / weight for gi in g]
        if prev is not None:
            sx = [a - b for a, b in zip(x, prev[0])]
            sg = [a - b for a, b in zip(d, prev[1])]
            ss, sy = _dot(sx, sx), _dot(sx, sg)
            if sy > 0 and ss > 0:
                # alternate the two BB lengths
                yy = _dot(sg, sg)
                step = ss / sy if it % 2 else sy / yy
                step = min(max(step, sched.min_step * 1e3), sched.max_step)
        slope = _dot(g, d)
        t = step
        accepted = False
        while t >= sched.min_step:
            xn = retract([a - t * b for a, b in zip(x, d)])
            En = value(xn)
            if En <= E - sched.armijo * t * slope and np.isfinite(En):
                accepted = True
                break
            t *= sched.backtrack
        if not accepted:
            trace.reason = "line_search_underflow"
            break
        it += 1
        prev = (x, d)
        x, E = xn, En
        g = gradient(x)
        gn = np.sqrt(_dot(g, g)) / weight
        res = residual(x, g) if residual else gn
        trace.add(it, E, gn, t, res)
        step = t
        if gn <= tol:
            trace.reason = "converged"
            break
    return x, trace


def minimize(cfg0: gauge.FieldConfig, p: Params, mode: str = "cymh", sched: Schedule | None = None):
    """Minimize CYMH over ``(u, A)`` or R_tau over ``(u, eta)`` with fixed boundary ``u``."""
    sched = sched or Schedule()
    cx = cfg0.complex
    h3 = cx.h**3
    cfg = cfg0.with_boundary()
    interior = cx.interior_mask

    def res_fn(x, g):
        return float(np.sqrt(sum(np.sum(gi * gi) for gi in g) / h3))

    if mode == "cymh":
        value = lambda x: cymh_value(cx, x[0], x[1], p)
        grad = lambda x: list(cymh_gradient(cx, x[0], x[1], p))
        retract = lambda x: x
        x0 = [cfg.u, cfg.A]
    elif mode == "rtau":
        cfg.u = _normalize_u(cx, cfg.u)
        eta = _require_eta(cfg)
        value = lambda x: rtau_value(cx, x[0], x[1], p.tau)
        grad = lambda x: list(rtau_gradient(cx, x[0], x[1], p.tau))
        retract = lambda x: [_normalize_u(cx, x[0]), x[1]]
        x0 = [cfg.u, eta]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    x, trace = descend(x0, value, grad, retract, sched, weight=h3, residual=res_fn)
    out = cfg.copy()
    out.u = x[0]
    out.u[cx.boundary_mask] = cfg.phi
    if mode == "cymh":
        out.A = x[1]
    else:
        out.eta = x[1]
        out.A = gauge.connection_from_eta(out.u_form, out.eta).data
    assert interior.shape == out.u.shape[:-1]
    return out, trace


# -- residuals ------------------------------------------------------------------------

def _l2(cx, a, mask=None):
    if mask is not None:
        a = dec.masked(mask, a)
    return float(np.sqrt(np.sum(a * a) * cx.h**3))


def el_residual(cfg: gauge.FieldConfig, p: Params, mode: str = "cymh") -> dict:
    """L2 norms of the discrete field equations.

    cymh: ``higgs`` (d_A^* d_A u - lam u (1 - |u|^2) / eps^2, interior vertices),
    ``connection`` (eps d_A^* F + [u, d_A u] / eps + A / mu), ``coulomb`` (d^* A)
    and ``boundary`` (tangential trace of *F).  rtau: ``map`` (tangential
    u-equation), ``eta`` (eta - tau d^* G), ``london`` (tau d d^* G + G - u*omega),
    ``closed`` (dG) and ``boundary`` (tangential trace of *G), with G = u*omega - d eta.
    """
    cx = cfg.complex
    h3 = cx.h**3
    im = cx.interior_mask
    out = {}
    if mode == "cymh":
        gu, gA = cymh_gradient(cx, cfg.u, cfg.A, p)
        scale_u = p.mu / p.eps if p.mu > 0 else 1.0
        out["higgs"] = _l2(cx, gu / (h3 * scale_u), im)
        out["connection"] = _l2(cx, gA / (h3 * p.mu)) if p.mu > 0 else _l2(cx, cfg.A)
        out["coulomb"] = _l2(cx, dec.d0T(cx, cfg.A), im)
        F = gauge.curvature_array(cx, cfg.A)
        tr = dec.boundary_trace(dec.hodge(dec.Cochain(cx, 2, F)))
        out["boundary"] = float(np.sqrt(np.sum(tr.values**2) * cx.h**2))
    elif mode == "rtau":
        eta = _require_eta(cfg)
        gu, _ = rtau_gradient(cx, cfg.u, eta, p.tau)
        G = gauge.pullback_area_array(cx, cfg.u) - dec.d1(cx, eta)
        dsG = dec.d1T(cx, G)
        out["map"] = _l2(cx, gu / h3, im)
        out["eta"] = _l2(cx, eta - p.tau * dsG)
        out["london"] = _l2(cx, p.tau * dec.d1(cx, dsG) + G - gauge.pullback_area_array(cx, cfg.u))
        out["closed"] = _l2(cx, dec.d2(cx, G), cx.inner_cell_mask)
        tr = dec.boundary_trace(dec.hodge(dec.Cochain(cx, 2, G)))
        out["boundary"] = float(np.sqrt(np.sum(tr.values**2) * cx.h**2))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    out["total"] = float(np.sqrt(sum(v * v for k, v in out.items() if k not in ("boundary", "closed", "coulomb"))))
    return out


# -- Coulomb projection -------------------------------------------------------------------

@dataclass
class CoulombInfo:
    status: str
    iterations: int
    dstar_before: float
    dstar_after: float
    mass_before: float
    mass_after: float


def _dirichlet_laplacian(cx):
    D0 = cx.sparse_d(0)
    idx = np.flatnonzero(cx.interior_mask[cx.vertex_mask])
    D = D0[:, idx]
    return (D.T @ D).tocsc(), idx


def coulomb_project(cfg: gauge.FieldConfig, tol: float = 1e-10, max_iter: int = 200, return_info=False):
    """Gauge descent on ``(1/2) |A^g|^2`` with ``g = 1`` on the boundary.

    Each step is ``g <- g exp(t w)`` with ``w = -L^{-1} d^* A^g`` (``L`` the
    Dirichlet Laplacian of the vertex graph) and Armijo backtracking on ``t``.
    ``tol`` is an absolute threshold on the interior L2 norm of ``d^* A^g``.
    """
    cx = cfg.complex
    im = cx.interior_mask
    L, idx = _dirichlet_laplacian(cx)
    lu = splu(L)
    g = gauge.identity_gauge(cx)
    cur = cfg
    J = 0.5 * dec.l2_array(cx, cur.A)
    J0 = J
    r = dec.d0T(cx, cur.A)
    ds0 = _l2(cx, r, im)
    ds = ds0
    status = "converged"
    it = 0
    vm = cx.vertex_mask
    while ds > tol:
        if it >= max_iter:
            status = "max_iter"
            break
        rv = r[vm][idx] / cx.h**0  # raw coefficients
        w = np.zeros(r.shape)
        wv = np.zeros((vm.sum(), 3))
        wv[idx] = -lu.solve(rv)
        w[vm] = wv
        gr = np.sum(r * w) * cx.h**3  # directional derivative of J
        if gr >= 0:
            status = "stalled"
            break
        t = 1.0
        ok = False
        while t > 1e-12:
            gn = alg.qnormalize(alg.qmul(g, alg.exp_map(t * w)))
            trial = gauge.gauge_transform(cfg, gn)
            Jn = 0.5 * dec.l2_array(cx, trial.A)
            if Jn <= J + 1e-4 * t * gr:
                ok = True
                break
            t *= 0.5
        if not ok:
            status = "stalled"
            break
        it += 1
        g, cur, J = gn, trial, Jn
        r = dec.d0T(cx, cur.A)
        ds = _l2(cx, r, im)
    if status != "converged":
        log.warning("coulomb_project %s at |d*A| = %.3e", status, ds)
    cur.phi = cfg.phi.copy()
    info = CoulombInfo(status, it, ds0, ds, 2 * J0, 2 * J)
    if return_info:
        return g, cur, info
    return g, cur


# -- harmonic extension ------------------------------------------------------------------

@dataclass
class HarmonicExtension:
    u: dec.Cochain
    energy: float  # int |grad u|^2 over the ball
    radial_energy: float  # the same for the radial extension on the grid
    tangential_energy: float  # int_{S^2} |grad_T phi|^2 by quadrature
    trace: MinimizeTrace

    @property
    def ratio(self) -> float:
        if self.tangential_energy <= 1e-14:
            return 0.0
        return self.energy / self.tangential_energy


def _tangent_frame(x):
    a = np.where(np.abs(x[..., :1]) < 0.9, np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    t1 = a - np.sum(a * x, -1, keepdims=True) * x
    t1 /= np.linalg.norm(t1, axis=-1, keepdims=True)
    return t1, np.cross(x, t1)


def sphere_quadrature(n_theta: int = 48, n_phi: int = 96):
    """Gauss-Legendre in ``cos theta`` times the trapezoid rule in azimuth."""
    c, wc = np.polynomial.legendre.leggauss(n_theta)
    ph = 2 * np.pi * np.arange(n_phi) / n_phi
    s = np.sqrt(1 - c * c)
    X = np.stack([s[:, None] * np.cos(ph)[None], s[:, None] * np.sin(ph)[None],
                  np.repeat(c[:, None], n_phi, 1)], -1).reshape(-1, 3)
    W = np.repeat(wc, n_phi) * (2 * np.pi / n_phi)
    return X, W


def tangential_energy(func, n_theta=48, n_phi=96, delta=1e-5) -> float:
    """``int_{S^2} |grad_T phi|^2`` for a callable on the sphere (central differences along geodesics)."""
    X, W = sphere_quadrature(n_theta, n_phi)
    tot = np.zeros(len(X))
    for t in _tangent_frame(X):
        xp = np.cos(delta) * X + np.sin(delta) * t
        xm = np.cos(delta) * X - np.sin(delta) * t
        dv = (func(xp) - func(xm)) / (2 * delta)
        tot += np.sum(dv * dv, -1)
    return float(np.sum(W * tot))


def dirichlet_descent(cx, u0, sched: Schedule):
    """Unit-constrained Dirichlet minimization with ``u`` fixed on boundary vertices."""
    h3 = cx.h**3
    im = cx.interior_mask

    def value(x):
        du = dec.d0(cx, x[0])
        return 0.5 * h3 * float(np.sum(du * du))

    def grad(x):
        g = h3 * dec.d0T(cx, dec.d0(cx, x[0]))
        g = g - alg.inner(g, x[0])[..., None] * x[0]
        return [dec.masked(im, g)]

    x, tr = descend([u0], value, grad, lambda x: [_normalize_u(cx, x[0])], sched, weight=h3)
    return x[0], tr


def harmonic_extension(cx, data, sched: Schedule | None = None, strict=True) -> HarmonicExtension:
    """Minimal-energy unit extension of boundary data and its epiperimetric ratio.

    ``data`` is a callable on the sphere (e.g. a :class:`BoundaryData`); the
    ratio is ``int_B |grad u|^2 / int_{S^2} |grad_T phi|^2`` with the
    denominator computed by spherical quadrature of the callable.
    """
    from .boundary import radial_extension

    sched = sched or Schedule(max_iter=20_000, gtol=1e-5)
    X = cx.vertex_pos
    u0 = dec.masked(cx.vertex_mask, radial_extension(data, X))
    u0[cx.boundary_mask] = data(cx.boundary_normal[cx.boundary_mask])
    u0 = _normalize_u(cx, u0)
    du0 = dec.d0(cx, u0)
    e_rad = float(np.sum(du0 * du0) * cx.h**3)
    u, tr = dirichlet_descent(cx, u0, sched)
    du = dec.d0(cx, u)
    e = float(np.sum(du * du) * cx.h**3)
    T = tangential_energy(data)
    if strict and tr.reason not in ("converged",) and tr.records[-1][2] > 1e-3 * max(tr.records[0][2], 1e-300):
        raise RuntimeError(f"harmonic extension did not converge: gradient norm {tr.records[-1][2]:.3e}")
    return HarmonicExtension(dec.Cochain(cx, 0, u), e, e_rad, T, tr)


# -- S^3 extensions with fibre boundary conditions ----------------------------------------

@dataclass
class HopfReference:
    lift: "hopf.S3Field"
    u: dec.Cochain
    eta: np.ndarray
    energy: float
    trace: MinimizeTrace


def _fibre_project(w, base):
    # closest point of the fibre great circle through ``base``
    a = alg.inner(w, base)
    b = alg.inner(w, hopf.fibre_direction(base))
    r = np.sqrt(a * a + b * b)
    r = np.where(r > 0, r, 1.0)
    return (a / r)[..., None] * base + (b / r)[..., None] * hopf.fibre_direction(base)


def hopf_reference(cx, phi, u0=None, sched: Schedule | None = None) -> HopfReference:
    """Minimize ``(1/2) int |dg|^2`` over S^3 fields with ``h(g) = phi`` on the boundary.

    Interior vertices move on S^3, boundary vertices along their fibres.  The
    result carries the projected pair ``(h(g), eta)`` with ``eta`` the
    least-norm solution of ``d eta = h(g)* omega``.
    """
    sched = sched or Schedule(max_iter=20_000, gtol=1e-6)
    h3 = cx.h**3
    vm = cx.vertex_mask
    bm = cx.boundary_mask
    if u0 is None:
        u0 = np.zeros(cx.vertex_pos.shape)
        u0[vm] = np.array([0.0, 0.0, 1.0])
    u0 = np.array(u0, dtype=float)
    u0[bm] = phi
    g0 = np.zeros(vm.shape + (4,))
    g0[vm] = hopf.preimage(u0[vm])
    base = g0[bm].copy()

    def value(x):
        dg = dec.d0(cx, x[0])
        return 0.5 * h3 * float(np.sum(dg * dg))

    def grad(x):
        w = x[0]
        g = h3 * dec.d0T(cx, dec.d0(cx, w))
        g = g - alg.inner(g, w)[..., None] * w
        gb = g[bm]
        f = hopf.fibre_direction(w[bm])
        g[bm] = alg.inner(gb, f)[..., None] * f
        return [dec.masked(vm, g)]

    def retract(x):
        w = x[0]
        n = np.linalg.norm(w, axis=-1, keepdims=True)
        w = np.where(n > 0, w / np.where(n > 0, n, 1.0), 0.0)
        w[bm] = _fibre_project(w[bm], base)
        return [dec.masked(vm, w)]

    x, tr = descend([g0], value, grad, retract, sched, weight=h3)
    w = x[0]
    lift = hopf.S3Field(cx, w)
    u = lift.project()
    u.data[bm] = phi
    eta = hopf.compatible_eta(u)
    return HopfReference(lift, u, eta, value(x), tr)
