"""Covariant calculus for su(2) connections on the ball complex."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import dec
from . import su2 as alg
from .dec import Cochain, CubicalComplex, masked


# -- configurations --------------------------------------------------------------

@dataclass
class FieldConfig:
    """State ``(u, A, eta)`` with boundary data ``phi``.

    ``u`` is a dense su(2) 0-form ``(N, N, N, 3)``, ``A`` a dense su(2) 1-form
    ``(3, N, N, N, 3)``, ``eta`` a real 1-form ``(3, N, N, N)`` or ``None``, and
    ``phi`` holds one unit vector per boundary vertex (boundary-mask order).
    """

    complex: CubicalComplex
    u: np.ndarray
    A: np.ndarray
    eta: np.ndarray | None = None
    phi: np.ndarray | None = None

    def __post_init__(self):
        cx = self.complex
        if self.phi is None:
            self.phi = self.u[cx.boundary_mask].copy()
        if self.phi.shape != (int(cx.boundary_mask.sum()), 3):
            raise ValueError("phi must carry one su(2) value per boundary vertex")

    def copy(self):
        return FieldConfig(self.complex, self.u.copy(), self.A.copy(),
                           None if self.eta is None else self.eta.copy(), self.phi.copy())

    def with_boundary(self):
        """Copy with ``u`` set to ``phi`` on boundary vertices."""
        out = self.copy()
        out.u[self.complex.boundary_mask] = self.phi
        return out

    @property
    def u_form(self) -> Cochain:
        return Cochain(self.complex, 0, self.u)

    @property
    def A_form(self) -> Cochain:
        return Cochain(self.complex, 1, self.A)

    @property
    def eta_form(self) -> Cochain | None:
        return None if self.eta is None else Cochain(self.complex, 1, self.eta)

    def boundary_error(self) -> float:
        d = self.u[self.complex.boundary_mask] - self.phi
        return float(np.max(np.abs(d))) if d.size else 0.0


def make_config(cx, u, A=None, eta=None, phi=None) -> FieldConfig:
    u = masked(cx.vertex_mask, np.asarray(u, dtype=float))
    A = cx.zeros(1, (3,)) if A is None else masked(cx.edge_mask, np.asarray(A, dtype=float))
    if eta is not None:
        eta = masked(cx.edge_mask, np.asarray(eta, dtype=float))
    return FieldConfig(cx, u, A, eta, phi)


def _data(x):
    return x.data if isinstance(x, Cochain) else np.asarray(x, dtype=float)


def _cx(*xs):
    for x in xs:
        if isinstance(x, Cochain):
            return x.complex
    raise TypeError("pass Cochain arguments or an explicit complex")


def require_unit(cx, u, tol=alg.UNIT_TOL, what="u"):
    vals = u[cx.vertex_mask]
    if vals.size and np.max(np.abs(np.linalg.norm(vals, axis=-1) - 1.0)) > tol:
        raise ValueError(f"{what} must have unit length at every active vertex")


# -- edge averages -----------------------------------------------------------------

def edge_average(cx, u, normalize=False):
    """Mean of the endpoint values per edge, optionally renormalized to unit length."""
    ub = dec.v2e(cx, u)
    if normalize:
        nrm = np.linalg.norm(ub, axis=-1, keepdims=True)
        ub = np.where(nrm > 0, ub / np.where(nrm > 0, nrm, 1.0), 0.0)
    return ub


# -- covariant derivative and curvature ------------------------------------------------

def cov_derivative_array(cx, u, A, normalize=False):
    return dec.d0(cx, u) + alg.bracket(A, edge_average(cx, u, normalize))


def covariant_derivative(u, A, normalize: bool = False) -> Cochain:
    """``d_A u = du + [A, u_avg]``; ``normalize`` uses the unit edge average."""
    cx = _cx(u, A)
    return Cochain(cx, 1, cov_derivative_array(cx, _data(u), _data(A), normalize))


def curvature_array(cx, A):
    return dec.d1(cx, A) + 0.5 * dec.wedge11_array(cx, A, A, "bracket")


def curvature(A) -> Cochain:
    """``F_A = dA + [A ^ A] / 2``."""
    cx = _cx(A)
    return Cochain(cx, 2, curvature_array(cx, _data(A)))


def cov_exterior_1(cx, A, B):
    """``d_A B = dB + [A ^ B]`` for an su(2) 1-form ``B``."""
    return dec.d1(cx, B) + dec.wedge11_array(cx, A, B, "bracket")


# -- reference connections ------------------------------------------------------------

def reference_connection(u) -> Cochain:
    """``A_ref = -[u_avg, du] / 4`` per edge (unit edge average)."""
    cx = _cx(u)
    ud = _data(u)
    require_unit(cx, ud)
    e = edge_average(cx, ud, normalize=True)
    return Cochain(cx, 1, -0.25 * alg.bracket(e, dec.d0(cx, ud)))


def connection_from_eta(u, eta) -> Cochain:
    """``A(u, eta) = -[u_avg, du] / 4 + eta u_avg / 2`` per edge."""
    cx = _cx(u)
    ud = _data(u)
    require_unit(cx, ud)
    e = edge_average(cx, ud, normalize=True)
    A = -0.25 * alg.bracket(e, dec.d0(cx, ud)) + 0.5 * _data(eta)[..., None] * e
    return Cochain(cx, 1, masked(cx.edge_mask, A))


# -- pulled-back area form -------------------------------------------------------------

def _triangle_area(a, b, c):
    num = alg.inner(a, np.cross(b, c))
    den = 1.0 + alg.inner(a, b) + alg.inner(b, c) + alg.inner(c, a)
    return 2.0 * np.arctan2(num, den)


def face_corners(cx, u):
    """Corner values of every face, counterclockwise in the face's own orientation."""
    out = []
    for c in range(3):
        c1, c2 = (c + 1) % 3, (c + 2) % 3
        v1 = dec.fwd(u, c1)
        v3 = dec.fwd(u, c2)
        v2 = dec.fwd(v1, c2)
        out.append((u, v1, v2, v3))
    return out


def pullback_area_array(cx, u, method="exact"):
    if method == "exact":
        out = np.empty((3,) + u.shape[:-1])
        for c, (v0, v1, v2, v3) in enumerate(face_corners(cx, u)):
            out[c] = _triangle_area(v0, v1, v2) + _triangle_area(v0, v2, v3)
        return masked(cx.face_mask, out / cx.h**2)
    if method == "wedge":
        du = dec.d0(cx, u)
        W = dec.wedge11_array(cx, du, du, "bracket")
        return 0.25 * alg.inner(dec.v2f(cx, u), W)
    raise ValueError(f"unknown pullback method {method!r}")


def pullback_area(u, method: str = "exact") -> Cochain:
    """Discrete ``u* omega`` (area density of the image on S^2) per face.

    ``exact`` uses the signed spherical area of the image quadrilateral (split
    into two geodesic triangles), so integrals over closed surfaces are exact
    multiples of ``4 pi``.  ``wedge`` is the pointwise formula
    ``u_avg . [du ^ du] / 4``; both agree to O(h^2) for smooth ``u``.
    """
    cx = _cx(u)
    ud = _data(u)
    require_unit(cx, ud)
    return Cochain(cx, 2, pullback_area_array(cx, ud, method))


def pullback_area_vjp(cx, u, G):
    """Gradient of ``sum(G * P(u))`` with respect to ``u`` for the exact areas."""
    out = np.zeros_like(u)
    Gm = masked(cx.face_mask, G) / cx.h**2
    for c, (v0, v1, v2, v3) in enumerate(face_corners(cx, u)):
        g = Gm[c][..., None]
        grads = np.zeros((4,) + u.shape)
        for (ia, ib, ic), (a, b, cc) in (((0, 1, 2), (v0, v1, v2)), ((0, 2, 3), (v0, v2, v3))):
            N = alg.inner(a, np.cross(b, cc))
            D = 1.0 + alg.inner(a, b) + alg.inner(b, cc) + alg.inner(cc, a)
            s = (2.0 / np.maximum(N * N + D * D, 1e-300))[..., None]
            Nn = N[..., None]
            Dd = D[..., None]
            grads[ia] += s * (Dd * np.cross(b, cc) - Nn * (b + cc))
            grads[ib] += s * (Dd * np.cross(cc, a) - Nn * (cc + a))
            grads[ic] += s * (Dd * np.cross(a, b) - Nn * (a + b))
        c1, c2 = (c + 1) % 3, (c + 2) % 3
        out += g * grads[0]
        out += dec.bwd(g * grads[1], c1)
        out += dec.bwd(dec.bwd(g * grads[2], c1), c2)
        out += dec.bwd(g * grads[3], c2)
    return masked(cx.vertex_mask, out)


def cell_degrees(cx, u):
    """Raw degree per cell: outward area of the cell boundary divided by 4 pi."""
    P = pullback_area_array(cx, u)
    return dec.d2(cx, P) * cx.h**3 / (4 * np.pi)


# -- gauge transformations ----------------------------------------------------------

def _edge_frames(cx, g):
    """Per edge: the transition log ``L`` and the midpoint frame ``g_m``."""
    L = np.zeros((3,) + g.shape[:-1] + (3,))
    gm = np.zeros((3,) + g.shape)
    for a in range(3):
        gh = dec.fwd(g, a)
        gh = np.where(cx.edge_mask[a][..., None], gh, alg.IDENTITY)
        gt = np.where(cx.edge_mask[a][..., None], g, alg.IDENTITY)
        La = alg.log_map(alg.qmul(alg.qconj(gt), gh))
        L[a] = La
        gm[a] = alg.qmul(gt, alg.exp_map(0.5 * La))
    return masked(cx.edge_mask, L), gm


def gauge_transform(cfg: FieldConfig, g) -> FieldConfig:
    """``u -> g^-1 u g`` and ``A -> g_m^-1 A g_m + log(g_t^-1 g_h) / h`` per edge.

    ``g`` is a dense ``(N, N, N, 4)`` array of unit quaternions.  ``eta`` and
    ``phi`` are carried through (``phi`` is re-read from the transformed ``u``
    at the boundary).
    """
    cx = cfg.complex
    g = np.where(cx.vertex_mask[..., None], np.asarray(g, dtype=float), alg.IDENTITY)
    if not alg.is_unit(g, 1e-12):
        raise ValueError("gauge field must be unit quaternions")
    u = masked(cx.vertex_mask, alg.adjoint(g, cfg.u))
    L, gm = _edge_frames(cx, g)
    A = masked(cx.edge_mask, alg.adjoint(gm, cfg.A) + L / cx.h)
    eta = None if cfg.eta is None else cfg.eta.copy()
    return FieldConfig(cx, u, A, eta, u[cx.boundary_mask].copy())


def identity_gauge(cx):
    g = np.zeros(cx.vertex_pos.shape[:-1] + (4,))
    g[..., 0] = 1.0
    return g


def inverse_gauge(g):
    return alg.qconj(g)


def face_gauge(cx, g):
    """Unit-normalized mean of the four corner quaternions per face."""
    q = dec.v2f(cx, g)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    return np.where(n > 0, q / np.where(n > 0, n, 1.0), alg.IDENTITY)


# -- decompositions and residuals ----------------------------------------------------

def split_connection(cx, u, A):
    """Transverse and longitudinal parts of ``A`` relative to the unit edge average."""
    e = edge_average(cx, np.asarray(u, dtype=float), normalize=True)
    lon = alg.inner(A, e)[..., None] * e
    return A - lon, lon


def bianchi_residual(A) -> float:
    """Sup over interior cells of ``dF_A + [A ^ F_A]`` (a 3-form)."""
    cx = _cx(A)
    Ad = _data(A)
    F = curvature_array(cx, Ad)
    res = dec.d2(cx, F)
    Ac = dec.e2c(cx, Ad)
    Fc = dec.f2c(cx, F)
    res = res + sum(alg.bracket(Ac[c], Fc[c]) for c in range(3))
    vals = res[cx.inner_cell_mask]
    return float(np.max(np.linalg.norm(vals, axis=-1))) if vals.size else 0.0


def dada_residual(u, A) -> float:
    """Sup over interior faces of ``d_A(d_A u) - [F_A, u]``."""
    cx = _cx(u, A)
    ud = _data(u)
    Ad = _data(A)
    D = cov_derivative_array(cx, ud, Ad)
    lhs = cov_exterior_1(cx, Ad, D)
    rhs = alg.bracket(curvature_array(cx, Ad), dec.v2f(cx, ud))
    vals = (lhs - rhs)[cx.inner_face_mask]
    return float(np.max(np.linalg.norm(vals, axis=-1))) if vals.size else 0.0
