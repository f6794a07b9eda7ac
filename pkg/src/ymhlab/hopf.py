"""Hopf fibration S^3 -> S^2, the contact form and lifts of sphere-valued fields.

Points of S^3 are stored as ``(z1, z2, z3, z4)`` and read as the pair of complex
numbers ``w1 = z1 + i z2``, ``w2 = z3 + i z4``.  The fibre action is
``w -> e^{i t} w``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph
from scipy.sparse.linalg import LinearOperator, cg, spsolve

from . import dec
from . import gauge
from .dec import Cochain, CubicalComplex

ROUND_TOL = 0.25


class NonLiftablePair(ValueError):
    pass


class UnresolvedBoundaryDegree(ValueError):
    pass


def _require_unit4(w, tol=1e-10):
    w = np.asarray(w, dtype=float)
    if w.shape[-1] != 4:
        raise ValueError("S^3 points need four components")
    if w.size and np.max(np.abs(np.linalg.norm(w, axis=-1) - 1.0)) > tol:
        raise ValueError("S^3 points must have unit length")
    return w


def hopf_map(w):
    """``(2 conj(w1) w2, |w1|^2 - |w2|^2)`` written in real components."""
    w = _require_unit4(w)
    z1, z2, z3, z4 = np.moveaxis(w, -1, 0)
    return np.stack([2 * (z1 * z3 + z2 * z4),
                     2 * (z1 * z4 - z2 * z3),
                     z1 * z1 + z2 * z2 - z3 * z3 - z4 * z4], axis=-1)


def hopf_jacobian(w):
    """Ambient derivative of :func:`hopf_map`, shape ``(..., 3, 4)``."""
    w = np.asarray(w, dtype=float)
    z1, z2, z3, z4 = np.moveaxis(w, -1, 0)
    J = np.stack([
        np.stack([z3, z4, z1, z2], -1),
        np.stack([z4, -z3, -z2, z1], -1),
        np.stack([z1, z2, -z3, -z4], -1),
    ], axis=-2)
    return 2.0 * J


def hopf_gradient_norm(w):
    """``|grad h|`` on S^3: Frobenius norm of the Jacobian restricted to the tangent space."""
    w = _require_unit4(w)
    J = hopf_jacobian(w)
    P = np.eye(4) - w[..., :, None] * w[..., None, :]
    JP = J @ P
    return np.sqrt(np.einsum("...ij,...ij->...", JP, JP))


def fibre_direction(w):
    """``i w``, the unit generator of the fibre action at ``w``."""
    w = np.asarray(w, dtype=float)
    z1, z2, z3, z4 = np.moveaxis(w, -1, 0)
    return np.stack([-z2, z1, -z4, z3], axis=-1)


def contact_form(w, v):
    """``alpha_w(v) = z1 v2 - z2 v1 + z3 v4 - z4 v3``."""
    return np.einsum("...i,...i->...", fibre_direction(w), v)


def phase_rotate(w, t):
    """``e^{i t} w``."""
    t = np.asarray(t, dtype=float)[..., None]
    return np.cos(t) * w + np.sin(t) * fibre_direction(w)


def hermitian(a, b):
    """``<a, b> = conj(a1) b1 + conj(a2) b2`` as ``(real, imag)``."""
    re = np.einsum("...i,...i->...", a, b)
    im = contact_form(a, b)
    return re, im


def preimage(v):
    """A point of S^3 mapping to the unit vector ``v`` (smooth away from ``v3 = -1``)."""
    v = np.asarray(v, dtype=float)
    v1, v2, v3 = np.moveaxis(v, -1, 0)
    up = v3 >= 0
    s_up = np.sqrt(np.maximum(0.5 * (1 + v3), 1e-300))
    s_dn = np.sqrt(np.maximum(0.5 * (1 - v3), 1e-300))
    # w1 real: w2 = (v1 + i v2) / (2 w1);  w2 real: w1 = (v1 - i v2) / (2 w2)
    a = np.stack([s_up, np.zeros_like(v1), v1 / (2 * s_up), v2 / (2 * s_up)], -1)
    b = np.stack([v1 / (2 * s_dn), -v2 / (2 * s_dn), s_dn, np.zeros_like(v1)], -1)
    w = np.where(up[..., None], a, b)
    return w / np.linalg.norm(w, axis=-1, keepdims=True)


@dataclass
class S3Field:
    complex: CubicalComplex
    data: np.ndarray  # (N, N, N, 4), zero off the vertex mask
    cycle_defect: float = 0.0

    def __post_init__(self):
        vals = self.data[self.complex.vertex_mask]
        _require_unit4(vals, 1e-12)

    def project(self) -> Cochain:
        cx = self.complex
        u = np.zeros(self.data.shape[:-1] + (3,))
        u[cx.vertex_mask] = hopf_map(self.data[cx.vertex_mask])
        return Cochain(cx, 0, u)


def alpha_pullback_array(cx, w):
    """Per edge ``(t1 h2 - t2 h1 + t3 h4 - t4 h3) / h``: alpha at the midpoint applied to the difference."""
    out = np.stack([contact_form(w, dec.fwd(w, a)) for a in range(3)]) / cx.h
    return dec.masked(cx.edge_mask, out)


def alpha_pullback(w: S3Field) -> Cochain:
    return Cochain(w.complex, 1, alpha_pullback_array(w.complex, w.data))


def s3_dirichlet(w: S3Field) -> float:
    cx = w.complex
    dw = dec.d0(cx, w.data)
    return 0.5 * float(np.sum(dw * dw) * cx.h**3)


# -- compatible abelian forms ---------------------------------------------------------

def hodge_laplacian_2(cx):
    D1 = cx.sparse_d(1)
    D2 = cx.sparse_d(2)
    return (D1 @ D1.T + D2.T @ D2).tocsr()


def _solve_spd(M, b, rtol=1e-12):
    """Conjugate gradients with a Jacobi preconditioner; direct solve as a fallback."""
    if not np.any(b):
        return np.zeros_like(b)
    dinv = 1.0 / M.diagonal()
    pre = LinearOperator(M.shape, matvec=lambda x: dinv * x)
    x, info = cg(M, b, rtol=rtol, atol=0.0, maxiter=20 * M.shape[0], M=pre)
    if info != 0:
        x = spsolve(M.tocsc(), b)
    return x


def compatible_eta(u: Cochain) -> np.ndarray:
    """Least-norm 1-form with ``d eta = u*omega`` when ``u*omega`` is closed.

    Solves ``(d d^T + d^T d) psi = P`` and returns ``eta = d^T psi``; for closed
    ``P`` on the contractible ball complex this gives ``d eta = P``.
    """
    cx = u.complex
    P = gauge.pullback_area_array(cx, u.data)
    b = P[cx.face_mask]
    psi = _solve_spd(hodge_laplacian_2(cx), b)
    eta = cx.sparse_d(1).T @ psi
    out = cx.zeros(1)
    out[cx.edge_mask] = eta
    return out


# -- the lift ------------------------------------------------------------------------

def vertex_graph(cx):
    """Sparse adjacency of active vertices along active edges (index space of the mask)."""
    idx = cx.index_map(0).reshape(cx.vertex_mask.shape)
    rows, cols, eid = [], [], []
    for a in range(3):
        m = cx.edge_mask[a]
        t = idx[m]
        hd = dec.fwd(idx, a)[m]
        rows.append(t)
        cols.append(hd)
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    n = cx.count(0)
    G = sp.coo_matrix((np.ones(len(r)), (r, c)), shape=(n, n))
    return (G + G.T).tocsr()


def root_vertex(cx) -> int:
    """Active vertex nearest the origin; ties broken by the smallest flat index."""
    pts = cx.vertex_pos[cx.vertex_mask]
    d = np.linalg.norm(pts, axis=-1)
    cand = np.flatnonzero(d <= d.min() + 1e-12)
    return int(cand[0])


def hopf_lift(u: Cochain, eta, tol_factor: float = 10.0) -> S3Field:
    """Lift ``u`` to S^3 with ``check(u)* alpha = eta / 2``.

    A horizontal lift is transported along a BFS spanning tree from the root
    (each child takes the point of its fibre closest to the parent's), then
    the phase ``phi`` with ``d phi = lift* alpha - eta / 2`` is integrated along
    the same tree and removed: ``check(u) = e^{-i phi} lift``.
    """
    cx = u.complex
    ud = u.data
    ed = eta.data if isinstance(eta, Cochain) else np.asarray(eta, dtype=float)
    gauge.require_unit(cx, ud)
    G = dec.d1(cx, ed) - gauge.pullback_area_array(cx, ud)
    defect = float(np.sqrt(np.sum(G * G) * cx.h**3))
    if defect > tol_factor * cx.h:
        raise NonLiftablePair(f"non-liftable pair: |d eta - u*omega| = {defect:.3e} > {tol_factor} h")

    vm = cx.vertex_mask
    vals = ud[vm]
    flat = np.flatnonzero(vm.ravel())
    coords = np.array(np.unravel_index(flat, vm.shape)).T
    graph = vertex_graph(cx)
    root = root_vertex(cx)
    order, pred = csgraph.breadth_first_order(graph, root, directed=False, return_predecessors=True)
    if len(order) != len(vals):
        raise ValueError("active vertex graph is not connected")
    depth = np.zeros(len(vals), dtype=int)
    for v in order[1:]:
        depth[v] = depth[pred[v]] + 1

    # edge data between child and parent: direction axis and orientation sign
    delta = coords - coords[np.where(pred >= 0, pred, 0)]
    W = preimage(vals)
    phase = np.zeros(len(vals))
    for lev in range(1, depth.max() + 1):
        kids = np.flatnonzero(depth == lev)
        par = pred[kids]
        re, im = hermitian(W[par], W[kids])
        if np.any(re * re + im * im < 1e-24):
            raise NonLiftablePair("antipodal neighbouring values; fibre transport undefined")
        # rotate the child so that <parent, child> is real and positive
        W[kids] = phase_rotate(W[kids], -np.arctan2(im, re))
        d = delta[kids]
        ax = np.argmax(np.abs(d), axis=1)
        sgn = d[np.arange(len(kids)), ax]
        tail = np.where((sgn > 0)[:, None], coords[par], coords[kids])
        e = ed[ax, tail[:, 0], tail[:, 1], tail[:, 2]]
        t_w = np.where((sgn > 0)[:, None], W[par], W[kids])
        h_w = np.where((sgn > 0)[:, None], W[kids], W[par])
        a_edge = contact_form(t_w, h_w) / cx.h
        phase[kids] = phase[par] + sgn * (a_edge - 0.5 * e) * cx.h
    Wc = phase_rotate(W, -phase)
    out = np.zeros(vm.shape + (4,))
    out[vm] = Wc
    res = S3Field(cx, out)
    res.cycle_defect = _cycle_defect(cx, out, ed)
    return res


def _cycle_defect(cx, w, eta):
    # max over edges of |arg<w_t, w_h> - eta h / 2|, zero on tree edges by construction
    worst = 0.0
    for a in range(3):
        m = cx.edge_mask[a]
        re, im = hermitian(w, dec.fwd(w, a))
        ang = np.arctan2(im, re) - 0.5 * eta[a] * cx.h
        if np.any(m):
            worst = max(worst, float(np.max(np.abs(ang[m]))))
    return worst


def lift_energy_defect(u: Cochain, eta, lift: S3Field) -> float:
    """``int (|du|^2 + |eta|^2 - 4 |d check(u)|^2)``, edge by edge."""
    cx = u.complex
    ed = eta.data if isinstance(eta, Cochain) else np.asarray(eta, dtype=float)
    du = dec.d0(cx, u.data)
    dw = dec.d0(cx, lift.data)
    dens = np.sum(du * du, -1) + ed * ed - 4.0 * np.sum(dw * dw, -1)
    return float(np.sum(dens) * cx.h**3)


# -- degrees of boundary data ------------------------------------------------------------

def boundary_flux(cx, u):
    """Outward flux of the pulled-back area through the surface of the active region."""
    P = gauge.pullback_area_array(cx, u)
    cell = cx.cell_mask
    tot = 0.0
    for c in range(3):
        sgn = dec.bwd(cell, c).astype(float) - cell.astype(float)
        tot += float(np.sum(np.where(cx.face_mask[c], sgn * P[c], 0.0)))
    return tot * cx.h**2


def boundary_degree(cx: CubicalComplex, phi) -> int:
    """Degree of boundary data given per boundary vertex (or as a dense 0-form)."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape == cx.vertex_pos.shape:
        u = phi.copy()
    else:
        u = np.zeros(cx.vertex_pos.shape)
        u[cx.boundary_mask] = phi
    vals = u[cx.boundary_mask]
    if np.max(np.abs(np.linalg.norm(vals, axis=-1) - 1.0)) > 1e-10:
        raise ValueError("boundary data must have unit length")
    # only boundary-surface faces are read, so interior values are irrelevant
    interior = cx.vertex_mask & ~cx.boundary_mask
    u[interior] = np.array([0.0, 0.0, 1.0])
    raw = boundary_flux(cx, u) / (4 * np.pi)
    r = round(raw)
    if abs(raw - r) > ROUND_TOL:
        raise UnresolvedBoundaryDegree(f"unresolved boundary degree: raw value {raw:.3f}")
    return int(r)
