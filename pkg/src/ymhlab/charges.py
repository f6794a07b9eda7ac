"""Topological charges of unit fields and their minimal connection."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy import ndimage
from scipy.optimize import linprog

from . import dec
from . import gauge
from .dec import Cochain

log = logging.getLogger(__name__)

ROUND_TOL = 0.25
MAX_UNIT_CHARGES = 64


class UnresolvedSingularity(ValueError):
    pass


class ChargeImbalance(ValueError):
    pass


@dataclass
class ChargeSet:
    positions: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    degrees: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        self.degrees = np.asarray(self.degrees, dtype=int).reshape(-1)
        if len(self.positions) != len(self.degrees):
            raise ValueError("positions and degrees differ in length")
        if np.any(self.degrees == 0):
            raise ValueError("charges must have nonzero degree")

    def __len__(self):
        return len(self.degrees)

    @property
    def total_degree(self) -> int:
        return int(self.degrees.sum())

    def rows(self):
        for p, d in zip(self.positions, self.degrees):
            yield (float(p[0]), float(p[1]), float(p[2]), int(d))

    def rotated(self, R):
        return ChargeSet(self.positions @ np.asarray(R).T, self.degrees.copy())


def locate_charges(u: Cochain, tol: float = ROUND_TOL, merge_fractional: bool = False) -> ChargeSet:
    """Cells whose boundary image wraps the sphere, merged into connected clusters.

    Cells touching a boundary vertex are skipped.  By default every inner cell
    must carry a near-integer degree.  With ``merge_fractional`` a singularity
    sitting on a shared edge or face (several cells with fractional degree) is
    accepted when its whole cluster sums to a near-integer.
    """
    cx = u.complex
    ud = u.data
    gauge.require_unit(cx, ud)
    raw = gauge.cell_degrees(cx, ud)
    inner = cx.inner_cell_mask
    if merge_fractional:
        hot = inner & (np.abs(raw) > 1e-6)
        vals = raw
    else:
        rnd = np.rint(raw)
        bad = inner & (np.abs(raw - rnd) > tol)
        if np.any(bad):
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            raise UnresolvedSingularity(f"unresolved singularity in cell {idx}: raw degree {raw[idx]:.3f}")
        hot = inner & (rnd != 0)
        vals = rnd
    labels, count = ndimage.label(hot, structure=np.ones((3, 3, 3), dtype=bool))
    centers = cx.cell_centers
    pos, deg = [], []
    for lab in range(1, count + 1):
        sel = labels == lab
        tot = float(vals[sel].sum())
        d = int(np.rint(tot))
        if abs(tot - d) > tol:
            idx = tuple(int(i) for i in np.argwhere(sel)[0])
            raise UnresolvedSingularity(f"unresolved singularity near cell {idx}: cluster degree {tot:.3f}")
        if d == 0:
            continue
        pos.append(centers[sel].mean(axis=0))
        deg.append(d)
    return ChargeSet(np.array(pos).reshape(-1, 3), np.array(deg, dtype=int))


# -- matching --------------------------------------------------------------------

def connection_cost(x, y):
    """Direct segment or a detour through the boundary sphere, whichever is shorter."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    direct = np.linalg.norm(x[:, None, :] - y[None, :, :], axis=-1)
    rx = 1.0 - np.linalg.norm(x, axis=-1)
    ry = 1.0 - np.linalg.norm(y, axis=-1)
    return np.minimum(direct, rx[:, None] + ry[None, :])


def hungarian(cost) -> np.ndarray:
    """Minimum-cost perfect assignment for a square cost matrix.

    Shortest augmenting paths with row/column potentials, O(n^3).  Returns
    ``col`` with row ``i`` assigned to column ``col[i]``.
    """
    C = np.asarray(cost, dtype=float)
    n = C.shape[0]
    if C.shape != (n, n):
        raise ValueError("cost matrix must be square")
    INF = np.inf
    # 1-based arrays; index 0 is the virtual root
    U = np.zeros(n + 1)
    V = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=int)  # p[j] = row matched to column j
    way = np.zeros(n + 1, dtype=int)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, INF)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            cur = C[i0 - 1] - U[i0] - V[1:]
            free = ~used[1:]
            upd = free & (cur < minv[1:])
            minv[1:][upd] = cur[upd]
            way[1:][upd] = j0
            cand = np.where(free, minv[1:], INF)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            U[p[used]] += delta
            V[used] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    col = np.zeros(n, dtype=int)
    for j in range(1, n + 1):
        col[p[j] - 1] = j - 1
    return col


def expand_units(charges: ChargeSet):
    pos = np.repeat(charges.positions, np.abs(charges.degrees), axis=0)
    sgn = np.repeat(np.sign(charges.degrees), np.abs(charges.degrees))
    return pos[sgn > 0], pos[sgn < 0]


def minimal_connection_matching(charges: ChargeSet, boundary_sink: bool = False) -> float:
    """Minimal connection length ``L`` by min-cost perfect matching of unit charges.

    Charges are paired directly or through the sphere.  With ``boundary_sink``
    an unbalanced set is also accepted: every unit charge may end on the
    sphere at cost ``1 - |x|`` (ghost partners, ghost-ghost pairs cost 0).
    """
    if len(charges) == 0:
        return 0.0
    plus, minus = expand_units(charges)
    if len(plus) + len(minus) > MAX_UNIT_CHARGES:
        raise ValueError(f"{len(plus) + len(minus)} unit charges exceed the cap of {MAX_UNIT_CHARGES}")
    if boundary_sink:
        P, M = len(plus), len(minus)
        C = np.zeros((P + M, M + P))
        C[:P, :M] = connection_cost(plus, minus)
        C[:P, M:] = (1.0 - np.linalg.norm(plus, axis=-1))[:, None]
        C[P:, :M] = (1.0 - np.linalg.norm(minus, axis=-1))[None, :]
    else:
        if len(plus) != len(minus):
            raise ChargeImbalance(f"inconsistent charges: {len(plus)} positive vs {len(minus)} negative")
        C = connection_cost(plus, minus)
    col = hungarian(C)
    return float(C[np.arange(len(col)), col].sum())


# -- dual linear program -----------------------------------------------------------

def lipschitz_directions(kind: int = 26) -> np.ndarray:
    """Unit normals of the polytope approximating the unit ball from outside."""
    if kind == 6:
        d = np.vstack([np.eye(3), -np.eye(3)])
    elif kind == 26:
        g = np.array([(a, b, c) for a in (-1, 0, 1) for b in (-1, 0, 1) for c in (-1, 0, 1)
                      if (a, b, c) != (0, 0, 0)], dtype=float)
        d = g / np.linalg.norm(g, axis=1, keepdims=True)
    else:
        raise ValueError("direction set must be 6 or 26")
    return d


class DualNotConverged(RuntimeError):
    pass


def _corner_slices():
    lo, hi = slice(None, -1), slice(1, None)
    for a in (0, 1):
        for b in (0, 1):
            for c in (0, 1):
                yield (2 * a - 1, 2 * b - 1, 2 * c - 1), ((lo, hi)[a], (lo, hi)[b], (lo, hi)[c])


def cell_gradient(xi, h):
    """Per-cell gradient of a vertex function, edge differences averaged over the four parallel edges.

    ``xi`` has vertex shape ``(N, N, N)``; the result is ``(3, n, n, n)``.
    """
    g = np.zeros((3,) + tuple(m - 1 for m in xi.shape))
    for sg, sl in _corner_slices():
        v = xi[sl]
        g[0] += sg[0] * v
        g[1] += sg[1] * v
        g[2] += sg[2] * v
    return g / (4.0 * h)


def cell_gradient_adjoint(q, h):
    N = q.shape[1] + 1
    out = np.zeros((N, N, N))
    q = q / (4.0 * h)
    for sg, sl in _corner_slices():
        out[sl] += sg[0] * q[0] + sg[1] * q[1] + sg[2] * q[2]
    return out


ZERO_FLUX = 1e-9


def _dual_objective(cx, ud):
    n = cx.n
    deg = gauge.cell_degrees(cx, ud)[:n, :n, :n]
    cell = cx.cell_mask[:n, :n, :n]
    var = cx.interior_mask
    dc = np.where(cell, deg, 0.0) / 8.0
    obj = np.zeros(var.shape)
    for _, sl in _corner_slices():
        obj[sl] += dc
    return np.where(var, obj, 0.0), cell, var


def minimal_connection_dual_lp(u: Cochain, phi=None, method: str = "pdhg", max_iter: int = 50000, tol: float = 1e-4, flux_tol: float = 1e-3,
                               directions: int = 26, return_potential=False):
    """Minimal connection as the sup over 1-Lipschitz potentials.

    Maximizes ``-sum_v obj_v xi_v`` with ``obj_v = sum_{cells c ni v} deg_c / 8``,
    which is ``int d xi ^ u*omega / 4 pi`` after integrating by parts, subject to
    ``|grad xi| <= 1`` in every active cell, with ``xi = 0`` on the boundary
    layer so that charges may discharge through the sphere.  ``phi``, when
    given, replaces the boundary trace of ``u``.

    ``method="pdhg"`` runs a primal-dual (Chambolle-Pock) iteration on the
    saddle form with the exact Euclidean ball per cell; the flux variable
    ``q`` certifies the value through the gap ``sum |q_c| - value`` (relative
    ``tol``) once its divergence matches the charges (relative ``flux_tol``).
    The returned value is that of the rescaled feasible potential.
    ``method="highs"`` solves the linear program with the ball replaced by a
    ``directions``-face polytope (small grids only).
    """
    cx = u.complex
    ud = u.data
    if phi is not None:
        ud = ud.copy()
        ud[cx.boundary_mask] = phi
    gauge.require_unit(cx, ud)
    obj, cell, var = _dual_objective(cx, ud)
    # cell degrees of a smooth field vanish only up to roundoff
    if np.abs(obj).sum() <= ZERO_FLUX:
        return (0.0, np.zeros(var.shape)) if return_potential else 0.0
    if method == "pdhg":
        value, xi = _dual_pdhg(obj, cell, var, cx.h, max_iter, tol, flux_tol)
    elif method == "highs":
        value, xi = _dual_highs(obj, cell, var, cx.h, directions)
    else:
        raise ValueError(f"unknown method {method!r}")
    return (value, xi) if return_potential else value


def _dual_pdhg(obj, cell, var, h, max_iter, tol, flux_tol, ratio=10.0, check_every=250):
    cellf = cell.astype(float)
    varf = var.astype(float)
    G = lambda x: cell_gradient(x, h) * cellf
    GT = lambda q: cell_gradient_adjoint(q, h) * varf

    v = np.random.default_rng(0).standard_normal(var.shape) * varf
    for _ in range(30):  # power iteration for ||G||
        w = GT(G(v))
        v = w / np.linalg.norm(w)
    norm = np.sqrt(np.linalg.norm(GT(G(v))))
    tau = 0.99 * ratio / norm
    sigma = 0.99 / (ratio * norm)

    xi = np.zeros(var.shape)
    xbar = xi.copy()
    q = np.zeros((3,) + cell.shape)
    onorm = np.abs(obj).sum()
    lower = upper = 0.0
    for k in range(max_iter):
        q += sigma * G(xbar)
        qn = np.sqrt((q * q).sum(0))
        # Moreau: subtract the projection onto the ball of radius sigma
        q *= np.maximum(0.0, 1.0 - sigma / np.maximum(qn, 1e-300))
        xnew = (xi - tau * (GT(q) + obj)) * varf
        xbar = 2.0 * xnew - xi
        xi = xnew
        if k % check_every == check_every - 1:
            gmax = np.sqrt((G(xi) ** 2).sum(0)).max()
            lower = -float((obj * xi).sum()) / max(gmax, 1.0)
            upper = float(np.sqrt((q * q).sum(0)).sum())
            resid = float(np.abs(GT(q) + obj).sum()) / onorm
            if abs(upper - lower) <= tol * max(1.0, abs(lower)) and resid <= flux_tol:
                return lower, xi / max(gmax, 1.0)
    raise DualNotConverged(f"dual LP not converged after {max_iter} iterations: "
                           f"duality gap {upper - lower:.3e} (value {lower:.6g})")


def _dual_highs(obj, cell, var, h, directions):
    vidx = -np.ones(var.size, dtype=np.int64)
    vidx[var.ravel()] = np.arange(int(var.sum()))
    nvar = int(var.sum())
    N = var.shape[0]
    cells = np.argwhere(cell)
    corners = np.array([(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)])
    cvert = cells[:, None, :] + corners[None, :, :]
    cvar = vidx[np.ravel_multi_index((cvert[..., 0], cvert[..., 1], cvert[..., 2]), (N, N, N))]

    dirs = lipschitz_directions(directions)
    coef = dirs @ ((2 * corners - 1) / (4.0 * h)).T  # (K, 8)
    ncell, K = len(cells), len(dirs)
    rows = np.broadcast_to(np.arange(ncell)[:, None, None] * K + np.arange(K)[None, :, None], (ncell, K, 8))
    cols = np.broadcast_to(cvar[:, None, :], (ncell, K, 8))
    vals = np.broadcast_to(coef[None, :, :], (ncell, K, 8))
    keep = cols >= 0
    A_ub = sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(ncell * K, nvar))
    # |xi| <= 2 removes the null directions of the averaged gradient without cutting the optimum
    res = linprog(obj[var], A_ub=A_ub, b_ub=np.ones(ncell * K), bounds=(-2.0, 2.0), method="highs-ipm")
    if res.status != 0:
        raise DualNotConverged(f"dual LP did not converge: {res.message}")
    xi = np.zeros(var.shape)
    xi[var] = res.x
    return float(-res.fun), xi
