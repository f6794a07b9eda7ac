"""Discrete exterior calculus on a cubical complex masked to the unit ball.

Layout
------
The grid has ``n`` cells per axis over ``[-1, 1]^3`` and ``N = n + 1`` vertices
per axis.  Cochains are stored densely and are zero outside the active set:

* 0-forms: ``(N, N, N) + V`` (vertex ``i``)
* 1-forms: ``(3, N, N, N) + V`` (edge ``(a, i)`` from ``i`` to ``i + e_a``)
* 2-forms: ``(3, N, N, N) + V`` (face ``(c, i)`` spanned by ``e_{c+1}, e_{c+2}``
  at ``i``; stores the coefficient of ``dx_{c+1} ^ dx_{c+2}``)
* 3-forms: ``(N, N, N) + V`` (cell with lowest corner ``i``)

``V`` is ``()`` for real forms and ``(3,)`` for su(2)-valued forms.  Stored
numbers are form coefficients (densities), so ``d`` divides the signed boundary
sum by ``h`` and :func:`l2_inner` weighs every cell by ``h^3``.

The array-level helpers (``d0``, ``d1T``, ``e2f`` ...) are what the energy and
gradient code uses; each linear helper ships with its exact transpose.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import su2 as alg

PAIRINGS = ("scalar", "inner", "bracket", "cross")


# -- shifts ----------------------------------------------------------------------

def fwd(a, axis, offset=0):
    """``b[i] = a[i + e_axis]`` with zero fill; ``offset`` skips leading axes."""
    ax = axis + offset
    b = np.zeros_like(a)
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    src[ax] = slice(1, None)
    dst[ax] = slice(None, -1)
    b[tuple(dst)] = a[tuple(src)]
    return b


def bwd(a, axis, offset=0):
    """``b[i] = a[i - e_axis]`` with zero fill."""
    ax = axis + offset
    b = np.zeros_like(a)
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    src[ax] = slice(None, -1)
    dst[ax] = slice(1, None)
    b[tuple(dst)] = a[tuple(src)]
    return b


_FLOAT_MASKS: dict = {}


def _float_mask(mask):
    key = id(mask)
    hit = _FLOAT_MASKS.get(key)
    if hit is None or hit[0] is not mask:
        if len(_FLOAT_MASKS) > 256:
            _FLOAT_MASKS.clear()
        hit = (mask, mask.astype(float))
        _FLOAT_MASKS[key] = hit
    return hit[1]


def masked(mask, arr):
    """Multiply ``arr`` by a boolean mask broadcast over trailing value axes."""
    extra = arr.ndim - mask.ndim
    m = _float_mask(mask) if mask.dtype == bool else mask
    return arr * m.reshape(mask.shape + (1,) * extra)


def _next(c):
    return (c + 1) % 3, (c + 2) % 3


# -- the complex -------------------------------------------------------------------

class CubicalComplex:
    """Uniform cubical grid on ``[-1, 1]^3`` restricted to the open unit ball.

    A cell is active iff its center lies in the open ball; lower-dimensional
    cells are active iff they bound an active cell, so the active set is
    closed under taking faces.
    """

    def __init__(self, n: int):
        if n < 2:
            raise ValueError("need at least two cells per axis")
        self.n = int(n)
        self.N = self.n + 1
        self.h = 2.0 / self.n
        N = self.N
        self.x = -1.0 + self.h * np.arange(N)
        X = np.stack(np.meshgrid(self.x, self.x, self.x, indexing="ij"), axis=-1)
        self.vertex_pos = X

        centers = X + 0.5 * self.h
        cell = np.linalg.norm(centers, axis=-1) < 1.0
        cell[-1, :, :] = cell[:, -1, :] = cell[:, :, -1] = False
        self.cell_mask = cell

        corners = [(s0, s1, s2) for s0 in (0, 1) for s1 in (0, 1) for s2 in (0, 1)]

        def incident(offsets):
            # cells i - s for each offset s
            out = np.zeros_like(cell)
            full = np.ones_like(cell)
            for s in offsets:
                c = cell
                f = full
                for ax in range(3):
                    if s[ax]:
                        c = bwd(c, ax)
                        f = bwd(f, ax)
                yield c, f

        vmask = np.zeros_like(cell)
        bnd = np.zeros_like(cell)
        for c, f in incident(corners):
            vmask |= c
            # out-of-grid or masked-out incident cell marks boundary
            bnd |= ~(c & f)
        self.vertex_mask = vmask
        self.boundary_mask = vmask & bnd
        self.interior_mask = vmask & ~bnd

        emask = np.zeros((3,) + cell.shape, dtype=bool)
        fmask = np.zeros((3,) + cell.shape, dtype=bool)
        for a in range(3):
            b, c = _next(a)
            offs = [tuple(int(k == b) * sb + int(k == c) * sc for k in range(3))
                    for sb in (0, 1) for sc in (0, 1)]
            for cc, _ in incident(offs):
                emask[a] |= cc
            fmask[a] = cell | bwd(cell, a)
        self.edge_mask = emask
        self.face_mask = fmask

        self._sparse = {}
        self.boundary_normal = np.zeros(X.shape)
        bx = X[self.boundary_mask]
        self.boundary_normal[self.boundary_mask] = bx / np.linalg.norm(bx, axis=-1, keepdims=True)

    # -- geometry ----------------------------------------------------------------
    def mask(self, k: int):
        return (self.vertex_mask, self.edge_mask, self.face_mask, self.cell_mask)[k]

    def count(self, k: int) -> int:
        return int(self.mask(k).sum())

    @cached_property
    def edge_midpoints(self):
        X = self.vertex_pos
        out = np.repeat(X[None], 3, axis=0)
        for a in range(3):
            out[a, ..., a] += 0.5 * self.h
        return out

    @cached_property
    def face_centers(self):
        X = self.vertex_pos
        out = np.repeat(X[None], 3, axis=0)
        for c in range(3):
            b, d = _next(c)
            out[c, ..., b] += 0.5 * self.h
            out[c, ..., d] += 0.5 * self.h
        return out

    @cached_property
    def cell_centers(self):
        return self.vertex_pos + 0.5 * self.h

    def centers(self, k: int):
        return (self.vertex_pos, self.edge_midpoints, self.face_centers, self.cell_centers)[k]

    @cached_property
    def outer_cell_layer(self):
        """Active cells touching a boundary vertex."""
        touch = np.zeros_like(self.cell_mask)
        b = self.boundary_mask
        for s0 in (0, 1):
            for s1 in (0, 1):
                for s2 in (0, 1):
                    t = b
                    for ax, s in enumerate((s0, s1, s2)):
                        if s:
                            t = fwd(t, ax)
                    touch |= t
        return touch & self.cell_mask

    @cached_property
    def inner_cell_mask(self):
        return self.cell_mask & ~self.outer_cell_layer

    @cached_property
    def inner_face_mask(self):
        inner = self.inner_cell_mask
        return np.stack([inner & bwd(inner, c) for c in range(3)])

    @cached_property
    def inner_edge_mask(self):
        """Edges with both endpoints interior vertices."""
        im = self.interior_mask
        return np.stack([im & fwd(im, a) for a in range(3)])

    def zeros(self, k: int, value_shape=()):
        shape = (self.N,) * 3 if k in (0, 3) else (3,) + (self.N,) * 3
        return np.zeros(shape + tuple(value_shape))

    # -- sparse scalar operators (used for solves and the dual LP) ----------------
    def index_map(self, k: int):
        """Flat dense index -> position in the active-cell vector (or -1)."""
        m = self.mask(k).ravel()
        idx = -np.ones(m.size, dtype=np.int64)
        idx[m] = np.arange(int(m.sum()))
        return idx

    def sparse_d(self, k: int):
        """Coboundary ``d_k`` as a sparse matrix on active cells."""
        key = ("d", k)
        if key not in self._sparse:
            self._sparse[key] = _sparse_from_linear(self, k, k + 1, lambda a: d_array(self, k, a))
        return self._sparse[key]



def _sparse_from_linear(cx, kin, kout, op):
    """Assemble a local (index radius 1) linear operator from batched impulses.

    Impulses on a stride-3 lattice never share a response site, so every
    nonzero response belongs to the unique impulse within Chebyshev distance 1.
    """
    in_mask = cx.mask(kin)
    out_mask = cx.mask(kout)
    in_idx = cx.index_map(kin)
    out_idx = cx.index_map(kout)
    in_shape = in_mask.shape
    lead_in = len(in_shape) == 4
    flat_in = np.flatnonzero(in_mask.ravel())
    coords = np.array(np.unravel_index(flat_in, in_shape)).T
    spatial = coords[:, -3:]
    color = (spatial % 3) @ np.array([1, 3, 9])
    if lead_in:
        color = color + 27 * coords[:, 0]
    rows, cols, vals = [], [], []
    for col in np.unique(color):
        sel = flat_in[color == col]
        probe = np.zeros(in_mask.size)
        probe[sel] = 1.0
        resp = op(probe.reshape(in_shape)).ravel()
        nz = np.flatnonzero(resp)
        nz = nz[out_mask.ravel()[nz]]
        if nz.size == 0:
            continue
        rc = np.array(np.unravel_index(nz, out_mask.shape)).T[:, -3:]
        res = np.array([col % 3, (col // 3) % 3, (col // 9) % 3])
        p = rc + (res - rc + 1) % 3 - 1
        if lead_in:
            src = np.ravel_multi_index((np.full(len(p), col // 27), p[:, 0], p[:, 1], p[:, 2]), in_shape)
        else:
            src = np.ravel_multi_index((p[:, 0], p[:, 1], p[:, 2]), in_shape)
        rows.append(out_idx[nz])
        cols.append(in_idx[src])
        vals.append(resp[nz])
    rows = np.concatenate(rows) if rows else np.zeros(0, int)
    cols = np.concatenate(cols) if cols else np.zeros(0, int)
    vals = np.concatenate(vals) if vals else np.zeros(0)
    if np.any(cols < 0):
        raise RuntimeError("stencil reached an inactive input cell")
    return sp.csr_matrix((vals, (rows, cols)), shape=(cx.count(kout), cx.count(kin)))


def sparse_operator(cx, kin, kout, op):
    """Sparse matrix of a radius-1 linear map between cochain spaces."""
    return _sparse_from_linear(cx, kin, kout, op)


# -- coboundaries and transposes ---------------------------------------------------

def d0(cx, f):
    out = np.stack([fwd(f, a) - f for a in range(3)]) / cx.h
    return masked(cx.edge_mask, out)


def d1(cx, B):
    out = np.empty_like(B)
    for c in range(3):
        c1, c2 = _next(c)
        out[c] = (fwd(B[c2], c1) - B[c2]) - (fwd(B[c1], c2) - B[c1])
    return masked(cx.face_mask, out / cx.h)


def d2(cx, F):
    out = sum(fwd(F[c], c) - F[c] for c in range(3)) / cx.h
    return masked(cx.cell_mask, out)


def d0T(cx, B):
    out = sum(bwd(B[a], a) - B[a] for a in range(3)) / cx.h
    return masked(cx.vertex_mask, out)


def d1T(cx, F):
    out = np.zeros_like(F)
    for c in range(3):
        c1, c2 = _next(c)
        out[c2] += bwd(F[c], c1) - F[c]
        out[c1] += F[c] - bwd(F[c], c2)
    return masked(cx.edge_mask, out / cx.h)


def d2T(cx, w):
    out = np.stack([bwd(w, c) - w for c in range(3)]) / cx.h
    return masked(cx.face_mask, out)


def d_array(cx, k, a):
    return (d0, d1, d2)[k](cx, a)


def dT_array(cx, k, a):
    """Transpose of ``d_{k-1}``: maps k-forms to (k-1)-forms."""
    return (None, d0T, d1T, d2T)[k](cx, a)


# -- averaging transfers -----------------------------------------------------------

def v2e(cx, u):
    """Arithmetic mean of the two endpoints of every edge."""
    return masked(cx.edge_mask, 0.5 * np.stack([u + fwd(u, a) for a in range(3)]))


def v2eT(cx, y):
    out = sum(0.5 * (y[a] + bwd(y[a], a)) for a in range(3))
    return masked(cx.vertex_mask, out)


def e2f(cx, B):
    """Per face ``(c, i)``: means of the two parallel edges in each face direction.

    Returns ``(Ba, Bb)`` with ``Ba[c]`` the mean along ``e_{c+1}`` and ``Bb[c]``
    the mean along ``e_{c+2}``.
    """
    Ba = np.empty_like(B)
    Bb = np.empty_like(B)
    for c in range(3):
        c1, c2 = _next(c)
        Ba[c] = 0.5 * (B[c1] + fwd(B[c1], c2))
        Bb[c] = 0.5 * (B[c2] + fwd(B[c2], c1))
    return masked(cx.face_mask, Ba), masked(cx.face_mask, Bb)


def e2fT(cx, Ga, Gb):
    out = np.zeros_like(Ga)
    for c in range(3):
        c1, c2 = _next(c)
        out[c1] += 0.5 * (Ga[c] + bwd(Ga[c], c2))
        out[c2] += 0.5 * (Gb[c] + bwd(Gb[c], c1))
    return masked(cx.edge_mask, out)


def v2f(cx, u):
    """Mean of the four corners of every face."""
    out = np.empty((3,) + u.shape)
    for c in range(3):
        c1, c2 = _next(c)
        a = fwd(u, c1)
        out[c] = 0.25 * (u + a + fwd(u, c2) + fwd(a, c2))
    return masked(cx.face_mask, out)


def v2fT(cx, y):
    out = np.zeros(y.shape[1:])
    for c in range(3):
        c1, c2 = _next(c)
        b = bwd(y[c], c1)
        out += 0.25 * (y[c] + b + bwd(y[c], c2) + bwd(b, c2))
    return masked(cx.vertex_mask, out)


def v2c(cx, u):
    out = np.zeros_like(u)
    for s0 in (0, 1):
        for s1 in (0, 1):
            for s2 in (0, 1):
                t = u
                for ax, s in enumerate((s0, s1, s2)):
                    if s:
                        t = fwd(t, ax)
                out += t
    return masked(cx.cell_mask, out / 8.0)


def e2c(cx, B):
    """Per cell: mean of the four edges in each direction, as ``(3, ...)``."""
    out = np.empty_like(B)
    for a in range(3):
        b, c = _next(a)
        t = B[a] + fwd(B[a], b)
        out[a] = 0.25 * (t + fwd(t, c))
    return masked(np.broadcast_to(cx.cell_mask, (3,) + cx.cell_mask.shape), out)


def f2c(cx, F):
    """Per cell: mean of the two opposite faces of each orientation."""
    out = np.stack([0.5 * (F[c] + fwd(F[c], c)) for c in range(3)])
    return masked(np.broadcast_to(cx.cell_mask, (3,) + cx.cell_mask.shape), out)


# -- pairings ----------------------------------------------------------------------

def pair(p, a, b):
    if p == "scalar":
        if a.ndim == b.ndim:
            return a * b
        if a.ndim < b.ndim:
            return a[..., None] * b
        return a * b[..., None]
    if p == "inner":
        return alg.inner(a, b)
    if p == "bracket":
        return alg.bracket(a, b)
    if p == "cross":
        # componentwise wedge convention: du ^ du = sum_cyc du^i ^ du^j e_k
        return 0.5 * alg.cross(a, b)
    raise ValueError(f"unknown pairing {p!r}; expected one of {PAIRINGS}")


def wedge11_array(cx, A, B, p):
    Aa, Ab = e2f(cx, A)
    Ba, Bb = e2f(cx, B)
    return pair(p, Aa, Bb) - pair(p, Ab, Ba)


# -- the Cochain value type ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Cochain:
    """A k-form on a :class:`CubicalComplex` (dense storage, zero off-mask)."""

    complex: CubicalComplex
    degree: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.degree not in (0, 1, 2, 3):
            raise ValueError("degree must be 0..3")
        spatial = 3 if self.degree in (0, 3) else 4
        expect = (self.complex.N,) * 3 if spatial == 3 else (3,) + (self.complex.N,) * 3
        if self.data.shape[:spatial] != expect:
            raise ValueError(f"data shape {self.data.shape} does not fit a {self.degree}-form")

    @property
    def value_shape(self):
        spatial = 3 if self.degree in (0, 3) else 4
        return self.data.shape[spatial:]

    @property
    def is_su2(self) -> bool:
        return self.value_shape == (3,)

    def values(self):
        """Active-cell values in lexicographic order (component axis first)."""
        return self.data[self.complex.mask(self.degree)]

    @classmethod
    def from_values(cls, cx, degree, values):
        values = np.asarray(values, dtype=float)
        data = cx.zeros(degree, values.shape[1:])
        data[cx.mask(degree)] = values
        return cls(cx, degree, data)

    @classmethod
    def zeros(cls, cx, degree, su2=False):
        return cls(cx, degree, cx.zeros(degree, (3,) if su2 else ()))

    def _check(self, other):
        if not isinstance(other, Cochain):
            return NotImplemented
        if other.complex is not self.complex or other.degree != self.degree:
            raise ValueError("cochains live on different complexes or degrees")
        return other

    def __add__(self, other):
        other = self._check(other)
        return Cochain(self.complex, self.degree, self.data + other.data)

    def __sub__(self, other):
        other = self._check(other)
        return Cochain(self.complex, self.degree, self.data - other.data)

    def __mul__(self, s):
        return Cochain(self.complex, self.degree, self.data * float(s))

    __rmul__ = __mul__

    def __neg__(self):
        return Cochain(self.complex, self.degree, -self.data)

    def sup_norm(self, mask=None) -> float:
        m = self.complex.mask(self.degree) if mask is None else mask
        vals = self.data[m]
        if vals.size == 0:
            return 0.0
        if self.is_su2:
            vals = np.linalg.norm(vals, axis=-1)
        return float(np.max(np.abs(vals)))


# -- public operators --------------------------------------------------------------

def exterior_derivative(w: Cochain) -> Cochain:
    if w.degree > 2:
        raise ValueError("d of a 3-form is not defined on a 3-complex")
    return Cochain(w.complex, w.degree + 1, d_array(w.complex, w.degree, w.data))


def codifferential(w: Cochain) -> Cochain:
    """Exact adjoint of :func:`exterior_derivative` under :func:`l2_inner`."""
    if w.degree == 0:
        raise ValueError("the codifferential of a 0-form is not defined")
    return Cochain(w.complex, w.degree - 1, dT_array(w.complex, w.degree, w.data))


def hodge(w: Cochain) -> Cochain:
    """Diagonal star pairing each k-cell with one (3-k)-cell; ``** = id``.

    vertex ``i`` <-> cell ``i`` and edge ``(a, i)`` <-> face ``(a, i + e_a)``.
    """
    cx = w.complex
    k = w.degree
    a = w.data
    if k == 0:
        out = masked(cx.cell_mask, a)
    elif k == 3:
        out = masked(cx.vertex_mask, a)
    elif k == 1:
        out = masked(cx.face_mask, np.stack([bwd(a[c], c) for c in range(3)]))
    else:
        out = masked(cx.edge_mask, np.stack([fwd(a[c], c) for c in range(3)]))
    return Cochain(cx, 3 - k, out)


def wedge11(alpha: Cochain, beta: Cochain, pairing: str = "scalar") -> Cochain:
    """Wedge of two 1-forms with a coefficient pairing, values averaged to faces.

    ``(alpha ^ beta)(X, Y) = p(alpha(X), beta(Y)) - p(alpha(Y), beta(X))``.  The
    ``cross`` pairing uses ``a x b / 2`` so that ``du ^ du`` is the usual
    componentwise product ``sum_cyc du^i ^ du^j e_k`` and ``[du ^ du] / 4`` equals it.
    """
    if alpha.complex is not beta.complex:
        raise ValueError("wedge of cochains on different complexes")
    if alpha.degree != 1 or beta.degree != 1:
        raise ValueError("wedge11 takes two 1-forms")
    return Cochain(alpha.complex, 2, wedge11_array(alpha.complex, alpha.data, beta.data, pairing))


def face_to_edge(cx, F):
    """Interpolate every face component to edge midpoints (mean of active faces).

    Returns ``(3, 3, N, N, N) + V``: ``out[m, c]`` is ``F_(c)`` at edges along ``m``.
    """
    out = np.zeros((3,) + F.shape)
    fm = cx.face_mask.astype(float)
    for m in range(3):
        for c in range(3):
            if c == m:
                continue
            c1, c2 = _next(c)
            o = c2 if c1 == m else c1
            num = F[c] + bwd(F[c], o)
            cnt = fm[c] + bwd(fm[c], o)
            cnt = cnt.reshape(cnt.shape + (1,) * (F.ndim - 4))
            out[m, c] = np.where(cnt > 0, num / np.maximum(cnt, 1), 0.0)
    return out


def radial_contraction(F: Cochain, x0=(0.0, 0.0, 0.0)) -> Cochain:
    """Contraction ``F -| d_r`` with the unit radial field about ``x0``.

    ``(F -| d_r)_m = sum_l F_lm (x - x0)_l / |x - x0|``, face values interpolated
    to edge midpoints; edges of the cell containing ``x0`` get 0.
    """
    cx = F.complex
    x0 = np.asarray(x0, dtype=float)
    Fe = face_to_edge(cx, F.data)
    r = cx.edge_midpoints - x0
    dist = np.linalg.norm(r, axis=-1)
    nrm = r / np.where(dist > 0, dist, 1.0)[..., None]
    out = np.zeros_like(F.data)
    extra = F.data.ndim - 4
    for m in range(3):
        m1, m2 = _next(m)
        n1 = nrm[m, ..., m1].reshape(nrm.shape[1:4] + (1,) * extra)
        n2 = nrm[m, ..., m2].reshape(nrm.shape[1:4] + (1,) * extra)
        # F_{m+1,m} = -F_(m+2) and F_{m+2,m} = F_(m+1)
        out[m] = -n1 * Fe[m, m2] + n2 * Fe[m, m1]
    # zero the edges of the cell that contains x0
    cell = np.floor((x0 + 1.0) / cx.h).astype(int)
    near = np.zeros(cx.edge_mask.shape, dtype=bool)
    if np.all((cell >= 0) & (cell < cx.n)):
        for a in range(3):
            b, c = _next(a)
            for sb in (0, 1):
                for sc in (0, 1):
                    idx = cell.copy()
                    idx[b] += sb
                    idx[c] += sc
                    near[(a,) + tuple(idx)] = True
    out = masked(cx.edge_mask & ~near, out)
    return Cochain(cx, 1, out)


def l2_inner(alpha: Cochain, beta: Cochain) -> float:
    if alpha.degree != beta.degree:
        raise ValueError("l2_inner of forms of different degree")
    if alpha.complex is not beta.complex:
        raise ValueError("l2_inner of cochains on different complexes")
    a, b = alpha.data, beta.data
    prod = alg.inner(a, b) if alpha.is_su2 else a * b
    return float(np.sum(prod) * alpha.complex.h**3)


def l2_array(cx, a, b=None, su2=None):
    """``h^3 * sum <a, b>`` on dense arrays."""
    b = a if b is None else b
    if su2 is None:
        su2 = a.shape[-1] == 3 and a.ndim in (4, 5)
    prod = alg.inner(a, b) if su2 else a * b
    return float(np.sum(prod) * cx.h**3)


# -- boundary trace ----------------------------------------------------------------

@dataclass
class BoundaryCochain:
    """Values carried by the boundary-layer vertices (radially projected points)."""

    degree: int
    points: np.ndarray  # (nb, 3) projections onto the unit sphere
    values: np.ndarray  # (nb,) + V for degree 0 and 2, (nb, 3) + V for degree 1

    def sup_norm(self) -> float:
        if self.values.size == 0:
            return 0.0
        v = self.values.reshape(len(self.values), -1)
        return float(np.max(np.linalg.norm(v, axis=-1)))


def edges_to_vertices(cx, B):
    """Per vertex and direction: mean of the active incident edges."""
    em = cx.edge_mask.astype(float)
    out = np.zeros_like(B)
    extra = B.ndim - 4
    for a in range(3):
        num = B[a] + bwd(B[a], a)
        cnt = em[a] + bwd(em[a], a)
        cnt = cnt.reshape(cnt.shape + (1,) * extra)
        out[a] = np.where(cnt > 0, num / np.maximum(cnt, 1), 0.0)
    return out


def faces_to_vertices(cx, F):
    fm = cx.face_mask.astype(float)
    out = np.zeros_like(F)
    extra = F.ndim - 4
    for c in range(3):
        c1, c2 = _next(c)
        num = F[c] + bwd(F[c], c1)
        num = num + bwd(num, c2)
        cnt = fm[c] + bwd(fm[c], c1)
        cnt = cnt + bwd(cnt, c2)
        cnt = cnt.reshape(cnt.shape + (1,) * extra)
        out[c] = np.where(cnt > 0, num / np.maximum(cnt, 1), 0.0)
    return out


def boundary_trace(w: Cochain) -> BoundaryCochain:
    """Restriction to the boundary layer.

    0-forms: vertex values.  1-forms: the vertex-interpolated vector with its
    normal component removed (tangential part).  2-forms: the normal component
    of the vertex-interpolated coefficient vector, i.e. the pullback density.
    """
    cx = w.complex
    bm = cx.boundary_mask
    pts = cx.boundary_normal[bm]
    if w.degree == 0:
        return BoundaryCochain(0, pts, w.data[bm])
    if w.degree == 1:
        vec = np.moveaxis(edges_to_vertices(cx, w.data), 0, 3)[bm]  # (nb, 3) + V
        nn = pts.reshape(pts.shape + (1,) * (vec.ndim - 2))
        normal = np.sum(vec * nn, axis=1, keepdims=True)
        return BoundaryCochain(1, pts, vec - normal * nn)
    if w.degree == 2:
        vec = np.moveaxis(faces_to_vertices(cx, w.data), 0, 3)[bm]
        nn = pts.reshape(pts.shape + (1,) * (vec.ndim - 2))
        return BoundaryCochain(2, pts, np.sum(vec * nn, axis=1))
    raise ValueError("boundary_trace is defined for degrees 0..2")


# -- sampling smooth forms ----------------------------------------------------------

def sample(cx, k, func) -> Cochain:
    """Sample a smooth form at cell centers.

    ``func(x)`` maps points ``(..., 3)`` to values; for k = 1, 2 it must return
    the three coefficients stacked on axis 0 of the value, i.e. shape
    ``(3,) + x.shape[:-1] + V`` is produced by evaluating per component.
    """
    pts = cx.centers(k)
    if k in (0, 3):
        vals = np.asarray(func(pts), dtype=float)
        return Cochain(cx, k, masked(cx.mask(k), vals))
    comps = []
    for c in range(3):
        v = np.asarray(func(pts[c]), dtype=float)
        comps.append(v[c])
    data = np.stack(comps)
    return Cochain(cx, k, masked(cx.mask(k), data))
