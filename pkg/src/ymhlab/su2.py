"""Pointwise algebra of su(2) and SU(2).

su(2) elements are stored as real triples ``(c_i, c_j, c_k)`` on the imaginary
quaternion basis ``(i, j, k)``; SU(2) elements are unit quaternions
``(q0, q1, q2, q3)``.  Every function broadcasts over leading axes, so a whole
cochain can be pushed through in one call.
"""

from __future__ import annotations

import numpy as np

UNIT_TOL = 1e-10

I = np.array([1.0, 0.0, 0.0])
J = np.array([0.0, 1.0, 0.0])
K = np.array([0.0, 0.0, 1.0])
IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def su2(ci=0.0, cj=0.0, ck=0.0) -> np.ndarray:
    return np.array([ci, cj, ck], dtype=float)


def cross(a, b):
    """``a x b`` over the last axis (broadcasting, written out for speed)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = a1 * b2 - a2 * b1
    out[..., 1] = a2 * b0 - a0 * b2
    out[..., 2] = a0 * b1 - a1 * b0
    return out


def bracket(a, b):
    """Lie bracket ``ab - ba``; equals ``2 a x b`` on coefficient triples."""
    return 2.0 * cross(a, b)


def inner(a, b):
    """Scalar product ``Re(a* b)``, i.e. the Euclidean dot on coefficients."""
    return np.einsum("...i,...i->...", a, b)


def norm2(a):
    return inner(a, a)


# -- quaternions ---------------------------------------------------------------

def qmul(p, q):
    """Hamilton product of quaternions stored as ``(w, x, y, z)``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pw, pv = p[..., 0], p[..., 1:]
    qw, qv = q[..., 0], q[..., 1:]
    w = pw * qw - inner(pv, qv)
    v = pw[..., None] * qv + qw[..., None] * pv + cross(pv, qv)
    return np.concatenate([w[..., None], v], axis=-1)


def qconj(q):
    q = np.asarray(q, dtype=float)
    return np.concatenate([q[..., :1], -q[..., 1:]], axis=-1)


def qnormalize(q):
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def as_quaternion(a):
    """Embed su(2) coefficients as imaginary quaternions."""
    a = np.asarray(a, dtype=float)
    return np.concatenate([np.zeros(a.shape[:-1] + (1,)), a], axis=-1)


def is_unit(q, tol=1e-12) -> bool:
    return bool(np.all(np.abs(np.linalg.norm(q, axis=-1) - 1.0) <= tol))


def adjoint(g, a):
    """Right adjoint action ``g^{-1} a g`` of unit quaternions on su(2)."""
    g = np.asarray(g, dtype=float)
    a = np.asarray(a, dtype=float)
    # rotation by the conjugate quaternion, written out to avoid two products
    w = g[..., :1]
    v = -g[..., 1:]
    t = 2.0 * cross(v, a)
    return a + w * t + cross(v, t)


def exp_map(a):
    """Quaternion exponential ``cos|a| + sin|a| a/|a|`` of an su(2) element."""
    a = np.asarray(a, dtype=float)
    theta = np.linalg.norm(a, axis=-1, keepdims=True)
    # sin(t)/t with a series for tiny angles
    small = theta < 1e-8
    safe = np.where(small, 1.0, theta)
    sinc = np.where(small, 1.0 - theta**2 / 6.0, np.sin(safe) / safe)
    return np.concatenate([np.cos(theta), sinc * a], axis=-1)


def log_map(q):
    """Inverse of :func:`exp_map` on the branch ``|a| <= pi``."""
    q = np.asarray(q, dtype=float)
    w = np.clip(q[..., :1], -1.0, 1.0)
    v = q[..., 1:]
    s = np.linalg.norm(v, axis=-1, keepdims=True)
    theta = np.arctan2(s, w)
    small = s < 1e-12
    factor = np.where(small, 1.0, theta / np.where(small, 1.0, s))
    return factor * v


def transverse_project(e, b):
    """Component of ``b`` orthogonal to the unit vector ``e``.

    Equals ``-1/4 [e, [e, b]]``; the longitudinal part is ``b`` minus this.
    """
    e = np.asarray(e, dtype=float)
    b = np.asarray(b, dtype=float)
    if not np.all(np.abs(np.linalg.norm(e, axis=-1) - 1.0) <= UNIT_TOL):
        raise ValueError("transverse_project needs a unit direction e")
    return b - inner(b, e)[..., None] * e


def longitudinal_project(e, b):
    e = np.asarray(e, dtype=float)
    return inner(b, e)[..., None] * e


def random_su2(rng, shape=()):
    return rng.normal(size=tuple(shape) + (3,))


def random_gauge(rng, shape=()):
    return qnormalize(rng.normal(size=tuple(shape) + (4,)))
