"""Independent checks shared by the unit and acceptance tests."""

import numpy as np

from ymhlab import dec
from ymhlab import optimize as opt


def unit(cx, v):
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    return dec.masked(cx.vertex_mask, v)


def random_state(cx, rng, amp=0.5):
    """Random unit u, su(2) connection and real eta on the active elements."""
    u = unit(cx, rng.normal(size=cx.vertex_pos.shape))
    A = dec.masked(cx.edge_mask, amp * rng.normal(size=cx.zeros(1, (3,)).shape))
    eta = dec.masked(cx.edge_mask, amp * rng.normal(size=cx.zeros(1).shape))
    return u, A, eta


def central_difference(f, t=1e-5):
    return (f(t) - f(-t)) / (2 * t)


def rel_err(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def gradient_errors(cx, rng, p, t=1e-5):
    """Relative error of each analytic gradient block against a central difference.

    The u-direction is random on interior vertices; for R_tau it is tangent
    to the sphere and the perturbed field is renormalized, which keeps the
    difference quotient symmetric.
    """
    u, A, eta = random_state(cx, rng)
    im = cx.interior_mask
    vu = dec.masked(im, rng.normal(size=u.shape))
    vA = dec.masked(cx.edge_mask, rng.normal(size=A.shape))
    ve = dec.masked(cx.edge_mask, rng.normal(size=eta.shape))
    gu, gA = opt.cymh_gradient(cx, u, A, p)
    out = {
        "cymh_u": rel_err(np.sum(gu * vu), central_difference(lambda s: opt.cymh_value(cx, u + s * vu, A, p), t)),
        "cymh_A": rel_err(np.sum(gA * vA), central_difference(lambda s: opt.cymh_value(cx, u, A + s * vA, p), t)),
    }
    vt = vu - np.sum(vu * u, -1, keepdims=True) * u
    ru, re = opt.rtau_gradient(cx, u, eta, p.tau)
    renorm = lambda s: opt._normalize_u(cx, u + s * vt)
    out["rtau_u"] = rel_err(np.sum(ru * vt), central_difference(lambda s: opt.rtau_value(cx, renorm(s), eta, p.tau), t))
    out["rtau_eta"] = rel_err(np.sum(re * ve), central_difference(lambda s: opt.rtau_value(cx, u, eta + s * ve, p.tau), t))
    return out
