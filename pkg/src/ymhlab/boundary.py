"""Degree-zero boundary data on the unit sphere and their sampled traces."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import hopf
from .dec import CubicalComplex, masked

NAMES = ("constant", "equatorial_wrap", "dipole_trace", "random_smooth")


def _normalize(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


@dataclass
class BoundaryData:
    """A unit field on S^2 (``func``) with an optional smooth extension into the ball."""

    name: str
    params: dict
    func: Callable[[np.ndarray], np.ndarray]
    extension: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))

    def sample(self, cx: CubicalComplex) -> np.ndarray:
        """Values at the radial projections of the boundary vertices."""
        return self.func(cx.boundary_normal[cx.boundary_mask])

    def extend(self, cx: CubicalComplex) -> np.ndarray:
        """Dense unit 0-form: the smooth extension if known, else the radial one.

        Boundary vertices always carry the sampled trace.
        """
        X = cx.vertex_pos
        if self.extension is not None:
            u = self.extension(X)
        else:
            u = radial_extension(self.func, X)
        u = masked(cx.vertex_mask, u)
        u[cx.boundary_mask] = self.sample(cx)
        return u


def radial_extension(func, X):
    r = np.linalg.norm(X, axis=-1, keepdims=True)
    y = np.where(r > 1e-12, X / np.where(r > 1e-12, r, 1.0), np.array([0.0, 0.0, 1.0]))
    return func(y)


def constant_data(value=(0.0, 0.0, 1.0)):
    v = _normalize(np.asarray(value, dtype=float))
    f = lambda x: np.broadcast_to(v, np.shape(x)[:-1] + (3,)).copy()
    return BoundaryData("constant", {"value": tuple(v)}, f, f)


def equatorial_wrap(k: int = 1):
    k = int(k)

    def f(x):
        t = k * np.pi * x[..., 2]
        return np.stack([np.cos(t), np.sin(t), np.zeros_like(t)], axis=-1)

    return BoundaryData("equatorial_wrap", {"k": k}, f, f)


def dipole_field(a: float):
    """Normalized field of a +1 source at ``(0,0,a)`` and a -1 source at ``(0,0,-a)``."""
    pp = np.array([0.0, 0.0, a])
    pm = -pp

    def f(x):
        dp = x - pp
        dm = x - pm
        rp = np.linalg.norm(dp, axis=-1, keepdims=True)
        rm = np.linalg.norm(dm, axis=-1, keepdims=True)
        # the clamp keeps r^3 representable when a vertex sits on a pole
        v = dp / np.maximum(rp, 1e-100) ** 3 - dm / np.maximum(rm, 1e-100) ** 3
        n = np.linalg.norm(v, axis=-1, keepdims=True)
        return np.where(n > 0, v / np.where(n > 0, n, 1.0), np.array([0.0, 0.0, 1.0]))

    return f


def dipole_trace(a: float = 0.3):
    if not 0.0 < a < 1.0:
        raise ValueError("dipole offset must lie in (0, 1)")
    f = dipole_field(a)
    return BoundaryData("dipole_trace", {"a": float(a)}, f, f)


def random_smooth(seed: int = 0, bandlimit: int = 2, amplitude: float = 0.5):
    """``normalize(e3 + w)`` with ``w`` a random trigonometric field scaled to ``max |w| = amplitude``.

    The maximum is taken over a grid of the cube containing the ball, so with
    ``amplitude < 1`` the field never reaches ``-e3``: the trace has degree 0
    and the same formula is a smooth extension into the ball.
    """
    if not 0.0 < amplitude < 1.0:
        raise ValueError("amplitude must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    ks = np.array([(a, b, c) for a in range(-bandlimit, bandlimit + 1)
                   for b in range(-bandlimit, bandlimit + 1)
                   for c in range(-bandlimit, bandlimit + 1)
                   if 0 < abs(a) + abs(b) + abs(c) <= bandlimit], dtype=float)
    coef = rng.normal(size=(len(ks), 2, 3))

    def w_of(x, cf):
        ph = np.pi * 0.5 * (x @ ks.T)  # (..., K)
        return np.cos(ph) @ cf[:, 0, :] + np.sin(ph) @ cf[:, 1, :]

    g = np.linspace(-1.0, 1.0, 33)
    grid = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3)
    peak = np.max(np.linalg.norm(w_of(grid, coef), axis=-1))
    # 2% margin for the sampling of the maximum
    coef *= amplitude / (1.02 * peak)

    def f(x):
        return _normalize(np.array([0.0, 0.0, 1.0]) + w_of(x, coef))

    return BoundaryData("random_smooth", {"seed": int(seed), "bandlimit": int(bandlimit),
                                          "amplitude": float(amplitude)}, f, f)


def generate_boundary_data(name: str, cx: CubicalComplex | None = None, check=True, **params):
    """Build a named degree-zero boundary datum (and verify its degree on ``cx``)."""
    makers = {
        "constant": constant_data,
        "equatorial_wrap": equatorial_wrap,
        "dipole_trace": dipole_trace,
        "random_smooth": random_smooth,
    }
    if name not in makers:
        raise ValueError(f"unknown boundary data {name!r}; expected one of {NAMES}")
    data = makers[name](**params)
    if check and cx is not None:
        deg = hopf.boundary_degree(cx, data.sample(cx))
        if deg != 0:
            raise ValueError(f"boundary data {name!r} has degree {deg}, expected 0")
    return data
