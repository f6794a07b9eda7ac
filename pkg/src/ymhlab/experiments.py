"""Config-driven sweeps, the identity suite and plot-description output."""

from __future__ import annotations

import configparser
import logging
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import boundary as bdry
from . import charges as chg
from . import dec
from . import energies
from . import gauge
from . import hopf
from . import io
from . import optimize as opt
from . import su2 as alg
from .energies import EnergyReport, Params

log = logging.getLogger(__name__)

MODES = ("cymh_eps_sweep", "rtau_tau_sweep_down", "rtau_tau_sweep_up", "single_minimize", "identity_suite")
SWEEP_MAX_N = 64
SINGLE_MAX_N = 128


class ConfigError(ValueError):
    pass


# -- configuration -------------------------------------------------------------------

def _floats(text):
    vals = [float(t) for t in str(text).replace(";", ",").split(",") if t.strip()]
    return tuple(vals)


def _scalar(text):
    t = str(text).strip()
    for cast in (int, float):
        try:
            return cast(t)
        except ValueError:
            pass
    if t.lower() in ("true", "false"):
        return t.lower() == "true"
    return t


@dataclass
class ExperimentConfig:
    mode: str = "single_minimize"
    n: int = 16
    boundary: str = "constant"
    boundary_params: dict = field(default_factory=dict)
    eps: tuple = (0.4, 0.2, 0.1)
    tau: tuple = (1.0,)
    lam: float = 1.0
    mu: float = 1.0
    energy: str = "cymh"  # single_minimize only
    out: str = "runs"
    seed: int = 0
    max_iter: int = 20_000
    gtol: float = 1e-6
    time_limit: float | None = None
    spot_check: bool = False
    resolutions: tuple = (16, 32)  # identity_suite only

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if not 8 <= int(self.n) <= SINGLE_MAX_N:
            raise ConfigError(f"n = {self.n} outside [8, {SINGLE_MAX_N}]")
        if self.mode.endswith("sweep") or "_sweep_" in self.mode:
            if self.n > SWEEP_MAX_N:
                raise ConfigError(f"sweeps are capped at n = {SWEEP_MAX_N}")
        if any(not e > 0 for e in self.eps) or not self.eps:
            raise ConfigError("eps values must be positive")
        if any(not t > 0 for t in self.tau) or not self.tau:
            raise ConfigError("tau values must be positive")
        if self.lam < 0 or self.mu < 0:
            raise ConfigError("lam and mu must be nonnegative")
        if self.energy not in ("cymh", "rtau"):
            raise ConfigError("energy must be cymh or rtau")
        if self.boundary not in bdry.NAMES:
            raise ConfigError(f"unknown boundary data {self.boundary!r}")
        for r in self.resolutions:
            if not 8 <= int(r) <= SINGLE_MAX_N:
                raise ConfigError(f"resolution {r} outside [8, {SINGLE_MAX_N}]")

    def schedule(self) -> opt.Schedule:
        return opt.Schedule(max_iter=int(self.max_iter), gtol=float(self.gtol), time_limit=self.time_limit)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        vals = {f.name: getattr(self, f.name) for f in fields(self)}
        vals.update({k: v for k, v in kw.items() if v is not None})
        return ExperimentConfig(**vals)


_SECTION_KEYS = {
    "experiment": {"mode", "n", "out", "seed", "energy", "spot_check", "resolutions"},
    "parameters": {"eps", "tau", "lam", "mu"},
    "solver": {"max_iter", "gtol", "time_limit"},
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse the sectioned ``key = value`` format documented in the README."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from None
    kw: dict = {}
    for sec in cp.sections():
        if sec == "boundary":
            items = dict(cp[sec])
            if "name" not in items:
                raise ConfigError("[boundary] needs a name")
            kw["boundary"] = items.pop("name").strip()
            kw["boundary_params"] = {k: _scalar(v) for k, v in items.items()}
            continue
        if sec not in _SECTION_KEYS:
            raise ConfigError(f"unknown section [{sec}]")
        for k, v in cp[sec].items():
            if k not in _SECTION_KEYS[sec]:
                raise ConfigError(f"unknown key {k!r} in [{sec}]")
            kw[k] = v
    try:
        if "n" in kw:
            kw["n"] = int(kw["n"])
        if "seed" in kw:
            kw["seed"] = int(kw["seed"])
        if "max_iter" in kw:
            kw["max_iter"] = int(kw["max_iter"])
        for k in ("lam", "mu", "gtol"):
            if k in kw:
                kw[k] = float(kw[k])
        if "time_limit" in kw:
            t = kw["time_limit"].strip().lower()
            kw["time_limit"] = None if t in ("", "none") else float(t)
        for k in ("eps", "tau"):
            if k in kw:
                kw[k] = _floats(kw[k])
        if "resolutions" in kw:
            kw["resolutions"] = tuple(int(v) for v in _floats(kw["resolutions"]))
        if "spot_check" in kw:
            kw["spot_check"] = str(kw["spot_check"]).strip().lower() in ("1", "true", "yes", "on")
        if "energy" in kw:
            kw["energy"] = kw["energy"].strip()
        if "mode" in kw:
            kw["mode"] = kw["mode"].strip()
    except ValueError as e:
        raise ConfigError(f"bad value: {e}") from None
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


# -- sweep rows --------------------------------------------------------------------------

@dataclass
class SweepRow:
    """One parameter point of a sweep.

    ``reference_bcl`` is ``(1/8) int |du|^2 + pi L`` of the row's normalized
    ``u``; ``reference_hopf`` the S^3 Dirichlet value; ``envelope`` the least
    R_tau at this tau over all configurations of the sweep (tau sweeps only).
    """

    param: str
    value: float
    status: str = "ok"
    term_A: float = np.nan
    term_cov: float = np.nan
    term_curv: float = np.nan
    term_pot: float = np.nan
    term_du: float = np.nan
    term_eta: float = np.nan
    term_defect: float = np.nan
    total: float = np.nan
    el_residual: float = np.nan
    charges: int = -1
    L: float = np.nan
    reference_bcl: float = np.nan
    reference_hopf: float = np.nan
    envelope: float = np.nan
    iterations: int = 0
    reason: str = ""
    cold_total: float = np.nan
    wall_time: float = 0.0

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def values(self):
        return [getattr(self, c) for c in self.columns()]

    def fill_report(self, rep: EnergyReport):
        for k in ("term_A", "term_cov", "term_curv", "term_pot", "term_du", "term_eta", "term_defect"):
            setattr(self, k, getattr(rep, k))
        self.total = rep.total


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list
    csv_path: Path | None = None
    plot_path: Path | None = None
    configs: list = field(default_factory=list, repr=False)

    @property
    def failed(self) -> bool:
        return any(r.status not in ("ok", "pass") for r in self.rows)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows], dtype=float)


# -- initial data ------------------------------------------------------------------------

def boundary_for(cfg: ExperimentConfig, cx):
    return bdry.generate_boundary_data(cfg.boundary, cx, **cfg.boundary_params)


def initial_config(cx, data) -> gauge.FieldConfig:
    """Extension of the boundary data with the reference connection."""
    u = opt._normalize_u(cx, data.extend(cx))
    phi = data.sample(cx)
    u[cx.boundary_mask] = phi
    A = gauge.reference_connection(dec.Cochain(cx, 0, u)).data
    return gauge.FieldConfig(cx, u, A, phi=phi)


def _relaxed(cx, u):
    un = opt._normalize_u(cx, u)
    return energies.bcl_relaxed_energy(dec.Cochain(cx, 0, un), lenient=True)


def _row_from(cx, st, p, mode, row, trace):
    rep = energies.cymh_energy(st, p) if mode == "cymh" else energies.rtau_energy(st.u_form, st.eta, p.tau)
    row.fill_report(rep)
    row.el_residual = opt.el_residual(st, p, mode)["total"]
    row.iterations = trace.iterations
    row.reason = trace.reason
    # a line-search underflow means the energy is flat to roundoff along -grad
    if trace.reason not in ("converged", "line_search_underflow"):
        row.status = f"not_converged:{trace.reason}"
    try:
        rel = _relaxed(cx, st.u)
        row.charges = rel.charges
        row.L = rel.L
        row.reference_bcl = rel.scaled
    except ValueError as e:
        row.status = f"charges_failed:{e}"


# -- sweeps ----------------------------------------------------------------------------

def _cymh_eps_sweep(cfg, cx, data, sched):
    rows, states = [], []
    st = initial_config(cx, data)
    for eps in cfg.eps:
        row = SweepRow("eps", eps)
        t0 = time.perf_counter()
        p = Params(eps=eps, lam=cfg.lam, mu=cfg.mu)
        try:
            st, tr = opt.minimize(st, p, "cymh", sched)
            _row_from(cx, st, p, "cymh", row, tr)
            states.append(st.copy())
        except Exception as e:  # noqa: BLE001 - recorded per row
            row.status = f"failed:{type(e).__name__}:{e}"
            log.warning("row eps=%g failed: %s", eps, e)
        row.wall_time = time.perf_counter() - t0
        rows.append(row)
    if cfg.spot_check and rows and rows[-1].status == "ok":
        p = Params(eps=cfg.eps[-1], lam=cfg.lam, mu=cfg.mu)
        cold, _ = opt.minimize(initial_config(cx, data), p, "cymh", sched)
        rows[-1].cold_total = energies.cymh_energy(cold, p).total
    return rows, states


def _rtau_start(cx, st, ref, tau):
    """Warm start, replaced by the Hopf reference pair when that is lower at this tau."""
    p = Params(tau=tau)
    if ref is None or st is None:
        return st if st is not None else ref
    return ref.copy() if opt.energy_value(ref, p, "rtau") < opt.energy_value(st, p, "rtau") else st


def hopf_reference_state(cx, data, sched=None):
    href = opt.hopf_reference(cx, data.sample(cx), sched=sched)
    ref = gauge.FieldConfig(cx, href.u.data.copy(), cx.zeros(1, (3,)), eta=href.eta.copy(), phi=data.sample(cx))
    ref.A = gauge.connection_from_eta(ref.u_form, ref.eta).data
    return href, ref


def _rtau_sweep(cfg, cx, data, sched, direction):
    taus = sorted(cfg.tau, reverse=(direction == "down"))
    href, ref = hopf_reference_state(cx, data)
    rows, states = [], []
    st = None
    for tau in taus:
        row = SweepRow("tau", tau)
        row.reference_hopf = href.energy
        t0 = time.perf_counter()
        p = Params(tau=tau)
        try:
            st0 = _rtau_start(cx, st, ref, tau) if direction == "up" else (st if st is not None else ref)
            st, tr = opt.minimize(st0, p, "rtau", sched)
            _row_from(cx, st, p, "rtau", row, tr)
            states.append(st.copy())
        except Exception as e:  # noqa: BLE001
            row.status = f"failed:{type(e).__name__}:{e}"
            log.warning("row tau=%g failed: %s", tau, e)
        row.wall_time = time.perf_counter() - t0
        rows.append(row)
    # envelope: least R_tau over every configuration the sweep produced
    pool = states + [ref]
    for row in rows:
        vals = [energies.rtau_energy(s.u_form, s.eta, row.value).total for s in pool]
        row.envelope = float(min(vals))
    if cfg.spot_check and rows and rows[-1].status == "ok":
        p = Params(tau=taus[-1])
        start = ref if direction == "down" else initial_rtau_state(cx, data)
        cold, _ = opt.minimize(start, p, "rtau", sched)
        rows[-1].cold_total = energies.rtau_energy(cold.u_form, cold.eta, p.tau).total
    return rows, states


def initial_rtau_state(cx, data):
    st = initial_config(cx, data)
    st.eta = cx.zeros(1)
    return st


def _single(cfg, cx, data, sched):
    row_param = "eps" if cfg.energy == "cymh" else "tau"
    val = cfg.eps[0] if cfg.energy == "cymh" else cfg.tau[0]
    row = SweepRow(row_param, val)
    t0 = time.perf_counter()
    p = Params(eps=cfg.eps[0], lam=cfg.lam, mu=cfg.mu, tau=cfg.tau[0])
    st = initial_config(cx, data) if cfg.energy == "cymh" else initial_rtau_state(cx, data)
    states = []
    try:
        st, tr = opt.minimize(st, p, cfg.energy, sched)
        _row_from(cx, st, p, cfg.energy, row, tr)
        states.append(st)
    except Exception as e:  # noqa: BLE001
        row.status = f"failed:{type(e).__name__}:{e}"
    row.wall_time = time.perf_counter() - t0
    return [row], states


def run_sweep(cfg: ExperimentConfig, write: bool = True) -> SweepResult:
    """Run the configured experiment; writes ``<mode>.csv`` and ``<mode>.gp`` under ``cfg.out``."""
    if cfg.mode == "identity_suite":
        rep = identity_suite(resolutions=cfg.resolutions, seed=cfg.seed)
        res = SweepResult(cfg, rep)
        if write:
            out = io.ensure_dir(cfg.out)
            res.csv_path = out / "identity_suite.csv"
            io.write_csv(res.csv_path, IdentityRow.columns(), [r.values() for r in rep])
        return res
    cx = dec.CubicalComplex(int(cfg.n))
    data = boundary_for(cfg, cx)
    sched = cfg.schedule()
    if cfg.mode == "cymh_eps_sweep":
        rows, states = _cymh_eps_sweep(cfg, cx, data, sched)
    elif cfg.mode == "rtau_tau_sweep_up":
        rows, states = _rtau_sweep(cfg, cx, data, sched, "up")
    elif cfg.mode == "rtau_tau_sweep_down":
        rows, states = _rtau_sweep(cfg, cx, data, sched, "down")
    else:
        rows, states = _single(cfg, cx, data, sched)
    res = SweepResult(cfg, rows, configs=states)
    if write:
        out = io.ensure_dir(cfg.out)
        res.csv_path = out / f"{cfg.mode}.csv"
        io.write_csv(res.csv_path, SweepRow.columns(), [r.values() for r in rows])
        res.plot_path = out / f"{cfg.mode}.gp"
        write_plot(res.plot_path, res)
    return res


def _limit_value(res: SweepResult):
    rows = [r for r in res.rows if np.isfinite(r.total)]
    if not rows:
        return np.nan, ""
    if res.config.mode == "rtau_tau_sweep_up":
        return rows[-1].reference_hopf, "S^3 Dirichlet reference"
    return rows[-1].reference_bcl, "(1/8)|du|^2 + pi L"


def write_plot(path, res: SweepResult):
    """gnuplot script: total energy against the parameter with the limit as a horizontal line."""
    cols = SweepRow.columns()
    xcol = cols.index("value") + 1
    ycol = cols.index("total") + 1
    lim, label = _limit_value(res)
    csv_name = Path(res.csv_path).name if res.csv_path else f"{res.config.mode}.csv"
    param = res.rows[0].param if res.rows else "value"
    lines = [
        f"# {res.config.mode}, n = {res.config.n}, boundary = {res.config.boundary}",
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set logscale x",
        f"set xlabel '{param}'",
        "set ylabel 'energy'",
        f"limit = {lim!r}" if np.isfinite(lim) else "limit = NaN",
        f"plot '{csv_name}' using {xcol}:{ycol} with linespoints title 'total', \\",
        f"     limit with lines dashtype 2 title '{label}'",
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# -- identity suite -------------------------------------------------------------------

@dataclass
class IdentityRow:
    name: str
    value: float
    tolerance: float
    kind: str  # "max_error" or "order"
    status: str
    note: str = ""

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def values(self):
        return [getattr(self, c) for c in self.columns()]

    @property
    def passed(self):
        return self.status == "pass"


def smooth_unit(X):
    """A smooth unit field on the ball used by the identity checks."""
    v = np.stack([np.sin(1.3 * X[..., 0] + 0.4 * X[..., 2]),
                  np.cos(0.9 * X[..., 1]) * np.sin(X[..., 0] + 0.5),
                  1.0 + 0.3 * X[..., 1] * X[..., 2]], -1)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def smooth_connection(cx):
    def comp(X, a):
        return np.stack([np.sin(X[..., 1] + a), np.cos(X[..., 2] * (a + 1)), X[..., 0] * X[..., 1] + 0.2 * a], -1)
    A = np.stack([comp(cx.edge_midpoints[a], a) for a in range(3)])
    return dec.masked(cx.edge_mask, A)


def smooth_gauge(X):
    w = np.stack([0.7 * np.sin(X[..., 0] + X[..., 1]), 0.5 * np.cos(2 * X[..., 2]), 0.3 * X[..., 0] * X[..., 2]], -1)
    return alg.exp_map(w)


def smooth_eta(cx):
    def comp(X):
        return np.stack([np.sin(X[..., 1] + X[..., 2]), X[..., 0] ** 2, np.cos(X[..., 0])])
    eta = np.stack([comp(cx.edge_midpoints[a])[a] for a in range(3)])
    return dec.masked(cx.edge_mask, eta)


def smooth_s3(X):
    v = np.stack([np.cos(X[..., 0] + 0.3), np.sin(0.8 * X[..., 1] + X[..., 2]),
                  0.5 + X[..., 0] * X[..., 2], np.sin(X[..., 2] - X[..., 1])], -1)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def order(errors, resolutions):
    """Least-squares slope of ``log err`` against ``log h``."""
    e = np.asarray(errors, dtype=float)
    h = 2.0 / np.asarray(resolutions, dtype=float)
    if np.any(e <= 0) or len(e) < 2:
        return np.inf if np.all(e == 0) else np.nan
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def _sup(a, mask):
    v = a[mask]
    if v.ndim > 1:
        v = np.linalg.norm(v, axis=-1)
    return float(np.max(np.abs(v))) if v.size else 0.0


def resolution_errors(n):
    """All refinement-measured errors at resolution ``n`` (keys shared with the suite)."""
    cx = dec.CubicalComplex(n)
    u = dec.masked(cx.vertex_mask, smooth_unit(cx.vertex_pos))
    uc = dec.Cochain(cx, 0, u)
    du = dec.d0(cx, u)
    W = dec.wedge11_array(cx, du, du, "bracket")
    Aref = gauge.reference_connection(uc).data
    Fref = gauge.curvature_array(cx, Aref)
    fm = cx.inner_face_mask
    out = {}
    out["d_Aref_u"] = _sup(gauge.cov_derivative_array(cx, u, Aref), cx.edge_mask)
    out["curv_3_8"] = _sup(Fref - 0.375 * W, fm)
    out["curv_minus_1_8"] = _sup(Fref + 0.125 * W, fm)
    p = Params(eps=0.5, lam=1.0, mu=1.0)
    cy = energies.cymh_energy(gauge.FieldConfig(cx, u, Aref), p).total
    lit = 0.125 * dec.l2_array(cx, du) + 9.0 / 16.0 * p.mu * p.eps * dec.l2_array(cx, W)
    out["fadeev_9_16"] = abs(cy - lit) / abs(lit)
    out["fadeev_1_128"] = abs(cy - energies.fadeev_energy(uc, p)) / abs(cy)

    A = smooth_connection(cx)
    g = smooth_gauge(cx.vertex_pos)
    st = gauge.FieldConfig(cx, u, A)
    sg = gauge.gauge_transform(st, g)
    F = gauge.curvature_array(cx, A)
    Fg = gauge.curvature_array(cx, sg.A)
    out["gauge_covariance"] = _sup(Fg - alg.adjoint(gauge.face_gauge(cx, g), F), cx.face_mask)
    e0 = energies.cymh_energy(st, p)
    e1 = energies.cymh_energy(sg, p)
    out["ymh_invariance"] = abs(e1.ymh - e0.ymh) / abs(e0.ymh)

    eta = smooth_eta(cx)
    Ae = gauge.connection_from_eta(uc, eta).data
    Fe = gauge.curvature_array(cx, Ae)
    P = gauge.pullback_area_array(cx, u)
    uf = dec.v2f(cx, u)
    uf = uf / np.maximum(np.linalg.norm(uf, axis=-1, keepdims=True), 1e-300)
    out["gaucha"] = _sup(Fe - 0.5 * (dec.d1(cx, eta) - P)[..., None] * uf, fm)
    out["dAsqu"] = gauge.dada_residual(uc, dec.Cochain(cx, 1, A))
    out["bianchi"] = gauge.bianchi_residual(dec.Cochain(cx, 1, A))

    w = dec.masked(cx.vertex_mask, smooth_s3(cx.vertex_pos))
    S = hopf.S3Field(cx, w)
    uh = S.project()
    al = hopf.alpha_pullback_array(cx, w)
    Ph = gauge.pullback_area_array(cx, uh.data)
    out["dalpha_half_pullback"] = _sup(dec.d1(cx, al) - 0.5 * Ph, cx.face_mask)
    eh = hopf.compatible_eta(uh)
    lift = hopf.hopf_lift(uh, eh)
    out["lift_identity"] = abs(hopf.lift_energy_defect(uh, eh, lift))
    out["lift_roundtrip"] = float(np.max(np.abs(lift.project().data - uh.data)))
    R = [energies.rtau_energy(uh, eh, t).total for t in (0.1, 1.0, 100.0)]
    out["rtau_tau_independence"] = float(max(R) - min(R)) / abs(R[0])
    return out


# (name, kind, tolerance, note); order rows pass when the slope is >= tolerance
_ORDER_ROWS = [
    ("d_Aref_u", 0.9, "plain edge average"),
    ("curv_3_8", 0.9, "literal coefficient 3/8; known defect, the consistent coefficient is -1/8"),
    ("curv_minus_1_8", 0.9, "F_Aref + [du^du]/8"),
    ("gauge_covariance", 0.9, ""),
    ("ymh_invariance", 0.9, ""),
    ("gaucha", 0.9, ""),
    ("dAsqu", 0.9, "residual of d_A d_A u - [F_A, u]"),
    ("dalpha_half_pullback", 0.9, ""),
    ("lift_identity", 0.9, "|du|^2 + |eta|^2 - 4|d lift|^2 integrated"),
]
_KNOWN_DEFECTS = {"curv_3_8", "fadeev_9_16"}


def identity_suite(resolutions=(16, 32), seed: int = 0, bracket=None, samples: int = 10_000):
    """Pass/fail table of the algebraic, calculus and refinement identities.

    ``bracket`` replaces the Lie bracket in the algebra rows (mutation checks).
    Rows flagged as known defects carry the coefficient as printed in the
    source and are expected to fail; they do not count towards ``all_pass``.
    """
    rows = []
    br = bracket or alg.bracket
    rng = np.random.default_rng(seed)
    a, b, c = (rng.normal(size=(samples, 3)) for _ in range(3))

    def row(name, val, tol, kind="max_error", note=""):
        ok = (val < tol) if kind == "max_error" else (val >= tol)
        status = "pass" if ok else ("known_defect" if name in _KNOWN_DEFECTS else "fail")
        rows.append(IdentityRow(name, float(val), tol, kind, status, note))

    jac = br(a, br(b, c)) + br(b, br(c, a)) + br(c, br(a, b))
    row("jacobi", np.max(np.abs(jac)) / max(1.0, np.max(np.abs(a)) ** 3), 1e-13 * 10, note="scaled by |a|^3")
    bs = alg.inner(a, br(b, c)) - alg.inner(br(a, b), c)
    row("bra_sca", np.max(np.abs(bs)), 1e-12)
    row("antisymmetry", np.max(np.abs(br(a, b) + br(b, a))), 1e-13)
    row("bracket_cross", np.max(np.abs(br(a, b) - 2.0 * np.cross(a, b))), 1e-12)

    n = max(resolutions)
    cx = dec.CubicalComplex(n)
    f = dec.masked(cx.vertex_mask, rng.normal(size=cx.vertex_pos.shape[:-1]))
    B = dec.masked(cx.edge_mask, rng.normal(size=cx.edge_mask.shape))
    dd0 = dec.d1(cx, dec.d0(cx, f))
    dd1 = dec.d2(cx, dec.d1(cx, B))
    scale = max(np.max(np.abs(dec.d0(cx, f))), 1.0) / cx.h
    row("d_squared", max(np.max(np.abs(dd0)), np.max(np.abs(dd1))) / scale, 1e-12)
    lhs = dec.l2_array(cx, dec.d0(cx, f), B)
    rhs = dec.l2_array(cx, f, dec.codifferential(dec.Cochain(cx, 1, B)).data)
    row("adjointness", abs(lhs - rhs) / max(abs(lhs), 1e-300), 1e-12)

    errs = {}
    for r in resolutions:
        for k, v in resolution_errors(int(r)).items():
            errs.setdefault(k, []).append(v)
    for name, tol, note in _ORDER_ROWS:
        row(name, order(errs[name], resolutions), tol, "order", note)
    row("fadeev_9_16", errs["fadeev_9_16"][-1], 0.05, note="literal coefficient 9/16; known defect")
    row("fadeev_1_128", errs["fadeev_1_128"][-1], 0.05, note="consistent coefficient 1/128")
    row("lift_roundtrip", max(errs["lift_roundtrip"]), 1e-8)
    row("rtau_tau_independence", max(errs["rtau_tau_independence"]), 1e-10)
    row("hopf_gradient_norm", _hopf_gradnorm_error(rng), 1e-10)

    # duality gap of the minimal connection on the dipole family
    gap = 0.0
    ncx = dec.CubicalComplex(min(resolutions))
    for aa in (0.3, 0.6):
        uu = dipole_map(ncx, aa)
        L1 = chg.minimal_connection_matching(chg.locate_charges(dec.Cochain(ncx, 0, uu)))
        L2 = chg.minimal_connection_dual_lp(dec.Cochain(ncx, 0, uu))
        gap = max(gap, abs(L1 - L2))
    row("duality_gap_L", gap, 2 * ncx.h, note=f"n = {min(resolutions)}")
    return rows


def all_pass(rows) -> bool:
    return all(r.status in ("pass", "known_defect") for r in rows)


def _hopf_gradnorm_error(rng):
    w = rng.normal(size=(1000, 4))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    return float(np.max(np.abs(hopf.hopf_gradient_norm(w) - 2.0 * np.sqrt(2.0))))


def dipole_map(cx, a):
    """Dense unit dipole field with charges +1 at ``(0,0,a)`` and -1 at ``(0,0,-a)``.

    The charges are shifted off the lattice lines by a quarter cell so that no
    edge has antipodal endpoint values.
    """
    q = 0.25 * cx.h
    pp = np.array([q, q, a])
    pm = np.array([q, q, -a])
    X = cx.vertex_pos
    dp, dm = X - pp, X - pm
    v = dp / np.linalg.norm(dp, axis=-1, keepdims=True) ** 3 - dm / np.linalg.norm(dm, axis=-1, keepdims=True) ** 3
    return dec.masked(cx.vertex_mask, v / np.linalg.norm(v, axis=-1, keepdims=True))
