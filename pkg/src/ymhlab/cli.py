"""Command line entry point: ``ymhlab {sweep,minimize,verify,lift,charges}``."""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys
from pathlib import Path

import numpy as np

from . import charges as chg
from . import dec
from . import experiments as ex
from . import hopf
from . import io

log = logging.getLogger("ymhlab")

EXIT_OK, EXIT_FATAL, EXIT_ROWS = 0, 1, 2


def _threads(n):
    if n is None:
        return contextlib.nullcontext()
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # optional; BLAS threads stay at their default
        log.warning("threadpoolctl not installed; --threads ignored")
        return contextlib.nullcontext()
    return threadpool_limits(limits=int(n))


def _config(args, mode=None) -> ex.ExperimentConfig:
    """Config file (or defaults) with the command line flags applied on top."""
    cfg = ex.load_config(args.config) if args.config else ex.ExperimentConfig()
    return cfg.with_overrides(out=args.out, n=args.resolution, seed=args.seed, mode=mode)


def _print_rows(rows, cols):
    print(",".join(cols))
    for r in rows:
        print(",".join(str(io._fmt(getattr(r, c))) for c in cols))


def cmd_sweep(args) -> int:
    cfg = _config(args)
    res = ex.run_sweep(cfg)
    _print_rows(res.rows, ["param", "value", "status", "total", "reference_bcl", "reference_hopf", "wall_time"]
                if cfg.mode != "identity_suite" else ex.IdentityRow.columns())
    if cfg.mode == "identity_suite":
        return EXIT_OK if ex.all_pass(res.rows) else EXIT_ROWS
    return EXIT_ROWS if res.failed else EXIT_OK


def cmd_minimize(args) -> int:
    cfg = _config(args, mode="single_minimize")
    res = ex.run_sweep(cfg)
    _print_rows(res.rows, ex.SweepRow.columns())
    if res.configs:
        out = io.ensure_dir(cfg.out)
        st = res.configs[-1]
        io.write_snapshot(out / "u.snap", st.complex, 0, st.u, "u")
        io.write_snapshot(out / "A.snap", st.complex, 1, st.A, "A")
        if st.eta is not None:
            io.write_snapshot(out / "eta.snap", st.complex, 1, st.eta, "eta")
    return EXIT_ROWS if res.failed else EXIT_OK


def cmd_verify(args) -> int:
    res = (16, 32) if args.resolution is None else (args.resolution, 2 * args.resolution)
    rows = ex.identity_suite(resolutions=res, seed=args.seed or 0)
    if args.out:
        out = io.ensure_dir(args.out)
        io.write_csv(out / "identity_suite.csv", ex.IdentityRow.columns(), [r.values() for r in rows])
    for r in rows:
        print(f"{r.status.upper():12s} {r.name:24s} {r.kind:9s} {r.value:.4g} (tol {r.tolerance:g}) {r.note}")
    return EXIT_OK if ex.all_pass(rows) else EXIT_ROWS


def _field_from(args, cfg):
    if getattr(args, "input", None):
        w = io.load_cochain(args.input)
        if w.degree != 0 or w.data.shape[-1] != 3:
            raise ValueError("input snapshot must be an su(2) 0-form")
        return w
    cx = dec.CubicalComplex(cfg.n)
    data = ex.boundary_for(cfg, cx)
    return ex.initial_config(cx, data).u_form


def cmd_lift(args) -> int:
    cfg = _config(args)
    u = _field_from(args, cfg)
    eta = hopf.compatible_eta(u)
    lift = hopf.hopf_lift(u, eta)
    out = io.ensure_dir(cfg.out)
    io.write_snapshot(out / "lift.snap", u.complex, 0, lift.data, "lift")
    io.write_snapshot(out / "eta.snap", u.complex, 1, eta, "eta")
    rt = float(np.max(np.abs(lift.project().data - u.data)))
    print(f"lift written to {out / 'lift.snap'}; round trip {rt:.3e}; cycle defect {lift.cycle_defect:.3e}")
    return EXIT_OK


def cmd_charges(args) -> int:
    cfg = _config(args)
    u = _field_from(args, cfg)
    cs = chg.locate_charges(u, merge_fractional=args.lenient)
    out = io.ensure_dir(cfg.out)
    io.write_charges(out / "charges.csv", cs)
    L = chg.minimal_connection_matching(cs, boundary_sink=args.lenient)
    print(f"{len(cs)} charges, total degree {cs.total_degree}, L = {L:.6g} (matching)")
    if args.lp:
        print(f"L = {chg.minimal_connection_dual_lp(u):.6g} (dual LP)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ymhlab", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="experiment config file")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--resolution", type=int, help="grid resolution n")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int, help="BLAS thread cap")
        return sp

    common(sub.add_parser("sweep", help="run the configured sweep")).set_defaults(func=cmd_sweep)
    common(sub.add_parser("minimize", help="single minimization")).set_defaults(func=cmd_minimize)
    common(sub.add_parser("verify", help="identity suite")).set_defaults(func=cmd_verify)
    lp = common(sub.add_parser("lift", help="Hopf lift of the extension (or --input)"))
    lp.add_argument("--input", type=Path, help="su(2) 0-form snapshot")
    lp.set_defaults(func=cmd_lift)
    cp = common(sub.add_parser("charges", help="charges and minimal connection"))
    cp.add_argument("--input", type=Path, help="su(2) 0-form snapshot")
    cp.add_argument("--lp", action="store_true", help="also solve the dual linear program")
    cp.add_argument("--lenient", action="store_true", help="merge fractional cells, allow boundary sinks")
    cp.set_defaults(func=cmd_charges)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        with _threads(args.threads):
            return args.func(args)
    except (ex.ConfigError, ValueError, RuntimeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
