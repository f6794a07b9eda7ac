"""Plain-text snapshots of cochains and CSV writers for charges, traces and energies."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .dec import Cochain, CubicalComplex

SNAPSHOT_VERSION = 1


def _value_type(data, degree):
    base = 1 if degree in (1, 2) else 0
    extra = data.ndim - base - 3
    if extra == 0:
        return "real", 1
    width = data.shape[-1]
    return {3: "su2", 4: "s3"}.get(width, f"vec{width}"), width


def _element_rows(cx: CubicalComplex, degree, data):
    """Flat element indices (ascending) and their values for the active elements."""
    mask = cx.mask(degree)
    lin = np.flatnonzero(mask.ravel())
    nval = data.shape[len(mask.shape):]
    vals = data.reshape((-1,) + nval)[lin]
    return lin, vals.reshape(len(lin), -1)


def write_snapshot(path, cx: CubicalComplex, degree: int, data, name: str = "field"):
    """One header block of ``# key = value`` lines, then ``index v1 [v2 ...]`` per active element.

    Indices are flat C-order positions in the dense layout (component axis
    first for 1- and 2-forms), so lexicographic order in the axis indices.
    """
    data = np.asarray(data, dtype=float)
    vtype, width = _value_type(data, degree)
    lin, vals = _element_rows(cx, degree, data)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# version = {SNAPSHOT_VERSION}\n")
        f.write(f"# n = {cx.n}\n")
        f.write(f"# h = {cx.h!r}\n")
        f.write(f"# name = {name}\n")
        f.write(f"# degree = {degree}\n")
        f.write(f"# value_type = {vtype}\n")
        f.write(f"# width = {width}\n")
        f.write(f"# count = {len(lin)}\n")
        for i, row in zip(lin, vals):
            f.write(str(int(i)) + " " + " ".join(repr(float(v)) for v in row) + "\n")


def read_snapshot(path):
    """Inverse of :func:`write_snapshot`: returns ``(complex, degree, dense data, header)``."""
    header = {}
    idx, rows = [], []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                k, _, v = line[1:].partition("=")
                header[k.strip()] = v.strip()
                continue
            parts = line.split()
            idx.append(int(parts[0]))
            rows.append([float(p) for p in parts[1:]])
    for key in ("n", "degree", "width"):
        if key not in header:
            raise ValueError(f"snapshot header lacks {key!r}")
    cx = CubicalComplex(int(header["n"]))
    degree = int(header["degree"])
    width = int(header["width"])
    shape = cx.mask(degree).shape
    vshape = () if header.get("value_type") == "real" else (width,)
    out = np.zeros(shape + vshape)
    flat = out.reshape((-1,) + vshape)
    if idx:
        vals = np.array(rows, dtype=float)
        if vals.shape[1] != width:
            raise ValueError("row width does not match the header")
        flat[np.array(idx)] = vals.reshape((len(idx),) + vshape)
    if "count" in header and int(header["count"]) != len(idx):
        raise ValueError("snapshot row count does not match the header")
    return cx, degree, out, header


def save_cochain(path, w: Cochain, name="field"):
    write_snapshot(path, w.complex, w.degree, w.data, name)


def load_cochain(path) -> Cochain:
    cx, degree, data, _ = read_snapshot(path)
    return Cochain(cx, degree, data)


# -- CSV --------------------------------------------------------------------------------

def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        r = csv.reader(f)
        header = next(r)
        return header, [row for row in r]


def write_charges(path, charges):
    write_csv(path, ["x", "y", "z", "degree"], list(charges.rows()))


def write_trace(path, trace):
    write_csv(path, list(trace.COLUMNS), trace.records)


def write_energy_reports(path, reports, extra=None):
    """One row per report; ``extra`` is an optional list of dicts merged in front."""
    from .energies import EnergyReport

    cols = EnergyReport.columns()
    ext = list(extra[0].keys()) if extra else []
    rows = []
    for i, rep in enumerate(reports):
        row = rep.as_row()
        pre = [extra[i][k] for k in ext] if extra else []
        rows.append(pre + [row[c] for c in cols])
    write_csv(path, ext + cols, rows)


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
