import numpy as np
import pytest

from ymhlab import dec, io
from ymhlab.charges import ChargeSet
from ymhlab.dec import Cochain, CubicalComplex
from ymhlab.optimize import MinimizeTrace


@pytest.fixture(scope="module")
def cx():
    return CubicalComplex(6)


@pytest.mark.parametrize("degree,vshape", [(0, ()), (0, (3,)), (0, (4,)), (1, ()), (1, (3,)), (2, (3,)), (3, ())])
def test_snapshot_roundtrip(tmp_path, cx, degree, vshape):
    rng = np.random.default_rng(degree)
    data = dec.masked(cx.mask(degree), rng.normal(size=cx.zeros(degree, vshape).shape))
    path = tmp_path / "f.snap"
    io.write_snapshot(path, cx, degree, data, "f")
    c2, deg2, back, header = io.read_snapshot(path)
    assert c2.n == cx.n and deg2 == degree
    assert np.array_equal(back, data)
    assert header["name"] == "f" and int(header["count"]) == cx.count(degree)
    assert header["value_type"] == {(): "real", (3,): "su2", (4,): "s3"}[vshape]


def test_snapshot_rows_are_ordered(tmp_path, cx):
    path = tmp_path / "u.snap"
    io.save_cochain(path, Cochain(cx, 0, cx.vertex_mask.astype(float)))
    idx = [int(line.split()[0]) for line in path.read_text().splitlines() if not line.startswith("#")]
    assert idx == sorted(idx) and len(idx) == cx.count(0)
    assert io.load_cochain(path).degree == 0


def test_snapshot_errors(tmp_path, cx):
    p = tmp_path / "bad.snap"
    p.write_text("# n = 6\n# degree = 0\n0 1.0\n")
    with pytest.raises(ValueError, match="width"):
        io.read_snapshot(p)
    p.write_text("# n = 6\n# degree = 0\n# width = 1\n# value_type = real\n# count = 5\n0 1.0\n")
    with pytest.raises(ValueError, match="row count"):
        io.read_snapshot(p)
    p.write_text("# n = 6\n# degree = 0\n# width = 3\n# value_type = su2\n0 1.0\n")
    with pytest.raises(ValueError, match="row width"):
        io.read_snapshot(p)


def test_csv_writers(tmp_path):
    cs = ChargeSet([[0.1, 0.0, 0.3], [0.0, 0.0, -0.3]], [1, -1])
    io.write_charges(tmp_path / "c.csv", cs)
    header, rows = io.read_csv(tmp_path / "c.csv")
    assert header == ["x", "y", "z", "degree"]
    assert rows[0] == ["0.1", "0.0", "0.3", "1"] and rows[1][3] == "-1"

    tr = MinimizeTrace()
    tr.add(0, 2.0, 1.0, 0.0, 0.5)
    tr.add(1, 1.5, 0.25, 0.01, 0.1)
    io.write_trace(tmp_path / "t.csv", tr)
    header, rows = io.read_csv(tmp_path / "t.csv")
    assert header == ["iter", "energy", "gradnorm", "step", "residual"]
    assert [float(v) for v in rows[1]] == [1, 1.5, 0.25, 0.01, 0.1]


def test_energy_report_csv(tmp_path):
    from ymhlab.energies import EnergyReport

    reps = [EnergyReport(term_A=1.0, term_cov=2.0), EnergyReport(term_pot=0.5)]
    io.write_energy_reports(tmp_path / "e.csv", reps, extra=[{"eps": 0.4}, {"eps": 0.2}])
    header, rows = io.read_csv(tmp_path / "e.csv")
    assert header[0] == "eps" and header[1:] == EnergyReport.columns()
    assert float(rows[0][header.index("total")]) == pytest.approx(3.0)


def test_fmt():
    assert io._fmt(True) == 1
    assert io._fmt(np.float64(0.1)) == "0.1"
    assert io._fmt(np.int64(3)) == 3
    assert io._fmt("ok") == "ok"
