import re
from pathlib import Path

import pytest

from ancilla_factory.report import (
    CurveSpec,
    curve_to_csv,
    failure_curve,
    load_scenario,
    overhead_table,
    render_failure_curves,
    render_table_chart,
    rows_to_csv,
)

DATA = Path(__file__).parent / "data"


def test_scenario_preset_default():
    sc = load_scenario(None)
    assert sc.K == 2150 and sc.Q == 2e10


def test_golden_tables_are_byte_stable():
    sc = load_scenario(None)
    for mode in ("serial", "parallel"):
        csv = rows_to_csv(overhead_table(sc, mode))
        golden = (DATA / f"golden_tables_{mode}.csv").read_text()
        assert csv == golden


def test_table_units_pin_published_rows():
    sc = load_scenario(None)
    serial = {r.label: r for r in overhead_table(sc, "serial")}
    row = serial["[[23,1,7]]"]
    assert row.gamma == pytest.approx(2.2, rel=0.10)
    assert row.epsilon == pytest.approx(0.05, rel=0.10)
    assert row.N == pytest.approx(1.5265)           # exact per formula, units 1e5
    assert row.parallelism == pytest.approx(0.645)  # 3K in units of 1e4
    assert row.T / 0.3 < 5                          # published T within factor 5


def test_concat_reference_row_is_marked():
    sc = load_scenario(None)
    rows = overhead_table(sc, "serial")
    assert rows[0].label == "concat-7^3"
    assert "quoted" in rows[0].flags


def test_csv_cells_are_six_significant_digits():
    import csv as csvmod
    import io

    sc = load_scenario(None)
    text = rows_to_csv(overhead_table(sc, "serial"))
    rows = list(csvmod.reader(io.StringIO(text)))
    assert rows[0] == ["label", "gamma_1e-6", "epsilon_1e-6", "N_1e5",
                       "T_1e16", "parallelism_1e4", "flags"]
    cell = re.compile(r"^\d\.\d{5}e[+-]\d{2}$")
    for row in rows[1:]:
        assert len(row) == 7
        for token in row[1:6]:
            assert cell.match(token), token


def test_curves_monotone_and_positive():
    spec = CurveSpec("css23", "serial", 0.5, 1e-7, 1e-3, 25)
    curve = failure_curve(spec)
    gammas = [g for g, _ in curve]
    ps = [p for _, p in curve]
    assert gammas == sorted(gammas) and gammas[0] > 0
    assert all(b >= a for a, b in zip(ps, ps[1:]))
    assert ps[0] > 0


def test_curve_csv_shape():
    spec = CurveSpec("css7", "serial", 0.5, 1e-6, 1e-4, 5)
    text = curve_to_csv(failure_curve(spec))
    lines = text.splitlines()
    assert lines[0] == "gamma,P"
    assert len(lines) == 6


def test_curve_spec_validation():
    with pytest.raises(ValueError):
        CurveSpec("css7", "serial", 0.5, 0.0, 1e-4, 5)
    with pytest.raises(ValueError):
        CurveSpec("css7", "serial", 0.5, 1e-3, 1e-4, 5)
    with pytest.raises(ValueError):
        CurveSpec("css7", "serial", 0.5, 1e-6, 1e-4, 1)


def test_render_figures(tmp_path):
    spec = CurveSpec("css7", "serial", 0.5, 1e-6, 1e-4, 9)
    curves = {"css7": failure_curve(spec)}
    png = tmp_path / "fig.png"
    render_failure_curves(curves, "serial", 0.5, png)
    assert png.stat().st_size > 1000
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    sc = load_scenario(None)
    rows = {m: overhead_table(sc, m) for m in ("serial", "parallel")}
    chart = tmp_path / "tables.png"
    render_table_chart(rows, chart)
    assert chart.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_tables_with_gamma0_compute_concat_column():
    from ancilla_factory.model import Scenario

    sc = Scenario(K=2150, Q=2e10, gamma0=3.0853e-6)
    rows = overhead_table(sc, "serial")
    assert rows[0].label == "concat-7^3"
    assert "computed from gamma0" in rows[0].flags
    assert rows[0].N == pytest.approx(13.0, rel=0.01)  # units of 1e5


def test_curve_hits_published_operating_point():
    # the serial css23 curve evaluated right at the solved operating point
    spec = CurveSpec("css23", "serial", 0.5, 2.2e-6, 1e-4, 9)
    gamma, p = failure_curve(spec)[0]
    assert gamma == pytest.approx(2.2e-6)
    assert p == pytest.approx(1.9e-13, rel=0.2)
