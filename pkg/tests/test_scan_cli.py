import io

import pytest

from sqblockade.errors import ConfigError
from sqblockade.scan import (columns, format_cell, grid_points, parse_config, run_point, run_scan,
                             worker_count)
from sqblockade.scan_cli import FIGURES, figure_presets, main, preset_names, preset_text

RESERVOIR = """
[scan]
mode = reservoir_sweep

[fixed]
n_res = 0.01
delta = 0

[axis.m_res]
min = 0
max = 0.1
points = 5

[axis.epsilon]
min = 0.05
max = 0.6
points = 4

[truncation]
dim = 16
"""

GAUSSIAN = """
[scan]
mode = gaussian_sweep

[fixed]
theta = 3.141592653589793
phi = 1.5707963267948966
n_th = 0.005

[axis.alpha]
min = 0.1
max = 2
points = 5

[axis.r]
min = 0.05
max = 1
points = 5
"""


@pytest.mark.parametrize("text,match", [
    ("[scan]\nmode = nope\n", "unknown mode"),
    ("[fixed]\nn_res = 1\n", "mode"),
    (RESERVOIR.replace("delta = 0", "delta = 0\nbogus = 1"), "bogus"),
    (RESERVOIR + "\n[extra]\nx = 1\n", "unknown section"),
    (RESERVOIR.replace("[axis.epsilon]", "[axis.alpha]"), "not a parameter"),
    (RESERVOIR.replace("points = 5", "points = 1"), "points"),
    (RESERVOIR.replace("max = 0.1", "max = inf"), "finite"),
    (RESERVOIR.replace("max = 0.1", "max = abc"), "number"),
    (RESERVOIR.replace("dim = 16", "dim = 1"), "dim"),
    (RESERVOIR.replace("dim = 16", "dim = 3.5"), "integer"),
    (RESERVOIR.replace("delta = 0", "delta = 0\nm_frac = 1"), "m_res or m_frac"),
    (RESERVOIR.replace("delta = 0", "delta = 0\nepsilon = 0.1"), "both fixed and swept"),
    (RESERVOIR.replace("points = 4", "points = 4\nvalues = 1, 2"), "either values"),
    (RESERVOIR.replace("[truncation]", "[tau]\ntau_max = 8\n[truncation]"), "tau"),
    ("[scan]\nmode = reservoir_sweep\n[fixed]\nn_res = 0.1\n", "axis"),
])
def test_config_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_overrides_and_hash():
    a = parse_config(RESERVOIR)
    b = parse_config(RESERVOIR.replace("[scan]", "; a comment\n[scan]"))
    assert a.config_hash == b.config_hash
    c = parse_config(RESERVOIR, ["fixed.n_res=0.02"])
    assert c.fixed["n_res"] == 0.02 and c.config_hash != a.config_hash
    with pytest.raises(ConfigError):
        parse_config(RESERVOIR, ["nodot=1"])
    assert parse_config(RESERVOIR).with_points(3).shape == (3, 3)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("SQBLOCKADE_WORKERS", "3")
    assert worker_count() == 3
    assert worker_count(2) == 2
    monkeypatch.setenv("SQBLOCKADE_WORKERS", "x")
    with pytest.raises(ConfigError):
        worker_count()


def test_reservoir_scan_rows_and_columns():
    cfg = parse_config(RESERVOIR)
    res = run_scan(cfg, workers=1)
    assert len(res.rows) == 20 and res.n_failed == 0
    assert res.columns == columns(cfg)
    assert res.columns[:2] == ["m_res", "epsilon"]
    assert set(res.column("dim")) == {16}
    assert all(r < 1e-10 for r in res.column("residual"))
    assert res.grid("g2").shape == (5, 4)


def test_csv_format():
    res = run_scan(parse_config(RESERVOIR), workers=1)
    text = res.to_csv()
    lines = text.split("\r\n")
    assert lines[0].startswith("m_res,epsilon,m_abs,mean_n,g2")
    assert lines[0].endswith("config_hash,error")
    first = lines[1].split(",")
    assert float(first[4]) == res.rows[0]["g2"]
    assert format_cell(0.1) == "0.10000000000000001"
    assert format_cell(True) == "1" and format_cell(None) == ""


def test_determinism_across_runs_and_workers():
    cfg = parse_config(RESERVOIR)
    a = run_scan(cfg, workers=1).to_csv()
    b = run_scan(cfg, workers=1).to_csv()
    big = cfg.with_points(9)
    c = run_scan(big, workers=1).to_csv()
    d = run_scan(big, workers=2).to_csv()
    assert a == b
    assert c == d


def test_records_consistent_with_classifier():
    from sqblockade.blockade_classifier import classify
    res = run_scan(parse_config(GAUSSIAN), workers=1)
    for r in res.rows:
        lab = classify(r["g2"], r["g3"], r["g4"], r["mean_n"])
        assert r["table2_case"] == lab.table2_case.value
        assert r["k2_kpb"] == lab.refined[2].kpb


@pytest.mark.parametrize("text", [RESERVOIR, GAUSSIAN])
def test_scan_point_consistency(text):
    cfg = parse_config(text)
    res = run_scan(cfg, workers=1)
    points = list(grid_points(cfg))
    for i in (0, 7, len(points) - 1):
        rep = run_point(cfg, points[i])
        assert rep["error"] == ""
        for key in ("mean_n", "g2", "g3", "g4"):
            assert abs(rep[key] - res.rows[i][key]) <= 1e-12
        assert rep["table2_case"] == res.rows[i]["table2_case"]


def test_monotone_refinement():
    cfg = parse_config(GAUSSIAN)
    coarse = run_scan(cfg, workers=1)
    fine = run_scan(cfg.with_points(9), workers=1)
    fine_rows = {(r["alpha"], r["r"]): r for r in fine.rows}
    for r in coarse.rows:
        other = fine_rows[(r["alpha"], r["r"])]
        for key in ("table2_case", "k1_kpb", "k2_kpb", "k3_kpb", "simplified_2pb"):
            assert r[key] == other[key]


def test_point_examples():
    cfg = parse_config("[scan]\nmode = point_eval\nmodel = reservoir\n[fixed]\n"
                       "epsilon = 0.07\nn_res = 3e-4\nm_frac = 1\n[truncation]\ndim = 16\n")
    rep = run_point(cfg, tau=True)
    assert rep["g2"] == pytest.approx(0.0729, rel=0.05)
    assert rep["g2_tau"][0] == pytest.approx(rep["g2"], abs=1e-10)
    assert rep["ep_numeric"] >= 0
    th = parse_config("[scan]\nmode = point_eval\nmodel = gaussian\n[fixed]\nn_th = 0.5\n")
    rep = run_point(th)
    assert rep["g2"] == pytest.approx(2) and rep["g3"] == pytest.approx(6)
    assert rep["table2_case"] == "3PT"
    assert abs(rep["ep_numeric"]) < 1e-6
    wide = run_point(parse_config("[scan]\nmode = point_eval\nmodel = gaussian\n[fixed]\n"
                                  "alpha = 2\nr = 1\nn_th = 0.005\n"
                                  "theta = 3.141592653589793\nphi = 1.5707963267948966\n"))
    assert wide["error"] == "" and wide["ep_error"].startswith("TruncationError")
    assert wide["g2"] == pytest.approx(run_scan(parse_config(GAUSSIAN), 1).rows[-1]["g2"])
    vac = run_point(parse_config("[scan]\nmode = point_eval\n[fixed]\nepsilon = 0\n"))
    assert vac["error"].startswith("EmptyCavityError")


EMPTY_AT_ZERO_DRIVE = RESERVOIR.replace("n_res = 0.01", "n_res = 0").replace(
    "[axis.m_res]\nmin = 0\nmax = 0.1\npoints = 5", "[axis.delta]\nvalues = 0, 1").replace(
    "delta = 0\n", "").replace("min = 0.05", "min = 0")


def test_failed_points_are_recorded():
    res = run_scan(parse_config(EMPTY_AT_ZERO_DRIVE), workers=1)
    failed = [r for r in res.rows if r["error"]]
    assert len(failed) == 2 and all(r["epsilon"] == 0 for r in failed)
    assert all(r["error"].startswith("EmptyCavityError") for r in failed)
    assert res.n_failed == 2


def test_tau_curve_and_ep_curve_modes():
    tau = parse_config("[scan]\nmode = tau_curve\n[fixed]\nn_res = 0.001\nepsilon = 0.07\n"
                       "[axis.m_res]\nvalues = 0, 0.016\n[truncation]\ndim = 16\n"
                       "[tau]\ntau_max = 4\npoints = 41\n")
    res = run_scan(tau, workers=1)
    assert len(res.rows) == 82
    assert res.rows[0]["tau"] == 0 and res.rows[40]["tau"] == 4
    ep = parse_config("[scan]\nmode = ep_curve\n[fixed]\nalpha = 0.5\n[axis.r]\nvalues = 0, 0.5\n"
                      "[axis.n_th]\nvalues = 0.1\n")
    rows = run_scan(ep, workers=1).rows
    assert rows[0]["ep_numeric"] == pytest.approx(0, abs=1e-6)
    assert rows[1]["ep_numeric"] == pytest.approx(rows[1]["ep_closed"], abs=1e-3)


def test_presets_parse_and_cover_figures():
    for name in preset_names():
        cfg = parse_config(preset_text(name))
        assert cfg.axes
    assert sorted(FIGURES, key=int) == [str(k) for k in range(2, 13)]
    assert figure_presets("9") == ["fig09a", "fig09b"]
    assert figure_presets("fig09b") == ["fig09b"]
    with pytest.raises(ConfigError):
        figure_presets("13")


def _run(argv):
    buf = io.StringIO()
    return main(argv, out=buf), buf.getvalue()


def test_cli_exit_codes(tmp_path):
    cfg = tmp_path / "ok.ini"
    cfg.write_text(RESERVOIR.replace("points = 5", "points = 2").replace("points = 4", "points = 2"))
    out_csv = tmp_path / "out.csv"
    code, _ = _run(["scan", str(cfg), "-o", str(out_csv)])
    assert code == 0 and out_csv.read_text().startswith("m_res,epsilon")
    bad = tmp_path / "bad.ini"
    bad.write_text(RESERVOIR.replace("delta = 0", "delta = 0\ntypo = 1"))
    assert _run(["scan", str(bad)])[0] == 1
    assert _run(["scan", str(tmp_path / "missing.ini")])[0] == 1
    assert _run(["nonsense"])[0] == 1
    fail = tmp_path / "fail.ini"
    fail.write_text(EMPTY_AT_ZERO_DRIVE)
    assert _run(["scan", str(fail), "-o", str(tmp_path / "f.csv")])[0] == 2
    assert _run(["point", "--epsilon", "0"])[0] == 2


def test_cli_point_g2tau_ep_figure(tmp_path):
    code, text = _run(["point", "--epsilon", "0.07", "--n-res", "3e-4", "--m-frac", "1",
                       "--dim", "16"])
    assert code == 0
    g2 = float(next(l for l in text.splitlines() if l.startswith("g2 = ")).split("=")[1])
    assert g2 == pytest.approx(0.0729, rel=0.05)
    code, text = _run(["point", "--model", "gaussian", "--n-th", "0.5"])
    assert code == 0 and "table2_case = 3PT" in text
    code, text = _run(["g2tau", "--epsilon", "0.07", "--n-res", "0.001", "--m-res", "0.016",
                       "--dim", "16", "--tau-points", "11"])
    assert code == 0 and len(text.strip().splitlines()) == 12
    code, text = _run(["ep", "--r", "0.5", "--n-th", "0.1"])
    ep = float(next(l for l in text.splitlines() if l.startswith("ep_numeric")).split("=")[1])
    assert code == 0 and ep == pytest.approx(0.5898, abs=1e-3)
    code, text = _run(["figure", "--list"])
    assert code == 0 and "fig12" in text
    code, _ = _run(["figure", "3", "--points", "3", "-o", str(tmp_path)])
    assert code == 0 and (tmp_path / "fig03.csv").exists()
    assert _run(["figure", "99"])[0] == 1
    assert _run(["point", "--m-res", "0.1", "--m-frac", "1"])[0] == 1


def test_cli_svg(tmp_path):
    pytest.importorskip("matplotlib")
    code, _ = _run(["figure", "4", "--points", "4", "--svg", "-o", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "fig04.svg").read_text().lstrip().startswith("<?xml")
