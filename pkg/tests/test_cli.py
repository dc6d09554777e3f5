import json
import math
import subprocess
import sys

import numpy as np
import pytest

from coastlines.cli import DEFAULT_BANDS, FIXTURE_ALPHAS, parse_range, run
from coastlines.distributions import grid_from_csv


def call(tmp_path, *argv):
    return run([*argv, "--out", str(tmp_path)])


def cauchy(x):
    return 1.0 / (math.pi * (1.0 + x * x))


def test_parse_range_includes_endpoint():
    xs = parse_range("-5:5:0.01")
    assert len(xs) == 1001 and xs[0] == -5.0 and xs[-1] == 5.0


@pytest.mark.parametrize("bad", ["1:0:0.1", "0:1", "0:1:-1", "a:b:c"])
def test_parse_range_rejects(bad, tmp_path, capsys):
    assert call(tmp_path, "forward", "--coastline", "flat", "--range", bad) != 0
    assert capsys.readouterr().err.startswith("error: ")


def test_forward_flat_is_cauchy(tmp_path):
    assert call(tmp_path, "forward", "--coastline", "flat", "--y0", "1", "--range", "-5:5:0.01") == 0
    g = grid_from_csv((tmp_path / "forward.csv").read_text())
    assert len(g.xs) == 1001
    assert np.max(np.abs(g.ps - cauchy(g.xs))) <= 1e-12


def test_roundtrip_cauchy(tmp_path, capsys):
    assert call(tmp_path, "roundtrip", "--pdf", "cauchy", "--y0", "1") == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["kappa"] == pytest.approx(math.pi, abs=math.pi / 200 * 2)
    assert summary["l2"] <= 1e-9
    for name in ("roundtrip.csv", "coastline.csv", "plan.jsonl", "summary.json"):
        assert (tmp_path / name).exists()
    header = (tmp_path / "roundtrip.csv").read_text().splitlines()[0]
    assert header == "x,p_original,p_regenerated,residual"


def test_fit_empty_input(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert call(tmp_path, "fit", "--input", str(empty)) != 0
    err = capsys.readouterr().err
    assert err.count("\n") == 1
    assert err.startswith("error: INSUFFICIENT_DATA:")


def test_unknown_flag(tmp_path, capsys):
    assert call(tmp_path, "forward", "--coastline", "flat", "--bogus", "1") == 2
    assert capsys.readouterr().err.startswith("error: USAGE:")


def test_missing_file(tmp_path, capsys):
    assert call(tmp_path, "fit", "--input", str(tmp_path / "nope.csv")) != 0
    assert capsys.readouterr().err.startswith("error: MISSING_FILE:")


def test_inverse_arcsin_domain(tmp_path, capsys):
    assert call(tmp_path, "inverse", "--pdf", "cauchy", "--range", "0:5:0.01", "--kappa", "4", "--no-plan") != 0
    assert capsys.readouterr().err.startswith("error: ARCSIN_DOMAIN:")


def test_inverse_no_plan_flat(tmp_path):
    assert call(tmp_path, "inverse", "--pdf", "cauchy", "--range", "0:5:0.01", "--kappa", str(math.pi), "--no-plan") == 0
    rows = (tmp_path / "coastline.csv").read_text().splitlines()
    assert rows[0] == "x,f,slope"
    assert max(abs(float(r.split(",")[1])) for r in rows[1:]) <= 1e-9


def test_coastlines_listing(tmp_path, capsys):
    assert call(tmp_path, "coastlines") == 0
    names = [line.split(",")[0] for line in capsys.readouterr().out.splitlines()[1:]]
    assert set(names) == {"flat", "line45", "line135", "semicircle"}


@pytest.mark.parametrize(
    "argv, files",
    [
        (["sample", "--coastline", "semicircle", "--n", "5000", "--seed", "9"], ["samples.csv"]),
        (["synth", "--n", "2000", "--seed", "4", "--windows", "5"], ["windows.jsonl"]),
        (["roundtrip", "--pdf", "modcauchy", "--range", "-5:5:0.05", "--k-steps", "20"], ["roundtrip.csv", "coastline.csv"]),
        (["figure", "--kind", "fig1", "--n", "3000", "--seed", "2"], ["fig1_fits.csv"]),
    ],
)
def test_byte_identical_reruns(tmp_path, argv, files):
    a, b = tmp_path / "a", tmp_path / "b"
    assert call(a, *argv) == 0
    assert call(b, *argv) == 0
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_sample_threads_do_not_change_output(tmp_path, monkeypatch):
    argv = ["sample", "--coastline", "flat", "--n", "200000", "--seed", "1"]
    monkeypatch.setenv("COASTLINE_THREADS", "1")
    assert call(tmp_path / "one", *argv) == 0
    monkeypatch.setenv("COASTLINE_THREADS", "4")
    assert call(tmp_path / "four", *argv) == 0
    assert (tmp_path / "one" / "samples.csv").read_bytes() == (tmp_path / "four" / "samples.csv").read_bytes()


def test_synth_correlate_fit_pipeline(tmp_path):
    assert call(tmp_path, "synth", "--n", "200000", "--alpha", "0.5", "--windows", "41", "--seed", "3") == 0
    windows = tmp_path / "windows.jsonl"
    before = windows.read_bytes()
    assert call(tmp_path, "correlate", "--input", str(windows), "--ref", "0") == 0
    series = tmp_path / "correlation.csv"
    assert series.read_text().splitlines()[1] == "0,1"
    series_before = series.read_bytes()
    assert call(tmp_path, "fit", "--input", str(series)) == 0
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert fit["alpha"] == pytest.approx(0.5, abs=0.05)
    # inputs untouched
    assert windows.read_bytes() == before
    assert series.read_bytes() == series_before


def test_correlate_degree_and_category(tmp_path):
    src = tmp_path / "w.csv"
    src.write_text("t,source_id,count,category\n0,a,1,benign\n0,b,2,benign\n0,c,3,malicious\n60,b,2,benign\n60,c,2,malicious\n")
    assert call(tmp_path, "correlate", "--input", str(src), "--format", "csv", "--ref", "0", "--degree", "1", "--category", "benign") == 0
    assert (tmp_path / "correlation.csv").read_text() == "lag_seconds,correlation\n0,1\n60,1\n"


def test_roundtrip_gallery_outputs(tmp_path):
    assert call(tmp_path, "figure", "--kind", "appB") == 0
    pdfs = sorted(p.name for p in tmp_path.glob("appB_*_pdf.csv"))
    coasts = sorted(p.name for p in tmp_path.glob("appB_*_coastline.csv"))
    assert len(pdfs) == 6 and len(coasts) == 6
    rows = (tmp_path / "appB_summary.csv").read_text().splitlines()[1:]
    l2 = {r.split(",")[0]: float(r.split(",")[2]) for r in rows}
    # the split lines are rebuilt exactly once started on the true curve
    assert l2["cauchy"] <= 1e-9 and l2["line45"] <= 1e-9 and l2["line135"] <= 1e-9


def test_fig4_one_coastline_per_fixture(tmp_path):
    assert call(tmp_path, "figure", "--kind", "fig4", "--range", "-5:5:0.05", "--k-steps", "20") == 0
    assert sorted(p.name for p in tmp_path.glob("fig4_*_coastline.csv")) == sorted(
        f"fig4_{k}_coastline.csv" for k in FIXTURE_ALPHAS
    )


def test_fig4_from_param_file(tmp_path):
    params = tmp_path / "params.csv"
    params.write_text("label,alpha,beta\nslow,0.3,2\n")
    assert call(tmp_path, "figure", "--kind", "fig4", "--input", str(params), "--range", "-5:5:0.05", "--k-steps", "10") == 0
    assert (tmp_path / "fig4_slow_coastline.csv").exists()


def test_fig1_outputs(tmp_path):
    assert call(tmp_path, "figure", "--kind", "fig1", "--n", "20000", "--seed", "1") == 0
    for tag in ("total", "benign", "malicious", "unknown"):
        assert (tmp_path / f"fig1_{tag}_correlation.csv").exists()
        fit = json.loads((tmp_path / f"fig1_{tag}_fit.json").read_text())
        if tag != "total":
            assert fit["alpha"] == pytest.approx(FIXTURE_ALPHAS[tag], abs=0.05)


def test_fig2_bands_within_three_sigma(tmp_path):
    seeds = range(6)
    table = {}
    for seed in seeds:
        out = tmp_path / str(seed)
        assert call(out, "figure", "--kind", "fig2", "--seed", str(seed), "--n", "20000") == 0
        for line in (out / "fig2_thalf.csv").read_text().splitlines()[1:]:
            label, _, _, t_half = line.split(",")
            table.setdefault(label, []).append(float(t_half))
    assert sorted(table) == [f"band_{i}" for i in sorted(DEFAULT_BANDS)]
    for i, (alpha, beta) in DEFAULT_BANDS.items():
        vals = np.array(table[f"band_{i}"])
        sem = vals.std(ddof=1) / math.sqrt(len(vals))
        assert abs(vals.mean() - beta ** (1 / alpha)) <= 3 * sem


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "coastlines", "coastlines", "--out", str(tmp_path)], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("name,domain_lo")
