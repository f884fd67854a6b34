import csv
import subprocess
import sys
from pathlib import Path

import pytest

from satvnf_figures.plot import FigureSpec, PlotError, load_series, main, render

AGG_HEADER = ("mode", "algorithm", "cell_param", "repetitions", "C_bw_mean",
              "C_bw_std", "C_user_mean", "C_user_std", "allocated_mean",
              "allocated_std")


def write_aggregate(path, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(AGG_HEADER)
        w.writerows(rows)


@pytest.fixture()
def sweep_csv(tmp_path):
    rows = []
    for alg, base in (("dvnfp", 10.0), ("greedy", 12.0), ("viterbi", 10.5)):
        for m in (10, 50, 90):
            rows.append(("static", alg, m, 5, base + m * 0.1, 0.5,
                         70.0 + m * 0.01, 2.0, 1.0, 0.0))
    path = tmp_path / "aggregate.csv"
    write_aggregate(path, rows)
    return path


def test_load_series_maps_rows_to_algorithms(sweep_csv, tmp_path):
    spec = FigureSpec("bandwidth", "M", tmp_path / "fig")
    series = load_series(sweep_csv, spec)
    assert set(series) == {"dvnfp", "greedy", "viterbi"}
    xs, means, stds = series["greedy"]
    assert xs == [10.0, 50.0, 90.0]
    assert means == [13.0, 17.0, 21.0]
    assert stds == [0.5, 0.5, 0.5]


def test_render_writes_png_and_svg(sweep_csv, tmp_path):
    spec = FigureSpec("bandwidth", "M", tmp_path / "fig")
    written = render(sweep_csv, spec)
    assert [p.suffix for p in written] == [".png", ".svg"]
    for p in written:
        assert p.exists() and p.stat().st_size > 0


def test_svg_output_is_reproducible(sweep_csv, tmp_path):
    a = render(sweep_csv, FigureSpec("delay", "M", tmp_path / "a"))
    b = render(sweep_csv, FigureSpec("delay", "M", tmp_path / "b"))
    svg_a = next(p for p in a if p.suffix == ".svg")
    svg_b = next(p for p in b if p.suffix == ".svg")
    assert svg_a.read_bytes() == svg_b.read_bytes()


def test_single_cell_does_not_crash(tmp_path):
    path = tmp_path / "one.csv"
    write_aggregate(path, [("static", "dvnfp", 10, 3, 5.0, 0.1, 70.0, 1.0,
                            1.0, 0.0)])
    written = render(path, FigureSpec("allocation", "M", tmp_path / "fig"))
    assert all(p.exists() for p in written)


def test_slot_series_from_detail_csv(tmp_path):
    path = tmp_path / "detail.csv"
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(("mode", "algorithm", "cell_param", "repetition", "slot",
                    "C_bw_mbps", "C_user_ms", "allocated_fraction"))
        for rep in (0, 1):
            for slot in (0, 1, 2):
                w.writerow(("dynamic", "dvnfp", 290.0, rep, slot,
                            10.0 + slot + rep, 70.0, 1.0))
    series = load_series(path, FigureSpec("bandwidth", "slot", tmp_path / "fig"))
    xs, means, stds = series["dvnfp"]
    assert xs == [0, 1, 2]
    assert means == [10.5, 11.5, 12.5]


def test_missing_columns_and_empty_selection(tmp_path, sweep_csv):
    bad = tmp_path / "bad.csv"
    bad.write_text("algorithm,cell_param\ndvnfp,10\n")
    with pytest.raises(PlotError):
        load_series(bad, FigureSpec("bandwidth", "M", tmp_path / "fig"))
    # Static-only CSV has no dynamic rows for a lambda sweep.
    with pytest.raises(PlotError):
        load_series(sweep_csv, FigureSpec("bandwidth", "lambda", tmp_path / "f"))
    with pytest.raises(PlotError):
        FigureSpec("throughput", "M", tmp_path / "fig")


def test_cli_entry_point(sweep_csv, tmp_path, capsys):
    rc = main([str(sweep_csv), "--metric", "delay", "--x", "M",
               "--out", str(tmp_path / "cli_fig")])
    assert rc == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 2
    assert main([str(sweep_csv), "--metric", "bandwidth", "--x", "slot",
                 "--out", str(tmp_path / "nope")]) == 2


@pytest.fixture(scope="session")
def simulator_output(tmp_path_factory):
    """A real sweep produced by the simulator CLI (consumed via CSV only)."""
    out = tmp_path_factory.mktemp("sim")
    cfg = out / "cfg.yaml"
    cfg.write_text(
        "seed: 3\n"
        "mode: both\n"
        "static:\n  m_values: [20, 100, 180]\n  repetitions: 3\n"
        "dynamic:\n  lambda_values: [10.0, 40.0]\n  slots: 10\n"
        "  repetitions: 3\n")
    subprocess.run([sys.executable, "-m", "satvnf.cli", "run",
                    "--config", str(cfg), "--out", str(out)], check=True)
    return out


def test_s1_figure_reproduction_smoke(simulator_output, tmp_path):
    """Acceptance S1: three figure families render from real sweep output,
    with one series per algorithm and a rising bandwidth-vs-load trend."""
    agg = simulator_output / "aggregate.csv"
    detail = simulator_output / "detail.csv"
    made = []
    made += render(agg, FigureSpec("bandwidth", "M", tmp_path / "fig_bw"))
    made += render(agg, FigureSpec("delay", "M", tmp_path / "fig_delay"))
    made += render(detail, FigureSpec("allocation", "slot", tmp_path / "fig_alloc"))
    assert len(made) == 6 and all(p.exists() for p in made)

    with open(agg) as f:
        static_rows = [r for r in csv.DictReader(f) if r["mode"] == "static"]
    series = load_series(agg, FigureSpec("bandwidth", "M", tmp_path / "x"))
    assert len(series) == 3
    # Every aggregate row lands in exactly one series point.
    assert sum(len(s[0]) for s in series.values()) == len(static_rows)
    for xs, means, _ in series.values():
        assert xs == sorted(xs)
        assert means[0] < means[-1]  # bandwidth cost grows with load
    ok = True
    print(f"S1 figure reproduction: {'PASS' if ok else 'FAIL'} "
          f"(6 files, 3 series, monotone bandwidth trend)", flush=True)
