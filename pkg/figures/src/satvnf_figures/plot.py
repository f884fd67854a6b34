"""Render experiment CSV output into per-algorithm comparison figures.

Consumes the simulator CLI's aggregate.csv (for load sweeps on the x axis)
or detail.csv (for per-slot time series) and draws one line per algorithm,
mean with optional std error bars.  Output is a PNG/SVG pair with fixed
style and no timestamps, so re-rendering identical CSVs yields identical
files.
"""
from __future__ import annotations

import argparse
import csv
import statistics
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
# Content-derived SVG element ids instead of per-process ones, so identical
# inputs produce identical files.
matplotlib.rcParams["svg.hashsalt"] = "satvnf-figures"
import matplotlib.pyplot as plt  # noqa: E402

ALGORITHM_ORDER = ("dvnfp", "greedy", "viterbi")
SERIES_STYLE = {
    "dvnfp": dict(color="#1f77b4", marker="o", label="D-VNFP"),
    "greedy": dict(color="#d62728", marker="s", label="Greedy"),
    "viterbi": dict(color="#2ca02c", marker="^", label="Viterbi"),
}

# metric name -> (aggregate mean col, aggregate std col, detail col, y label)
METRICS = {
    "bandwidth": ("C_bw_mean", "C_bw_std", "C_bw_mbps",
                  "Mean ISL bandwidth cost (Mbps)"),
    "delay": ("C_user_mean", "C_user_std", "C_user_ms",
              "Mean end-to-end delay (ms)"),
    "allocation": ("allocated_mean", "allocated_std", "allocated_fraction",
                   "Allocated fraction"),
}

X_LABELS = {
    "M": "Number of user requests M",
    "lambda": "Arrival rate λ (requests/slot)",
    "slot": "Time slot",
}


class PlotError(ValueError):
    """Bad figure specification or CSV that does not match it."""


@dataclass(frozen=True)
class FigureSpec:
    metric: str           # bandwidth | delay | allocation
    x: str                # M | lambda | slot
    out: Path             # output basename; .png and .svg are written
    error_bars: bool = True

    def __post_init__(self):
        if self.metric not in METRICS:
            raise PlotError(f"unknown metric {self.metric!r}")
        if self.x not in X_LABELS:
            raise PlotError(f"unknown x axis {self.x!r}")


def _read_rows(csv_path, required):
    with open(csv_path, newline="") as f:
        reader = csv.DictReader(f)
        missing = [c for c in required if c not in (reader.fieldnames or [])]
        if missing:
            raise PlotError(f"{csv_path}: missing columns {', '.join(missing)}")
        return list(reader)


def load_series(csv_path, spec: FigureSpec):
    """series[algorithm] = (xs, means, stds) sorted by x."""
    mean_col, std_col, detail_col, _ = METRICS[spec.metric]
    if spec.x == "slot":
        rows = _read_rows(csv_path, ("mode", "algorithm", "slot", detail_col))
        rows = [r for r in rows if r["mode"] == "dynamic"]
        series = {}
        for alg in ALGORITHM_ORDER:
            per_slot: dict[int, list[float]] = {}
            for r in rows:
                if r["algorithm"] == alg:
                    per_slot.setdefault(int(r["slot"]), []).append(
                        float(r[detail_col]))
            if per_slot:
                xs = sorted(per_slot)
                means = [statistics.fmean(per_slot[x]) for x in xs]
                stds = [statistics.pstdev(per_slot[x]) if len(per_slot[x]) > 1
                        else 0.0 for x in xs]
                series[alg] = (xs, means, stds)
    else:
        mode = "static" if spec.x == "M" else "dynamic"
        rows = _read_rows(csv_path,
                          ("mode", "algorithm", "cell_param", mean_col, std_col))
        rows = [r for r in rows if r["mode"] == mode]
        series = {}
        for alg in ALGORITHM_ORDER:
            pts = sorted((float(r["cell_param"]), float(r[mean_col]),
                          float(r[std_col]))
                         for r in rows if r["algorithm"] == alg)
            if pts:
                xs, means, stds = zip(*pts)
                series[alg] = (list(xs), list(means), list(stds))
    if not series:
        raise PlotError(f"{csv_path}: no rows match metric={spec.metric} "
                        f"x={spec.x}")
    return series


def render(csv_path, spec: FigureSpec) -> list[Path]:
    """Draw the figure and write the PNG/SVG pair; returns written paths."""
    series = load_series(csv_path, spec)
    fig, ax = plt.subplots(figsize=(5.2, 3.6), dpi=150)
    for alg in ALGORITHM_ORDER:
        if alg not in series:
            continue
        xs, means, stds = series[alg]
        style = SERIES_STYLE[alg]
        if spec.error_bars and any(stds):
            ax.errorbar(xs, means, yerr=stds, capsize=3, markersize=4,
                        linewidth=1.2, **style)
        else:
            ax.plot(xs, means, markersize=4, linewidth=1.2, **style)
    ax.set_xlabel(X_LABELS[spec.x])
    ax.set_ylabel(METRICS[spec.metric][3])
    ax.grid(True, linewidth=0.3, alpha=0.6)
    ax.legend()
    fig.tight_layout()

    out = spec.out
    out.parent.mkdir(parents=True, exist_ok=True)
    written = []
    for suffix in (".png", ".svg"):
        target = out.with_suffix(suffix)
        # Date: None strips the timestamp so output is reproducible.
        fig.savefig(target, metadata={"Date": None} if suffix == ".svg" else None)
        written.append(target)
    plt.close(fig)
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="satvnf-plot",
        description="Render simulator CSV output into comparison figures")
    parser.add_argument("csv", help="aggregate.csv (x = M or lambda) or "
                                    "detail.csv (x = slot)")
    parser.add_argument("--metric", required=True, choices=sorted(METRICS))
    parser.add_argument("--x", required=True, choices=sorted(X_LABELS))
    parser.add_argument("--out", required=True,
                        help="output path; .png and .svg are both written")
    parser.add_argument("--no-error-bars", action="store_true")
    ns = parser.parse_args(argv)
    spec = FigureSpec(metric=ns.metric, x=ns.x, out=Path(ns.out),
                      error_bars=not ns.no_error_bars)
    try:
        for path in render(ns.csv, spec):
            print(path)
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
