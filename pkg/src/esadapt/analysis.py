"""Aggregation of run records into box-plot and step-size trajectory data, plus export."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from statistics import NormalDist
from typing import Iterable, Mapping, Sequence

import numpy as np

from .advisor import format_float
from .es import RunRecord
from .ranking import RankRow, write_table

LOG_FLOOR = 1e-12

BOXPLOT_COLUMNS = ("function_id", "dimension", "method", "run_seed", "best_fitness")
TRAJECTORY_COLUMNS = ("method", "evaluation", "mean_sigma", "ci_low", "ci_high", "n")


@dataclass(frozen=True)
class FitnessSummary:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    values: tuple[float, ...]


@dataclass(frozen=True)
class TrajectorySummary:
    method: str
    mean_sigma: list[float]
    ci_low: list[float]
    ci_high: list[float]
    n: int
    degenerate: bool = False


def five_numbers(values: Sequence[float]) -> FitnessSummary:
    """Quartiles by linear interpolation between order statistics (numpy's default)."""
    if len(values) == 0:
        raise ValueError("cannot summarise an empty sample")
    arr = np.asarray(values, dtype=float)
    q = np.percentile(arr, [0, 25, 50, 75, 100])
    return FitnessSummary(*(float(v) for v in q), values=tuple(float(v) for v in values))


def best_fitness_distribution(runs: Iterable[RunRecord]) -> dict[tuple[int, str], FitnessSummary]:
    """Final best-so-far per ``(function_id, method)``, pooled over dimensions."""
    cells: dict[tuple[int, str], list[float]] = defaultdict(list)
    for run in runs:
        cells[(run.function_id, run.strategy)].append(run.final_best)
    return {key: five_numbers(values) for key, values in sorted(cells.items())}


def step_size_trajectory(runs: Sequence[RunRecord], confidence: float = 0.95, method: str | None = None) -> TrajectorySummary:
    if not runs:
        raise ValueError("no runs to aggregate")
    lengths = {len(r.sigma_trace) for r in runs}
    if len(lengths) != 1:
        raise ValueError(f"runs have different budgets: {sorted(lengths)}")
    method = method or runs[0].strategy
    traces = np.array([r.sigma_trace for r in runs], dtype=float)
    n = len(runs)
    # columns where every run agrees are reported exactly, without summation noise
    flat = traces.min(axis=0) == traces.max(axis=0)
    mean = np.where(flat, traces[0], traces.mean(axis=0))
    if n < 2:
        return TrajectorySummary(method, mean.tolist(), mean.tolist(), mean.tolist(), n, degenerate=True)
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    half = np.where(flat, 0.0, z * traces.std(axis=0, ddof=1) / math.sqrt(n))
    low = np.minimum(mean - half, mean)
    high = np.maximum(mean + half, mean)
    return TrajectorySummary(method, mean.tolist(), low.tolist(), high.tolist(), n)


def trajectories_by_method(runs: Iterable[RunRecord], confidence: float = 0.95) -> dict[str, TrajectorySummary]:
    grouped: dict[str, list[RunRecord]] = defaultdict(list)
    for run in runs:
        grouped[run.strategy].append(run)
    return {m: step_size_trajectory(rs, confidence, m) for m, rs in sorted(grouped.items())}


def write_boxplot_csv(runs: Iterable[RunRecord], path: Path) -> int:
    rows = sorted(
        ((r.function_id, r.dimension, r.strategy, r.seed, r.final_best) for r in runs),
        key=lambda row: row[:4],
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BOXPLOT_COLUMNS)
        for fid, dim, method, seed, best in rows:
            writer.writerow([fid, dim, method, seed, format_float(best)])
    return len(rows)


def read_boxplot_csv(path: Path) -> list[tuple[int, int, str, int, float]]:
    with open(path, newline="") as fh:
        return [
            (int(r["function_id"]), int(r["dimension"]), r["method"], int(r["run_seed"]), float(r["best_fitness"]))
            for r in csv.DictReader(fh)
        ]


def write_trajectory_csv(trajectories: Mapping[str, TrajectorySummary], path: Path) -> int:
    count = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_COLUMNS)
        for method in sorted(trajectories):
            t = trajectories[method]
            for i, (m, lo, hi) in enumerate(zip(t.mean_sigma, t.ci_low, t.ci_high), start=1):
                writer.writerow([method, i, format_float(m), format_float(lo), format_float(hi), t.n])
                count += 1
    return count


def read_trajectory_csv(path: Path) -> dict[str, TrajectorySummary]:
    series: dict[str, dict[str, list]] = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            s = series.setdefault(r["method"], {"mean": [], "low": [], "high": [], "n": int(r["n"])})
            s["mean"].append(float(r["mean_sigma"]))
            s["low"].append(float(r["ci_low"]))
            s["high"].append(float(r["ci_high"]))
    return {
        m: TrajectorySummary(m, s["mean"], s["low"], s["high"], s["n"], degenerate=s["n"] < 2)
        for m, s in series.items()
    }


def _plot_trajectories(trajectories: Mapping[str, TrajectorySummary], path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.fonttype"] = "none"
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for method in sorted(trajectories):
        t = trajectories[method]
        x = np.arange(1, len(t.mean_sigma) + 1)
        (line,) = ax.plot(x, t.mean_sigma, label=method)
        ax.fill_between(x, t.ci_low, t.ci_high, color=line.get_color(), alpha=0.25, linewidth=0)
    ax.set_xlabel("function evaluation")
    ax.set_ylabel("mean step size")
    ax.set_yscale("log")
    if trajectories:
        ax.legend()
    else:
        ax.text(0.5, 0.5, "no data", ha="center", va="center", transform=ax.transAxes)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _plot_boxplots(runs: Sequence[RunRecord], path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # precision above the instance target, on a log axis
    cells: dict[int, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for run in runs:
        cells[run.function_id][run.strategy].append(run.final_best - run.f_opt)
    plt.rcParams["svg.fonttype"] = "none"
    fids = sorted(cells)
    methods = sorted({r.strategy for r in runs})
    fig, axes = plt.subplots(1, max(len(fids), 1), figsize=(max(3 * len(fids), 4), 4), squeeze=False)
    floored_any = False
    for ax, fid in zip(axes[0], fids):
        data, labels = [], []
        for method in methods:
            values = np.asarray(cells[fid].get(method, []), dtype=float)
            if values.size == 0:
                continue
            floored = values <= LOG_FLOOR
            floored_any |= bool(floored.any())
            data.append(np.where(floored, LOG_FLOOR, values))
            labels.append(method + ("*" if floored.any() else ""))
        ax.boxplot(data)
        ax.set_xticks(range(1, len(labels) + 1), labels, rotation=45, ha="right")
        ax.set_yscale("log")
        ax.set_title(f"f{fid}")
    if not fids:
        axes[0][0].text(0.5, 0.5, "no data", ha="center", va="center", transform=axes[0][0].transAxes)
    axes[0][0].set_ylabel("best fitness - f_opt")
    if floored_any:
        fig.text(0.01, 0.01, f"* values <= {LOG_FLOOR:g} drawn at {LOG_FLOOR:g}", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def export_report(
    runs: Sequence[RunRecord],
    trajectories: Mapping[str, TrajectorySummary],
    rank_tables: Mapping[int, Sequence[RankRow]],
    out_dir: str | Path,
) -> dict[str, Path]:
    """Write CSVs and SVG figures; returns ``{file name: path}``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        manifest = {}
        manifest["boxplot_data.csv"] = out / "boxplot_data.csv"
        write_boxplot_csv(runs, manifest["boxplot_data.csv"])
        manifest["sigma_trajectory.csv"] = out / "sigma_trajectory.csv"
        write_trajectory_csv(trajectories, manifest["sigma_trajectory.csv"])
        for dim in sorted(rank_tables):
            name = f"ranking_{dim}.csv"
            manifest[name] = write_table(rank_tables[dim], out / name)
        manifest["sigma_trajectory.svg"] = out / "sigma_trajectory.svg"
        _plot_trajectories(trajectories, manifest["sigma_trajectory.svg"])
        manifest["best_fitness_boxplot.svg"] = out / "best_fitness_boxplot.svg"
        _plot_boxplots(runs, manifest["best_fitness_boxplot.svg"])
    except OSError as exc:
        raise OSError(f"could not write report to {out}: {exc}") from exc
    return manifest
