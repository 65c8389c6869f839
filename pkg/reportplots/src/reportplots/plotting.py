"""Log-log rendering of sweep CSV files.

The input schema is the fixed column list written by the counting CLI's
sweep/avg-count commands; this package only reads that external format and
never imports the counting library.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

RESULT_FIELDS = [
    "experiment_id",
    "n",
    "alpha",
    "C_alpha",
    "c",
    "Q",
    "delta",
    "mode",
    "centers_used",
    "raw_count",
    "normalized",
    "bound_rhs",
    "ratio",
    "stderr",
    "seed",
    "wall_ms",
]


@dataclass(frozen=True)
class SweepData:
    Q: List[float]
    normalized: List[float]
    stderr: List[float]
    bound_rhs: List[Optional[float]]
    n: int
    alpha: int


@dataclass(frozen=True)
class PlotSpec:
    inputs: Tuple[str, ...]
    output: str
    reference_slopes: Tuple[float, ...] = ()  # default derived from n per file
    log_base: float = 10.0

    def __post_init__(self):
        if not self.inputs:
            raise ValueError("need at least one input CSV")
        if self.log_base <= 1:
            raise ValueError("log base must exceed 1")


def load_sweep(path: str) -> SweepData:
    """Parse one sweep CSV; strict about the schema."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(RESULT_FIELDS) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    Q, normalized, stderr, bound = [], [], [], []
    for r in rows:
        Q.append(float(Fraction(r["Q"])))
        normalized.append(float(r["normalized"]))
        stderr.append(float(r["stderr"]) if r["stderr"] else 0.0)
        bound.append(float(r["bound_rhs"]) if r["bound_rhs"] else None)
    if len(set(Q)) < 3:
        raise ValueError(f"{path}: need at least 3 distinct Q values, got {len(set(Q))}")
    if any(q <= 0 for q in Q) or any(v <= 0 for v in normalized):
        raise ValueError(f"{path}: Q and normalized must be positive for a log-log plot")
    return SweepData(Q, normalized, stderr, bound, int(rows[0]["n"]), int(rows[0]["alpha"]))


def fit_loglog(Q: Sequence[float], y: Sequence[float]) -> Tuple[float, float, float]:
    """Least squares of log y on log Q, written out longhand so the figure
    annotation is independent of the counting library's fit.

    Returns (slope, intercept, rms residual), natural-log scale.
    """
    if len(Q) < 3:
        raise ValueError("need at least 3 points")
    lx = [math.log(q) for q in Q]
    ly = [math.log(v) for v in y]
    n = len(lx)
    mx = sum(lx) / n
    my = sum(ly) / n
    sxx = sum((a - mx) ** 2 for a in lx)
    if sxx == 0:
        raise ValueError("all Q equal")
    sxy = sum((a - mx) * (b - my) for a, b in zip(lx, ly))
    slope = sxy / sxx
    intercept = my - slope * mx
    resid = math.sqrt(sum((slope * a + intercept - b) ** 2 for a, b in zip(lx, ly)) / n)
    return slope, intercept, resid


def _default_reference_slopes(n: int) -> Tuple[float, ...]:
    D = 2 * n + 1
    return (2 * n, 2 * n + 1, 2 * n + 2 / D)


def plot(spec: PlotSpec) -> str:
    """Render all input sweeps into one log-log figure; returns the output
    path.  Each series gets its data points with error bars, the fitted
    power law (slope annotated), reference slope lines, and the bound curve
    when the CSV carries one."""
    fig, ax = plt.subplots(figsize=(7, 5))
    annotations = []
    for path in spec.inputs:
        data = load_sweep(path)
        slope, intercept, resid = fit_loglog(data.Q, data.normalized)
        label = f"n={data.n}, alpha={data.alpha}"
        pts = ax.errorbar(
            data.Q, data.normalized, yerr=data.stderr, fmt="o", capsize=3,
            label=f"{label} data",
        )
        color = pts.lines[0].get_color()
        qs = [min(data.Q), max(data.Q)]
        ax.plot(
            qs,
            [math.exp(intercept) * q**slope for q in qs],
            "-",
            color=color,
            label=f"{label} fit: slope {slope:.4f}",
        )
        if all(b is not None for b in data.bound_rhs):
            order = sorted(range(len(data.Q)), key=lambda i: data.Q[i])
            ax.plot(
                [data.Q[i] for i in order],
                [data.bound_rhs[i] for i in order],
                "--",
                color=color,
                alpha=0.7,
                label=f"{label} bound",
            )
        refs = spec.reference_slopes or _default_reference_slopes(data.n)
        anchor_q, anchor_y = data.Q[0], data.normalized[0]
        for s in refs:
            ax.plot(
                qs,
                [anchor_y * (q / anchor_q) ** s for q in qs],
                ":",
                linewidth=0.8,
                color="gray",
            )
            ax.annotate(f"slope {s:g}", (qs[1], anchor_y * (qs[1] / anchor_q) ** s),
                        fontsize=7, color="gray")
        annotations.append((path, slope, resid))
    ax.set_xscale("log", base=spec.log_base)
    ax.set_yscale("log", base=spec.log_base)
    ax.set_xlabel("Q")
    ax.set_ylabel("normalized shell count")
    ax.legend(fontsize=8)
    title = "; ".join(f"slope {s:.6f} (rms {r:.2e})" for _, s, r in annotations)
    ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return spec.output
