"""Line charts of sweep summaries, written as reproducible SVG files."""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from adtime.experiments import SummaryRow  # noqa: E402

# fixed ids and no timestamp, so reruns write identical bytes
RC = {
    "svg.hashsalt": "adtime",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "lines.markersize": 4,
}
STYLE = {
    "gbd": dict(color="#1f4e79", marker="o", label="GBD"),
    "heuristic": dict(color="#c55a11", marker="s", label="heuristic"),
    "random": dict(color="#7f7f7f", marker="^", label="random"),
    "oracle": dict(color="#548235", marker="d", label="oracle"),
}
AXIS_LABEL = {"batch_duration": "batch duration T", "alpha_scale": "density scale c"}


def _series(summary: Sequence[SummaryRow], field: str) -> dict[str, tuple[list[float], list[float]]]:
    out: dict[str, tuple[list[float], list[float]]] = {}
    for s in summary:
        xs, ys = out.setdefault(s.algorithm, ([], []))
        xs.append(s.param_value)
        ys.append(getattr(s, field))
    return out


def _save(fig: plt.Figure, path: str | Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_sweep(summary: Sequence[SummaryRow], path: str | Path, title: str = "") -> None:
    """Mean revenue and mean sum-utility against the swept parameter."""
    if not summary:
        raise ValueError("nothing to plot")
    param = summary[0].sweep_param
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, 2, figsize=(8, 3.2))
        for ax, field, ylabel in zip(axes, ("mean_revenue", "mean_sum_utility"),
                                     ("leader revenue", "sum of follower utilities")):
            for algorithm, (xs, ys) in _series(summary, field).items():
                ax.plot(xs, ys, **STYLE[algorithm])
            ax.set_xlabel(AXIS_LABEL.get(param, param))
            ax.set_ylabel(ylabel)
            if param == "batch_duration":
                ax.set_xscale("log", base=2)
        axes[0].legend(frameon=False)
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        _save(fig, path)


def plot_compare(revenues: dict[str, Sequence[float]], path: str | Path, title: str = "") -> None:
    """Per-seed revenue of each algorithm, seeds sorted by GBD revenue."""
    order = sorted(range(len(revenues["gbd"])), key=lambda k: revenues["gbd"][k])
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(5, 3.2))
        for algorithm, values in revenues.items():
            ax.plot(range(len(order)), [values[k] for k in order], **STYLE[algorithm])
        ax.set_xlabel("scenario (sorted by GBD revenue)")
        ax.set_ylabel("leader revenue")
        ax.legend(frameon=False)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        _save(fig, path)


def plot_trace(bound_trace: Sequence[tuple[float, float]], path: str | Path, title: str = "") -> None:
    """Lower and upper bounds per decomposition iteration."""
    if not bound_trace:
        raise ValueError("report has no bound trace to plot")
    its = list(range(1, len(bound_trace) + 1))
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(5, 3.2))
        ax.plot(its, [lb for lb, _ in bound_trace], color="#1f4e79", marker="o", label="lower bound")
        ax.plot(its, [ub for _, ub in bound_trace], color="#c55a11", marker="s", label="upper bound")
        ax.set_xlabel("iteration")
        ax.set_ylabel("leader revenue")
        ax.legend(frameon=False)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        _save(fig, path)
