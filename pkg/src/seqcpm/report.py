"""Learning-curve figures.

One panel per selected metric: the metric against sample size, dashed
2.5th/97.5th percentile lines for the individual-level metrics, a horizontal
line at each stopping-rule threshold and a vertical line at each rule's
stopping sample size. Output is byte-stable for identical input.
"""
from __future__ import annotations

import io
import json
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import InsufficientPoints  # noqa: E402
from .sequential import LearningCurve  # noqa: E402

LABELS = {
    "apparent_c": "Apparent c-statistic",
    "corrected_c": "Bootstrap-corrected c-statistic",
    "corrected_slope": "Bootstrap-corrected calibration slope",
    "optimism_c": "Mean optimism in c-statistic",
    "mean_ui_width": "Mean 95% UI width",
    "mean_delta": "Mean delta",
    "evpi": "EVPI",
    "mean_misclass": "Mean probability of misclassification",
}
BANDS = {
    "mean_ui_width": ("ui_width_p2_5", "ui_width_p97_5"),
    "mean_delta": ("delta_p2_5", "delta_p97_5"),
    "mean_misclass": ("misclass_p2_5", "misclass_p97_5"),
}

STYLE = {
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.linewidth": 0.8,
    "lines.linewidth": 1.4,
    "svg.hashsalt": "seqcpm",
    "svg.fonttype": "path",
}


def default_metrics(curve: LearningCurve):
    chosen = []
    for rule in curve.rules:
        if rule.metric not in chosen:
            chosen.append(rule.metric)
    return chosen or ["corrected_slope", "mean_ui_width"]


def render_learning_curve_svg(curve: LearningCurve, metrics: Optional[Sequence[str]] = None,
                              path=None, *, title: str = "", provenance: Optional[dict] = None) -> bytes:
    """Render the curve as SVG; write it to ``path`` if given and return the bytes."""
    if len(curve.records) < 2:
        raise InsufficientPoints("a learning curve needs at least two increments to plot")
    metrics = list(metrics) if metrics else default_metrics(curve)
    unknown = [m for m in metrics if m not in LABELS]
    if unknown:
        raise ValueError(f"cannot plot {unknown}; choose from {sorted(LABELS)}")

    ns = [r.n for r in curve.records]
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(len(metrics), 1, figsize=(6.4, 2.3 * len(metrics)),
                                 sharex=True, squeeze=False)
        for ax, metric in zip(axes[:, 0], metrics):
            ys = [getattr(r, metric) for r in curve.records]
            ax.plot(ns, ys, color="black", marker="o", markersize=2.5, gid=f"curve-{metric}")
            if metric in BANDS:
                for field in BANDS[metric]:
                    ax.plot(ns, [getattr(r, field) for r in curve.records], color="0.45",
                            linestyle="--", linewidth=0.9, gid=f"curve-{field}")
            for rule in curve.rules:
                if rule.metric != metric:
                    continue
                ax.axhline(rule.threshold, color="tab:red", linewidth=0.9,
                           gid=f"threshold-{rule.metric}-{rule.threshold:g}")
                stop = curve.n_stop_per_rule.get(rule.name)
                if stop is not None:
                    ax.axvline(stop, color="tab:blue", linestyle=":", linewidth=1.0,
                               gid=f"nstop-{rule.metric}-{stop}")
            ax.set_ylabel(LABELS[metric], fontsize=8)
        axes[-1, 0].set_xlabel("Sample size (n)")
        if curve.n_stop_overall is not None:
            axes[0, 0].set_title(f"{title}  N_stop (all rules) = {curve.n_stop_overall}".strip())
        elif title:
            axes[0, 0].set_title(title)
        fig.tight_layout()

        meta = {"Date": None}
        if provenance is not None:
            meta["Description"] = json.dumps(provenance, sort_keys=True)
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata=meta)
        plt.close(fig)
    data = buf.getvalue()
    if path is not None:
        with open(path, "wb") as fh:
            fh.write(data)
    return data

