"""Static figures for sweep tables and evaluation reports."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import CATEGORIES  # noqa: E402

_LABELS = {"l_ep": "cropping size (2 L_ep + 1)", "l_dp": "L_dp", "alpha": "alpha", "r": "r (pixels)"}
_STYLE = {"iou": ("k", "o", "-"), "hybrid_iou": ("tab:red", "D", "-"),
          "Point": ("tab:blue", "s", "--"), "Spot": ("tab:orange", "^", "--"),
          "Extended": ("tab:green", "v", "--")}


def _figure(width=6.0, height=None):
    height = height or width * (math.sqrt(5) - 1) / 2
    fig, ax = plt.subplots(figsize=(width, height), facecolor="w")
    ax.grid(True, alpha=0.3)
    return fig, ax


def plot_sweep(rows: list[dict], param: str, path, title: str | None = None) -> None:
    """IoU (x100) against the swept value, overall and per size category."""
    fig, ax = _figure()
    xs = [row["value"] for row in rows]
    if param == "l_ep":
        xs = [2 * int(v) + 1 for v in xs]
    series = ["iou"] + (["hybrid_iou"] if "hybrid_iou" in rows[0] else []) + list(CATEGORIES)
    for key in series:
        col = key if key in rows[0] else f"iou_{key}"
        ys = [row.get(col) for row in rows]
        if all(y is None for y in ys):
            continue
        color, marker, ls = _STYLE[key]
        label = {"iou": "filtered" if param == "r" else "overall", "hybrid_iou": "hybrid"}.get(key, key)
        ax.plot(xs, [float("nan") if y is None else 100 * y for y in ys],
                color=color, marker=marker, ls=ls, label=label)
    if param == "r" and max(xs) / max(min(xs), 1e-9) > 20:
        ax.set_xscale("log")
    ax.set_xlabel(_LABELS.get(param, param))
    ax.set_ylabel("IoU (%)")
    ax.set_ylim(0, 102)
    ax.legend(frameon=False, fontsize=9)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_categories(report, path) -> None:
    """Bar chart of per-category IoU with target counts above the bars."""
    fig, ax = _figure(5.0)
    vals, counts = [], []
    for cat in CATEGORIES:
        entry = report.per_category.get(cat) or {}
        vals.append(100 * (entry.get("iou") or 0.0))
        counts.append(entry.get("count", 0))
    bars = ax.bar(CATEGORIES, vals, color=[_STYLE[c][0] for c in CATEGORIES])
    for bar, n in zip(bars, counts):
        ax.annotate(f"n={n}", (bar.get_x() + bar.get_width() / 2, bar.get_height()),
                    ha="center", va="bottom", fontsize=9)
    ax.axhline(100 * report.iou, color="k", ls=":", label=f"overall {100 * report.iou:.1f}")
    ax.set_ylim(0, 105)
    ax.set_ylabel("IoU (%)")
    ax.legend(frameon=False, fontsize=9, loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
