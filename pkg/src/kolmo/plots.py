"""Figure rendering for the reporting paths (probe and solve).

Figures are written next to the delimited outputs they illustrate; callers
pass --no-plot to skip them.  The Agg backend keeps rendering headless and
repeatable.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fields import Field

__all__ = ["plot_oscillation_fit", "plot_field_heatmap"]


def plot_oscillation_fit(report_dict: dict, path: str):
    """Log-log oscillation vs radius with the fitted Holder slope."""
    osc = report_dict["holder"].get("oscillations", [])
    radii = np.array([row[0] for row in osc], dtype=float)
    values = np.array([row[1] for row in osc], dtype=float)
    alpha = report_dict["holder"].get("alpha", 0.0)

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    if len(values):
        ax1.loglog(radii, np.maximum(values, 1e-300), "ko-", label="measured osc")
    if len(values) and values.max() > 0:
        ref = values.max() * (radii / radii.max()) ** alpha
        ax1.loglog(radii, ref, "r--", label=f"slope {alpha:.3f}")
    ax1.set_xlabel("radius r")
    ax1.set_ylabel("oscillation over past ball")
    ax1.legend(frameon=False, fontsize=8)

    rows = [row for row in report_dict["oscillation"] if "ratio" in row]
    rr = [row["r"] for row in rows]
    ratios = [row["ratio"] for row in rows]
    ax2.bar(range(len(rr)), ratios, color="steelblue")
    ax2.axhline(1.0, color="k", lw=0.8, ls=":")
    ax2.set_xticks(range(len(rr)), [f"{v:g}" for v in rr])
    ax2.set_xlabel("radius r")
    ax2.set_ylabel(f"osc({report_dict['theta']:g} r) / osc(r)")
    ax2.set_ylim(0, max(1.1, max(ratios, default=0) * 1.2))

    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_field_heatmap(field: Field, path: str, title: str = ""):
    """Cell-centered heatmap of one time level."""
    g = field.grid
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    im = ax.imshow(
        field.values.T,
        origin="lower",
        extent=(g.xlo, g.xhi, g.ylo, g.yhi),
        aspect="auto",
        cmap="viridis",
    )
    fig.colorbar(im, ax=ax, shrink=0.9)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
