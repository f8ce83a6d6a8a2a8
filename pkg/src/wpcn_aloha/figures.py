"""Figure rendering for sweep results.

Renders the two standard report figures (network sum throughput vs. number
of users, and Jain fairness index vs. number of users) from sweep rows and
writes them to files next to the CSV output.  Import stays lazy on the
matplotlib side so headless CSV-only runs never touch a display backend.
"""

from __future__ import annotations

import os
from typing import Sequence

__all__ = ["render_sweep_figures"]

_RC = {
    "figure.figsize": (6.4, 4.4),
    "figure.dpi": 120,
    "savefig.dpi": 200,
    "savefig.bbox": "tight",
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.8,
    "lines.markersize": 5,
    "legend.fontsize": 9,
}

_METRICS = (
    ("sum_throughput", "Sum throughput [bits/s/Hz]", "throughput_vs_k"),
    ("jain", "Jain fairness index", "jain_vs_k"),
)


def _series_label(scheme: str, channel: str, source: str) -> str:
    label = scheme
    if scheme != "static" and channel == "static":
        label += " (static channel)"
    if source == "simulated":
        label += " [sim]"
    return label


def render_sweep_figures(rows: Sequence[dict], fig_dir: str) -> list[str]:
    """Render throughput-vs-K and Jain-vs-K figures from sweep rows.

    Analytic series are drawn as lines with markers, simulated ones as
    unconnected markers on top.  Returns the paths written (png and pdf
    per figure).  Rows that failed to solve are skipped.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(fig_dir, exist_ok=True)
    good = [r for r in rows if not r.get("error")]
    series: dict[tuple[str, str, str], list[dict]] = {}
    for row in good:
        series.setdefault((row["scheme"], row["channel"], row["source"]), []).append(row)

    written: list[str] = []
    with plt.rc_context(_RC):
        for key, ylabel, stem in _METRICS:
            fig, ax = plt.subplots()
            for (scheme, channel, source), pts in series.items():
                pts = sorted(pts, key=lambda r: r["K"])
                ks = [r["K"] for r in pts]
                ys = [r[key] for r in pts]
                style = "o-" if source == "analytic" else "s"
                ax.plot(ks, ys, style, label=_series_label(scheme, channel, source),
                        fillstyle="none" if source == "simulated" else "full")
            ax.set_xlabel("Number of users K")
            ax.set_ylabel(ylabel)
            ax.legend()
            for ext in ("png", "pdf"):
                path = os.path.join(fig_dir, f"{stem}.{ext}")
                fig.savefig(path)
                written.append(path)
            plt.close(fig)
    return written
