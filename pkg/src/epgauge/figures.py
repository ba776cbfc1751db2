"""Figure rendering for the CLI report path.

The library itself emits plot-ready CSV series; this module turns them
into PNG files next to the delimited output.  Rendering is deterministic:
the Agg backend is forced and the PNG metadata is pinned so identical runs
produce identical bytes (with identical library versions).
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

#: world-average index; drawn as a reference line
WORLD_AVERAGE_EP = 0.1

_PNG_METADATA = {"Software": "epgauge"}


def render_ep_series_figure(rows: Iterable[tuple[str, int, float]], path: str | Path) -> Path:
    """Line chart of e_p by year, one line per cohort, saved as PNG."""
    series: dict[str, list[tuple[int, float]]] = {}
    for cohort, year, ep in sorted(rows):
        series.setdefault(cohort, []).append((year, ep))
    if not series:
        raise ValueError("no series to plot")
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for cohort, points in series.items():
        years = [y for y, _ in points]
        eps = [e for _, e in points]
        ax.plot(years, eps, marker="o", label=cohort)
    ax.axhline(WORLD_AVERAGE_EP, color="grey", linestyle="--", linewidth=1, label="world average")
    ax.set_xlabel("publication year")
    ax.set_ylabel("e_p index")
    ax.xaxis.get_major_locator().set_params(integer=True)
    ax.legend()
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, format="png", metadata=_PNG_METADATA)
    plt.close(fig)
    return out
