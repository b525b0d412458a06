"""Figure output for metric series and trajectory sets (file-only, Agg backend)."""
from __future__ import annotations

from pathlib import Path
from typing import Mapping, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .metric import MetricSeries  # noqa: E402
from .trajectory import TrajectorySet  # noqa: E402

__all__ = ["plot_series", "plot_trajectories"]

_LABELS = {
    "star_id": "Star-ID",
    "ta_star_id": "TA-Star-ID",
    "ospa": "OSPA",
    "gospa": "GOSPA",
    "ospa2": "OSPA$^{(2)}$",
    "imta": "IMTA",
}


def plot_series(
    series: Mapping[str, MetricSeries],
    path,
    title: Optional[str] = None,
    ylabel: str = "metric value",
    logy: bool = False,
) -> Path:
    """Draw each labelled series against time and save to ``path``."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4))
    try:
        for label, s in series.items():
            ax.plot(s.times, s.values, label=_LABELS.get(label, label), lw=1.4)
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel("time (s)")
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.grid(alpha=0.3)
        if series:
            ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, dpi=120)
    finally:
        plt.close(fig)
    return path


def plot_trajectories(truth: TrajectorySet, est: Optional[TrajectorySet], path, samples: int = 200, title=None) -> Path:
    """Plane view of 2-D sets, or value against time for 1-D sets."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 5))
    try:
        for tset, style in ((truth, "-"), (est, "--")):
            if tset is None:
                continue
            for tr in tset:
                ts = np.linspace(tr.t_start, tr.t_end, samples)
                v = tr.values(ts)
                if tset.dim >= 2:
                    ax.plot(v[:, 0], v[:, 1], style, lw=1.2, label=tr.id)
                else:
                    ax.plot(ts, v[:, 0], style, lw=1.2, label=tr.id)
        if truth.dim >= 2:
            ax.set_xlabel("x (m)")
            ax.set_ylabel("y (m)")
            ax.set_aspect("equal", adjustable="datalim")
        else:
            ax.set_xlabel("time (s)")
            ax.set_ylabel("position (m)")
        if title:
            ax.set_title(title)
        ax.legend(frameon=False, fontsize="small")
        fig.tight_layout()
        fig.savefig(path, dpi=120)
    finally:
        plt.close(fig)
    return path
