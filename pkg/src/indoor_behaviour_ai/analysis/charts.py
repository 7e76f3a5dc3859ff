"""SVG line charts for the behaviour report (reproducible byte-for-byte across runs)."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

SVG_SALT = "indoor-behaviour"


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def line_chart(
    frame: pd.DataFrame, x: str, y: str, series: str, title: str, ylabel: str, path: Path,
) -> Path:
    """One line per distinct value of `series`, y against x."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for name, group in frame.groupby(series, sort=True):
        group = group.sort_values(x)
        ax.plot(group[x], group[y], marker="o", label=str(name))
    ax.set_title(title)
    ax.set_xlabel(x)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    if frame[series].nunique() > 0:
        ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    return _save(fig, path)
