"""Figures for a run report, rendered off-screen to PNG files."""
from __future__ import annotations

from pathlib import Path
from typing import Dict, List


def render_figures(stats: Dict[str, object], prefix: str) -> List[Path]:
    """Write ``<prefix>_discrepancies.png`` and ``<prefix>_refuters.png``.

    ``stats`` is the flat key/value report; the histogram is read back from
    its ``disc_hist_<k>`` keys.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = []
    hist = sorted((int(k[len("disc_hist_"):]), int(v)) for k, v in stats.items()
                  if k.startswith("disc_hist_"))
    fig, ax = plt.subplots(figsize=(5, 3))
    if hist:
        ax.bar([k for k, _ in hist], [v for _, v in hist], color="#4477aa")
    ax.set_xlabel("discrepancies on path")
    ax.set_ylabel("closed leaves")
    ax.set_title("Leaf discrepancies")
    fig.tight_layout()
    path = Path(f"{prefix}_discrepancies.png")
    fig.savefig(path)
    plt.close(fig)
    out.append(path)

    labels = ["emitted", "lookahead", "cdcl"]
    values = [int(stats.get(k, 0)) for k in ("cubes_emitted", "cubes_refuted_la", "cubes_refuted_cdcl")]
    fig, ax = plt.subplots(figsize=(4, 3))
    ax.bar(labels, values, color=["#999933", "#4477aa", "#cc6677"])
    ax.set_ylabel("leaves")
    ax.set_title("How leaves were closed")
    fig.tight_layout()
    path = Path(f"{prefix}_refuters.png")
    fig.savefig(path)
    plt.close(fig)
    out.append(path)
    return out
