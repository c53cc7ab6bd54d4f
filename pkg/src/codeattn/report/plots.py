"""Static SVG figures: category trends, agreement grids, word-level map pairs."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..metrics import AgreementResult, TrendTable  # noqa: E402

STYLE = {
    "svg.hashsalt": "codeattn",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
}

STAT_LABELS = {
    "alpha": r"mean $\alpha$",
    "scaled_norm": r"mean $||\alpha f(x)||$",
    "transform_norm": r"mean $||f(x)||$",
}
KIND_LABELS = {"alpha": r"$p_\alpha(g)$", "scaled_norm": r"$p_{\alpha f(x)}(g)$"}


def _save(fig, path: Path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_trends(table: TrendTable, statistic: str, path: str | Path, title: str = "") -> Path:
    """One line per category across layers, annotated with word counts."""
    s = table.statistics.index(statistic)
    means = table.means[:, :, s]
    layers = np.arange(1, table.layers + 1)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.5, 3.2))
        for c, cat in enumerate(table.categories):
            if np.all(np.isnan(means[:, c])):
                continue
            n = int(table.counts[0, c])
            ax.plot(layers, means[:, c], marker="o", markersize=3, label=f"{cat.value} (n={n})")
        ax.set_xticks(layers)
        ax.set_xlabel("layer")
        ax.set_ylabel(STAT_LABELS.get(statistic, statistic))
        ax.set_title(title or STAT_LABELS.get(statistic, statistic))
        ax.legend(fontsize=7, frameon=False, loc="center left", bbox_to_anchor=(1.0, 0.5))
        return _save(fig, path)


def plot_agreement(result: AgreementResult, kind: str, path: str | Path, title: str = "") -> Path:
    """Layer x head agreement grid (undefined cells blank) with per-layer maxima bars."""
    k = result.map_kinds.index(kind)
    p = result.p[:, :, k] * 100.0
    layers, heads = p.shape
    best = result.layer_max(kind) * 100.0
    with plt.rc_context(STYLE):
        fig, (ax, bx) = plt.subplots(
            1, 2, figsize=(5.5, 0.3 * layers + 1.2), gridspec_kw={"width_ratios": [heads, 3]}, sharey=True
        )
        masked = np.ma.masked_invalid(p)
        im = ax.imshow(masked, cmap="Blues", vmin=0, vmax=100, aspect="auto")
        ax.set_xticks(range(heads), [str(h + 1) for h in range(heads)])
        ax.set_yticks(range(layers), [str(i + 1) for i in range(layers)])
        ax.set_xlabel("head")
        ax.set_ylabel("layer")
        ax.set_title(title or KIND_LABELS.get(kind, kind))
        fig.colorbar(im, ax=ax, fraction=0.04, pad=0.02, label="agreement (%)")
        vals = np.nan_to_num(best, nan=0.0)
        bx.barh(range(layers), vals, color="tab:blue")
        for i, v in enumerate(best):
            if not np.isnan(v):
                bx.text(v + 1, i, f"{v:.1f}", va="center", fontsize=6)
        bx.set_xlim(0, 110)
        bx.set_xlabel("max (%)")
        return _save(fig, path)


def plot_map_pair(
    words: list[str], alpha: np.ndarray, scaled: np.ndarray, path: str | Path, title: str = ""
) -> Path:
    """Attention map next to its norm-scaled counterpart at word level."""
    m = len(words)
    size = min(12.0, 2.0 + 0.18 * m)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 2, figsize=(2 * size + 1, size))
        for ax, data, label in ((axes[0], alpha, r"$\alpha$"), (axes[1], scaled, r"$||\alpha f(x)||$")):
            im = ax.imshow(data, cmap="viridis", aspect="equal")
            ax.set_title(label)
            if m <= 80:
                ax.set_xticks(range(m), words, rotation=90, fontsize=6)
                ax.set_yticks(range(m), words, fontsize=6)
            fig.colorbar(im, ax=ax, fraction=0.046, pad=0.02)
        if title:
            fig.suptitle(title)
        return _save(fig, path)
