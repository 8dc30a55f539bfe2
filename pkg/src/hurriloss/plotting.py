"""Static figures written next to the delimited outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "axes.spines.top": False,
    "axes.spines.right": False,
}

# PNG metadata without version strings keeps reruns byte-stable.
_META = {"Software": None}


def _save(fig, path):
    fig.savefig(path, bbox_inches="tight", metadata=_META)
    plt.close(fig)
    return path


def importance_bars(ranked_pairs, path, title="Gain importance"):
    names = [k for k, _ in ranked_pairs][::-1]
    shares = [v for _, v in ranked_pairs][::-1]
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(5.0, 0.25 * len(names) + 1.0))
        ax.barh(names, shares, color="#3b6ea5")
        ax.set_xlabel("share of total split gain")
        ax.set_title(title)
        ax.set_xlim(0, max(shares + [0.0]) * 1.1 or 1.0)
        return _save(fig, path)


def zcta_maps(rows, path):
    """Two centroid scatter maps: adjusted total cost (log colour) and dam count."""
    lat = np.array([r["lat"] for r in rows])
    lon = np.array([r["lon"] for r in rows])
    cost = np.log10(1.0 + np.array([r["adjusted_total_cost"] for r in rows]))
    dams = np.array([r["dams"] for r in rows])
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, 2, figsize=(9.0, 4.0), sharey=True)
        for ax, vals, label, cmap in (
            (axes[0], cost, "log10(1 + adjusted total cost)", "magma_r"),
            (axes[1], dams, "dams", "Blues"),
        ):
            sc = ax.scatter(lon, lat, c=vals, s=6, cmap=cmap, linewidths=0)
            ax.set_xlabel("longitude")
            ax.set_aspect("equal", adjustable="datalim")
            fig.colorbar(sc, ax=ax, label=label, shrink=0.8)
        axes[0].set_ylabel("latitude")
        axes[0].set_title("(a) adjusted replacement cost")
        axes[1].set_title("(b) dams per ZCTA")
        return _save(fig, path)


def fold_metrics(report_dict, path):
    """Box plot of per-fold R^2 for one evaluation report."""
    folds = report_dict["per_fold"]
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, 5, figsize=(10.0, 2.6))
        for ax, name in zip(axes, ("r2", "mae", "smape", "rmse", "rmsle")):
            ax.boxplot([f[name] for f in folds], widths=0.5)
            ax.set_title(name.upper())
            ax.set_xticks([])
        fig.suptitle(f"{report_dict['model']} ({report_dict['folds']} folds)")
        return _save(fig, path)
