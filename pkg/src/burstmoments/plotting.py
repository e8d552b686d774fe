"""Figures written next to the CSV outputs. The CSV remains the contract."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# error colour scale tops out here, matching the published heatmaps
RELERR_VMAX = 60.0


def _numeric(values) -> np.ndarray:
    return np.array([v if not isinstance(v, str) else np.nan for v in values], dtype=float)


def plot_sweep(table, path: str | Path) -> Path:
    """var(B) against E_P[A] for each method present in the sweep table."""
    x = _numeric(table.column("MeanA"))
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    styles = [("SeriesVarB", "series", dict(color="k", lw=1.2)),
              ("BoundVarB", "lower bound", dict(color="tab:blue", lw=1.6, ls="--")),
              ("VarFromLNA", "LNA", dict(color="tab:red", lw=1.2, ls=":")),
              ("VarB_CME", "CME", dict(color="tab:green", marker="s", ls="none", ms=4))]
    for col, label, kw in styles:
        y = _numeric(table.column(col))
        if np.isfinite(y).any():
            ax.plot(x, y, label=label, **kw)
    y = _numeric(table.column("VarB_SSA"))
    if np.isfinite(y).any():
        se = _numeric(table.column("VarB_SSA_SE"))
        ax.errorbar(x, y, yerr=3 * se, fmt="o", ms=3, color="tab:orange", capsize=2, label="SSA (3 SE)")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(r"$\mathbb{E}[A]$")
    ax.set_ylabel(r"Var$(B)$")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_grid(table, path: str | Path) -> Path:
    """Side-by-side relative-error heatmaps for the bound and the LNA."""
    gb = np.unique(_numeric(table.column("gamma_B")))
    ma = np.unique(_numeric(table.column("MeanA")))
    panels = {}
    for col in ("RelErrBoundPct", "RelErrLnaPct"):
        z = np.full((len(gb), len(ma)), np.nan)
        for row in table.rows:
            i = np.searchsorted(gb, row["gamma_B"])
            j = np.searchsorted(ma, row["MeanA"])
            z[i, j] = np.nan if isinstance(row[col], str) else row[col]
        panels[col] = z
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.8), sharey=True)
    for ax, (col, title) in zip(axes, (("RelErrBoundPct", "lower bound"), ("RelErrLnaPct", "LNA"))):
        mesh = ax.pcolormesh(ma, gb, panels[col], shading="nearest", vmin=0.0, vmax=RELERR_VMAX,
                             cmap="viridis")
        ax.set_title(f"relative error, {title} (%)", fontsize=9)
        ax.set_xlabel(r"$\mathbb{E}[A]$")
    axes[0].set_ylabel(r"$\gamma_B$")
    fig.colorbar(mesh, ax=axes, shrink=0.9)
    return _save(fig, path)


def plot_spectrum(report: dict, path: str | Path) -> Path:
    """Per-order contributions to the variance series, on a log scale."""
    terms = np.asarray(report["expansion"]["series_terms"], dtype=float)
    n = np.arange(1, len(terms) + 1)
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    keep = terms > 0
    ax.semilogy(n[keep], terms[keep], "o-", ms=3, color="k")
    ax.set_xlabel("order n")
    ax.set_ylabel("contribution to Var(B)")
    fig.tight_layout()
    return _save(fig, path)


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # fixed metadata keeps reruns byte-identical
    fig.savefig(path, dpi=150, metadata={"Software": None})
    plt.close(fig)
    return path
