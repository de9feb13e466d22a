"""Figures for stability sweeps.  Renders off-screen with the Agg canvas."""

from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

__all__ = ["plot_sweep"]


def plot_sweep(records: list[dict], fit: dict | None, path, title: str = "") -> None:
    """Log-log plot of annulus gap against ``[u_nu]`` with the fitted line.

    Records excluded from the fit are drawn hollow.
    """
    fig = Figure(figsize=(5.0, 4.0), dpi=150)
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(1, 1, 1)
    pts = [(r["seminorm"], r["gap"], r["excluded"]) for r in records
           if r["seminorm"] is not None and r["gap"] is not None and r["seminorm"] > 0 and r["gap"] > 0]
    if pts:
        x, y, ex = map(np.array, zip(*pts))
        ax.loglog(x[~ex], y[~ex], "o", color="C0", label="fitted")
        if ex.any():
            ax.loglog(x[ex], y[ex], "o", mfc="none", color="C3", label="excluded")
        if fit:
            xs = np.geomspace(x.min(), x.max(), 50)
            ax.loglog(xs, np.exp(fit["intercept"]) * xs ** fit["slope"], "-", color="k", lw=1,
                      label=f"slope {fit['slope']:.3f}")
    else:
        ax.text(0.5, 0.5, "no positive (seminorm, gap) pairs", ha="center", transform=ax.transAxes)
    ax.set_xlabel(r"$[u_\nu]_{\partial\Omega}$")
    ax.set_ylabel(r"$r_e - r_i$")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", lw=0.3, alpha=0.5)
    if pts:
        ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None} if str(path).endswith(".png") else None)
