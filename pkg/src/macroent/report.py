"""Matplotlib figure output for sweep, decay, and spectrum reports.

Rendering always goes through the Agg backend so it works headless; every
function writes one PNG next to the tabular artifact it illustrates.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .scaling import IndexFit, SweepPoint

_DPI = 140


def scaling_figure(points, fit: IndexFit | None, path, title: str,
                   note: str | None = None) -> None:
    """Log-log sweep plot with the fitted power law overlaid."""
    usable = [p for p in points if p.ok and p.effective_value > 0]
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    if usable:
        ns = np.array([p.n for p in usable], dtype=float)
        ax.loglog(ns, [p.effective_value for p in usable], "o", color="tab:blue",
                  label="effective value")
        raws = [p.raw_value for p in usable if p.raw_value > 0]
        raw_ns = [p.n for p in usable if p.raw_value > 0]
        if raws and any(abs(r - e.effective_value) > 0 for r, e in zip(raws, usable)):
            ax.loglog(raw_ns, raws, "x", color="tab:gray", label="raw value")
        if fit is not None:
            grid = np.linspace(ns.min(), ns.max(), 64)
            ax.loglog(grid, np.exp(fit.intercept) * grid**fit.slope, "-",
                      color="tab:orange",
                      label=f"fit: slope {fit.slope:.3f} (r^2 {fit.r_squared:.4f})")
    ax.set_xlabel("sites")
    ax.set_ylabel("value")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    if note:
        fig.text(0.01, 0.01, note, fontsize=7, wrap=True)
        fig.subplots_adjust(bottom=0.22)
    else:
        fig.tight_layout()
    fig.savefig(Path(path), dpi=_DPI)
    plt.close(fig)


def chsh_figure(sizes, values, path) -> None:
    """Decay of the collective four-setting maximum toward the classical 2."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.plot(sizes, values, "o-", color="tab:blue", label="maximum")
    ax.axhline(2.0, color="tab:red", linestyle="--", label="classical bound")
    ax.axhline(2.0 * np.sqrt(2.0), color="tab:gray", linestyle=":",
               label="single-pair ceiling")
    ax.set_xlabel("sites")
    ax.set_ylabel("normalized correlation maximum")
    ax.set_title("collective correlation vs size")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(Path(path), dpi=_DPI)
    plt.close(fig)


def spectrum_figure(spectrum, path, title: str) -> None:
    """Stem plot of the nonzero operator spectrum."""
    spectrum = np.asarray(spectrum, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if spectrum.size:
        ax.stem(np.arange(spectrum.size), spectrum)
    else:
        ax.text(0.5, 0.5, "empty spectrum", ha="center", va="center",
                transform=ax.transAxes)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("eigenvalue index")
    ax.set_ylabel("eigenvalue")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=_DPI)
    plt.close(fig)
