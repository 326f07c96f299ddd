"""Matplotlib figures for sweep reports (files only, Agg backend)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_learnability(stats, fit, curve, path, ylabel: str = "final_fidelity") -> Path:
    """Mean decoder fidelity against doping, with error bars and the fit.

    Parameters
    ----------
    stats : sequence of (t, mean, stderr, count)
    fit : FitResult or None
    curve : (t, y) arrays sampled from the fit, or None
    path : output file; the suffix picks the format
    """
    t = np.array([s[0] for s in stats], dtype=float)
    m = np.array([s[1] for s in stats])
    se = np.nan_to_num(np.array([s[2] for s in stats]))
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.errorbar(t, m, yerr=se, fmt="o", ms=4, capsize=2, color="k", label="mean over realizations")
    if curve is not None and fit is not None:
        label = rf"$a e^{{-\alpha t}}+b$: a={fit.a:.3f}, $\alpha$={fit.alpha:.3f}, b={fit.b:.3f}"
        ax.plot(curve[0], curve[1], "-", color="C0", lw=1.2, label=label)
    ax.set_xlabel("T-gate doping t")
    ax.set_ylabel(ylabel.replace("_", " "))
    ax.set_ylim(0, 1.05)
    ax.legend(fontsize=7, frameon=False)
    return _save(fig, path)


def plot_trajectory(trajectory, path, target: float | None = None) -> Path:
    """Fidelity after each Metropolis proposal."""
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.plot(np.arange(len(trajectory)), trajectory, lw=0.8, color="k")
    if target is not None and np.isfinite(target):
        ax.axhline(target, ls="--", lw=0.8, color="C3", label="target")
        ax.legend(fontsize=7, frameon=False)
    ax.set_xlabel("step")
    ax.set_ylabel("F(V)")
    return _save(fig, path)


def plot_fluctuations(ts, variances, predicted, path) -> Path:
    """Ensemble variance of Omega against t on a log scale."""
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.semilogy(ts, variances, "o", color="k", label="ensemble")
    ax.semilogy(ts, predicted, "-", color="C0", label=r"$d_A^{-2} d_D^{-2} (3/4)^t$")
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\Delta\Omega_t$")
    ax.legend(fontsize=7, frameon=False)
    return _save(fig, path)
