"""Figures for the CLI's ``--plot`` option, rendered off-screen to PNG files."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .characterization import FitReport  # noqa: E402
from .hysteresis import MajorLoop  # noqa: E402
from .tuning import CampaignStats, TuningResult  # noqa: E402

_SAVE = {"dpi": 120, "metadata": {"Software": None}}


def plot_tuning(result: TuningResult, loop: MajorLoop, path: str | Path) -> Path:
    """Air-gap flux density over the cycle, and the magnet's path through the BH plane."""
    if result.trajectory is None or not result.trajectory.rows:
        raise ValueError("tuning result carries no trajectory")
    a = result.trajectory.as_array()
    t, U, H, B_m, B_g = a[:, 0], a[:, 1], a[:, 3], a[:, 4], a[:, 5]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.2))
    ax1.plot(t, B_g * 1e3, lw=1.2, label="B_g")
    ax1.axhline(result.B_g_set * 1e3, color="k", ls="--", lw=0.8, label="set-point")
    ax1.axhline(result.reference_B_g * 1e3, color="tab:red", ls=":", lw=0.8, label="corner reference")
    ax1.set_xlabel("t [s]")
    ax1.set_ylabel("B_g [mT]")
    ax1r = ax1.twinx()
    ax1r.plot(t, U, color="tab:gray", lw=0.6, alpha=0.6)
    ax1r.set_ylabel("U_c [V]", color="tab:gray")
    ax1.legend(loc="upper right", fontsize=8)
    ax1.set_title(f"tuning to {result.B_g_set:g} T at l_g = {result.l_g * 1e3:g} mm")

    ax2.plot(loop.H / 1e3, loop.B, color="tab:red", lw=1, label="major branch")
    ax2.plot(H / 1e3, B_m, lw=1.2, label="magnet trajectory")
    ax2.plot(*np.array(result.prediction.corner) / (1e3, 1), "kx", label="corner point")
    ax2.plot(result.prediction.H_o / 1e3, result.prediction.B_o, "o", mfc="none", color="k", label="target (H_o, B_o)")
    ax2.axhline(0, color="k", lw=0.4)
    ax2.axvline(0, color="k", lw=0.4)
    ax2.set_xlabel("H_m [kA/m]")
    ax2.set_ylabel("B_m [T]")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_sweep(H: np.ndarray, B: np.ndarray, loop: MajorLoop, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.plot(loop.H / 1e3, loop.B, color="tab:red", lw=0.8, label="major branch (dataset)")
    ax.plot(H / 1e3, B, lw=0.8, label="estimated from log")
    ax.set_xlabel("H_m [kA/m]")
    ax.set_ylabel("B_m [T]")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_characterization(H: np.ndarray, B: np.ndarray, report: FitReport, path: str | Path) -> Path:
    """Estimated BH trajectory with the extracted chords, and the recoil permeability fit."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.2))
    ax1.plot(H / 1e3, B, lw=0.7, color="tab:blue")
    for c in report.points:
        ax1.plot([c.lo[0] / 1e3, c.hi[0] / 1e3], [c.lo[1], c.hi[1]], "k-", lw=1)
    ax1.set_xlabel("H_m [kA/m]")
    ax1.set_ylabel("B_m [T]")
    ax1.set_title("estimated trajectory and recoil chords")
    x = np.array([c.B_r_prime for c in report.points])
    y = np.array([c.mu_rec for c in report.points])
    xs = np.linspace(min(x.min(), 0.0), max(x.max(), 1.2), 50)
    ax2.plot(x, y, "o", label="extracted")
    ax2.plot(xs, report.fit.slope * xs + report.fit.intercept, "-",
             label=f"mu_rec = {report.fit.slope:.4g} B_r' + {report.fit.intercept:.4g}")
    ax2.set_xlabel("B_r' [T]")
    ax2.set_ylabel("mu_rec [-]")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_campaign(stats: CampaignStats, path: str | Path) -> Path:
    gaps: Sequence[float] = sorted({c.l_g for c in stats.cells})
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.2))
    for g in gaps:
        cells = sorted((c for c in stats.cells if c.l_g == g and c.ok), key=lambda c: c.B_g_set)
        sp = [c.B_g_set for c in cells]
        ax1.plot(sp, [c.MAE * 1e3 for c in cells], "o-", label=f"l_g = {g * 1e3:g} mm")
        ax2.plot(sp, [c.precision_3sigma * 1e3 for c in cells], "s-", label=f"l_g = {g * 1e3:g} mm")
    ax1.set_xlabel("B_g set-point [T]")
    ax1.set_ylabel("MAE [mT]")
    ax2.set_xlabel("B_g set-point [T]")
    ax2.set_ylabel("precision 3 sigma [mT]")
    for ax in (ax1, ax2):
        ax.legend(fontsize=8)
        ax.grid(alpha=0.3)
    fig.tight_layout()
    return _save(fig, path)


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return path
