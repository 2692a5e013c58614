"""Optional PNG figures for the CLI outputs (matplotlib, Agg backend)."""
from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import numpy as np

GOLDEN = (np.sqrt(5) - 1.0) / 2.0
FIG_WIDTH = 5.0
PARAMS = {
    "font.family": "serif",
    "font.size": 9,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 3,
    "figure.figsize": (FIG_WIDTH, FIG_WIDTH * GOLDEN),
    "figure.dpi": 150,
    "savefig.bbox": "tight",
}


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams.update(PARAMS)
    return plt


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, metadata={"Software": None})
    import matplotlib.pyplot as plt
    plt.close(fig)
    return path


def plot_tdcs(curves: Sequence, path, overlay: Optional[tuple] = None) -> Path:
    """TDCS curves against detection angle; ``overlay`` = (theta, value, error) rescaled data."""
    plt = _pyplot()
    fig, ax = plt.subplots()
    styles = {"dwba_fm": dict(lw=0.8), "dwba_pseudo": dict(lw=2.0)}
    for c in curves:
        ax.plot(c.theta, c.sigma, color="k", label=c.model_tag, **styles.get(c.model_tag, {}))
    if overlay is not None:
        t, v, e = overlay
        ax.errorbar(t, v, yerr=e, fmt="o", color="0.4", mfc="none", label="experiment")
    ax.set_xlim(0, 360)
    ax.set_xticks(range(0, 361, 60))
    ax.set_xlabel(r"$\theta$ (deg)")
    ax.set_ylabel("TDCS (a.u.)")
    if curves:
        ax.set_title(f"$E_{{exc}}$ = {curves[0].kinematics.E_exc:g} eV")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_phase_shifts(rows: Sequence[tuple], path, reference: Optional[Sequence[tuple]] = None) -> Path:
    """delta_l(E) from (l, E_eV, delta) rows, one line per l."""
    plt = _pyplot()
    fig, ax = plt.subplots()
    rows = np.asarray(rows, dtype=float).reshape(-1, 3)
    for l in np.unique(rows[:, 0]):
        sel = rows[:, 0] == l
        ax.plot(rows[sel, 1], rows[sel, 2], "-o", label=f"l = {int(l)}")
    if reference:
        ref = np.asarray(reference, dtype=float).reshape(-1, 3)
        ax.plot(ref[:, 1], ref[:, 2], "k.", label="reference")
    ax.set_xlabel("E (eV)")
    ax.set_ylabel(r"$\delta_l$ (rad)")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_defects(n, mu_exp, path, mu_model=None) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots()
    ax.plot(n, mu_exp, "ko", mfc="none", label="levels file")
    if mu_model is not None:
        ax.plot(n, mu_model, "k-", label="model")
    ax.set_xlabel("n")
    ax.set_ylabel(r"$\mu_n$")
    ax.legend(frameon=False)
    return _save(fig, path)
