"""Matplotlib figures written next to the CSV/JSON output (``--figures``)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.labelsize": 11,
    "legend.fontsize": 9,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "figure.figsize": (6.4, 4.0),
    "savefig.dpi": 120,
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def trajectory_figure(t, rho, lower, upper, path):
    """Height with its two-sided growth envelope, log scale."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.fill_between(t, lower, upper, color="0.85", label="growth envelope")
        ax.plot(t, rho, color="C0", lw=1.6, label=r"$\rho(t)$")
        ax.set_yscale("log")
        ax.set_xlabel("t")
        ax.set_ylabel("height")
        ax.legend(loc="best")
        _save(fig, path)


def orbit_figure(t, rho, phi, bracket, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(t, rho, color="C0", lw=1.8, label=r"$\rho^*(t)$")
        ax.axhline(bracket.x_bar, color="0.5", ls=":", lw=1)
        ax.axhline(bracket.x2, color="0.5", ls=":", lw=1)
        ax.set_xlabel("t")
        ax.set_ylabel(r"$\rho^*$")
        twin = ax.twinx()
        twin.plot(t, phi, color="C3", ls="--", lw=1.2, label=r"$\Phi(t)$")
        twin.set_ylabel(r"$\Phi$")
        lines = ax.get_lines()[:1] + twin.get_lines()
        ax.legend(lines, [ln.get_label() for ln in lines], loc="best")
        _save(fig, path)


def convergence_figure(probes, period, path):
    """Measured deviation per period against the rate bound, one color per start."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for i, pr in enumerate(probes):
            n = np.arange(len(pr["deviation"]))
            ax.semilogy(n, pr["deviation"], color=f"C{i}", lw=1.4, label=f"c = {pr['factor']:g}")
            ax.semilogy(n, pr["C"] * np.exp(-pr["delta"] * n * period), color=f"C{i}", ls="--", lw=1)
        ax.set_xlabel("periods")
        ax.set_ylabel(r"$|\rho/\rho^* - 1|$")
        ax.legend(loc="best")
        _save(fig, path)
