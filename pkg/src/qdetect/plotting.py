"""Matplotlib renderings of the report CSVs, written next to them.

Every CLI report command saves a PNG alongside its delimited output unless
plotting is disabled; these helpers keep the figures plain and dependency
free beyond matplotlib itself.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _new_axes(xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def _finish(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_survival_figure(path, times, survival, stderr) -> None:
    fig, ax = _new_axes("time", "non-detection probability")
    ax.errorbar(times, survival, yerr=stderr, fmt=".", ms=2, lw=0.8, color="tab:blue")
    ax.set_yscale("log")
    positive = survival[survival > 0]
    if positive.size:
        ax.set_ylim(max(positive.min() * 0.5, 1e-7), 1.3)
    _finish(fig, path)


def save_density_figure(path, centers, density, stderr, analytic_grid=None,
                        analytic_values=None) -> None:
    fig, ax = _new_axes("time", "first-detection density")
    ax.errorbar(centers, density, yerr=stderr, fmt=".", ms=3, lw=0.8,
                color="tab:blue", label="Monte Carlo")
    if analytic_grid is not None:
        ax.plot(analytic_grid, analytic_values, "--", color="tab:red", label="exact")
    ax.legend()
    _finish(fig, path)


def save_density_curves_figure(path, grid, curves: dict) -> None:
    """Overlay one exact density curve per measurement rate."""
    fig, ax = _new_axes("time", "first-detection density")
    for label, values in curves.items():
        ax.plot(grid, values, lw=1.2, label=label)
    ax.legend()
    _finish(fig, path)


def save_sweep_figure(path, rates, mfdt_analytic, r_star=None, mfdt_mc=None,
                      mfdt_mc_stderr=None) -> None:
    fig, ax = _new_axes("measurement rate", "mean first detection time")
    ax.loglog(rates, mfdt_analytic, "--", color="tab:red", label="exact")
    if mfdt_mc is not None:
        ax.errorbar(rates, mfdt_mc, yerr=mfdt_mc_stderr, fmt="o", ms=3,
                    color="tab:blue", label="Monte Carlo")
    if r_star is not None and np.isfinite(r_star):
        ax.axvline(r_star, color="gray", lw=0.8, ls=":", label="optimal rate")
    ax.legend()
    _finish(fig, path)


def save_timescale_figure(path, rates, timescales) -> None:
    fig, ax = _new_axes("measurement rate", "tail decay time")
    ax.loglog(rates, timescales, color="tab:green")
    _finish(fig, path)


def save_basis_figure(path, basis, title: str) -> None:
    """Site-resolved magnitudes of a set of basis vectors."""
    fig, ax = _new_axes("site", "basis vector")
    mags = np.abs(basis.T)
    im = ax.imshow(mags, aspect="auto", origin="lower", cmap="viridis",
                   extent=(0.5, basis.shape[0] + 0.5, -0.5, basis.shape[1] - 0.5))
    ax.set_title(title)
    fig.colorbar(im, ax=ax, label="|amplitude|")
    _finish(fig, path)
