"""Figures written next to the CSV/JSON reports (headless Agg backend)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_spectrum", "plot_trace", "plot_scan", "plot_zne", "plot_qse"]

# no Software/date chunks, so reruns write identical files
_PNG_META = {"Software": None}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)
    return path


def plot_spectrum(energies: Sequence[float], path: Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(3.2, 4.0))
    for e in energies:
        ax.hlines(e, 0.1, 0.9, color="C0")
    ax.set_xticks([])
    ax.set_ylabel("energy (eV)")
    ax.set_title(title or "FCI spectrum")
    return _save(fig, path)


def plot_trace(energies: Sequence[float], errors: Sequence[float], path: Path, reference: float | None = None) -> Path:
    k = np.arange(len(energies))
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.errorbar(k, energies, yerr=errors, fmt=".", ms=3, lw=0.6, color="C0", label="estimate")
    if reference is not None:
        ax.axhline(reference, color="k", ls="--", lw=0.8, label="FCI")
    ax.set_xlabel("iteration")
    ax.set_ylabel("energy (eV)")
    ax.legend()
    return _save(fig, path)


def plot_scan(thetas: Sequence[float], energies: Sequence[float], errors: Sequence[float], path: Path,
              exact: Sequence[float] | None = None) -> Path:
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.errorbar(thetas, energies, yerr=errors, fmt="o", ms=3, color="C0", label="measured")
    if exact is not None:
        ax.plot(thetas, exact, color="k", lw=0.8, label="noiseless")
    ax.set_xlabel(r"$\theta$ (rad)")
    ax.set_ylabel("energy (eV)")
    ax.legend()
    return _save(fig, path)


def plot_zne(ns: Sequence[float], means: Sequence[float], sigmas: Sequence[float], fit_curve, zero_noise: tuple[float, float],
             path: Path, reference: float | None = None) -> Path:
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.errorbar(ns, means, yerr=sigmas, fmt="o", color="C0", label="measured")
    grid = np.linspace(0.0, max(ns), 100)
    ax.plot(grid, fit_curve(grid), color="C1", lw=1.0, label="fit")
    ax.errorbar([0.0], [zero_noise[0]], yerr=[zero_noise[1]], fmt="s", color="C1")
    if reference is not None:
        ax.axhline(reference, color="k", ls="--", lw=0.8, label="noiseless")
    ax.set_xlabel("replication factor n")
    ax.set_ylabel("energy (eV)")
    ax.legend()
    return _save(fig, path)


def plot_qse(columns: dict[str, Sequence[float] | None], reference: Sequence[float], path: Path) -> Path:
    """Level diagrams, one column per extrapolation variant plus the exact spectrum."""
    names = ["exact"] + [k for k, v in columns.items() if v is not None]
    fig, ax = plt.subplots(figsize=(1.4 * len(names) + 1.0, 4.0))
    for x, name in enumerate(names):
        levels = reference if name == "exact" else columns[name]
        for e in levels:
            ax.hlines(e, x - 0.35, x + 0.35, color="k" if name == "exact" else "C0", lw=1.0)
    ax.set_xticks(range(len(names)), names, rotation=20)
    ax.set_ylabel("energy (eV)")
    return _save(fig, path)
