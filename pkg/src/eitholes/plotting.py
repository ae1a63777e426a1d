"""Figures written next to the CSV artifacts of a pipeline run."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_spectrum(path, eigs, model=None, title="DN spectrum"):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    idx = np.arange(len(eigs))
    ax.plot(idx, eigs, "o", ms=4, label="discrete")
    if model is not None:
        ax.plot(idx[: len(model)], model, "x", ms=6, label="annulus fit")
    ax.set_xlabel("index")
    ax.set_ylabel("eigenvalue")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def plot_singular_values(path, sig, tol):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogy(np.arange(1, len(sig) + 1), sig, "o-", ms=3)
    ax.axhline(tol, color="k", ls="--", lw=1, label=f"tol {tol:.2e}")
    ax.set_xlabel("rank")
    ax.set_ylabel("singular value of I + (ΛJ)²")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def plot_cloud(path, values, sheet=None, seam=None, generator=0):
    fig, ax = plt.subplots(figsize=(5, 5))
    z = values[:, generator]
    colors = sheet if sheet is not None else np.zeros(len(z))
    ax.scatter(z.real, z.imag, c=colors, s=2, cmap="coolwarm")
    if seam is not None and len(seam):
        ax.scatter(z.real[seam], z.imag[seam], c="k", s=4, label="seam")
        ax.legend()
    ax.set_aspect("equal")
    ax.set_xlabel(f"Re η{generator}")
    ax.set_ylabel(f"Im η{generator}")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def plot_traces(path, s, elements):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for j, v in enumerate(elements):
        ax.plot(s, v.real, lw=1, label=f"Re η{j}")
        ax.plot(s, v.imag, lw=1, ls="--", label=f"Im η{j}")
    ax.set_xlabel("arc length")
    ax.legend(fontsize=6, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
