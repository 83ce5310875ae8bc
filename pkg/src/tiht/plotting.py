"""Convergence figures written next to the CSV reports."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_convergence", "plot_media", "plot_ratio_histogram"]


def plot_convergence(curves, path, title=None, ylabel="relative recovery error"):
    """Semilog plot of error against iteration.

    Parameters
    ----------
    curves : dict
        Maps a legend label to a sequence of errors (index = iteration).
    path : str
        Output file; the format follows the extension.
    """
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for label, errors in curves.items():
        errors = np.asarray(errors, dtype=float)
        ok = np.isfinite(errors) & (errors > 0)
        ax.semilogy(np.arange(errors.size)[ok], errors[ok], label=label, lw=1.4)
    ax.set_xlabel("iteration")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title, fontsize=10)
    if len(curves) > 1:
        ax.legend(fontsize=8, frameon=False)
    ax.grid(True, which="major", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_media(original, recon, errors, path, title=None):
    """Original image, error curve and reconstruction side by side.

    `original` and `recon` are ``(rows, cols, 3)`` RGB or ``(rows, cols)``
    grayscale arrays with values in [0, 1].
    """
    fig, axes = plt.subplots(1, 3, figsize=(10, 3.2))
    cmap = None if np.ndim(original) == 3 else "gray"
    axes[0].imshow(np.clip(original, 0, 1), cmap=cmap, vmin=0, vmax=1)
    axes[0].set_title("original", fontsize=9)
    errors = np.asarray(errors, dtype=float)
    axes[1].semilogy(errors)
    axes[1].set_xlabel("iteration")
    axes[1].set_ylabel("relative error")
    axes[2].imshow(np.clip(recon, 0, 1), cmap=cmap, vmin=0, vmax=1)
    axes[2].set_title("reconstruction", fontsize=9)
    for ax in (axes[0], axes[2]):
        ax.set_xticks([])
        ax.set_yticks([])
    if title:
        fig.suptitle(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_ratio_histogram(ratios, delta, path):
    """Histogram of ``||A(X)||^2 / ||X||^2`` with the ``1 +- delta`` band marked."""
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.hist(ratios, bins=40, color="0.55")
    for x in (1 - delta, 1 + delta):
        ax.axvline(x, color="k", ls="--", lw=1)
    ax.set_xlabel(r"$\|A(X)\|_2^2 / \|X\|_F^2$")
    ax.set_ylabel("count")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
