"""Matplotlib figures written next to the CSV/text outputs."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def savefig(fig, filename):
    fig.savefig(filename, dpi=120, bbox_inches="tight", pad_inches=0.1)
    plt.close(fig)


def plot_speed(field, grid, t, filename, title=None):
    """Colour map of a nodal scalar field (typically ``|u|``)."""
    values = np.asarray(field).reshape(grid.ny, grid.nx)
    fig, ax = plt.subplots(figsize=(5, 4.4))
    im = ax.imshow(values, origin="lower", extent=(0, grid.Lx, 0, grid.Ly),
                   cmap="viridis", interpolation="nearest")
    fig.colorbar(im, ax=ax, shrink=0.85, label="|u|")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(title or f"t = {t:.4f}")
    savefig(fig, filename)


def plot_energy(times, hamiltonian, filename, label=None):
    """Hamiltonian against time, with the relative drift on a second axis."""
    times = np.asarray(times)
    H = np.asarray(hamiltonian)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(times, H, lw=1.2, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("H")
    if H[0] != 0:
        ax2 = ax.twinx()
        ax2.plot(times, (H - H[0]) / abs(H[0]), lw=0.0)
        ax2.set_ylabel("(H - H(0)) / |H(0)|")
    if label:
        ax.legend(loc="best", frameon=False)
    ax.grid(alpha=0.3)
    savefig(fig, filename)


def plot_energy_comparison(series, filename):
    """Overlay ``H(t) - H(0)`` for several runs; ``series`` maps label -> (t, H)."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for label, (t, H) in series.items():
        H = np.asarray(H)
        ax.plot(t, H - H[0], lw=1.2, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("H(t) - H(0)")
    ax.legend(loc="best", frameon=False)
    ax.grid(alpha=0.3)
    savefig(fig, filename)
