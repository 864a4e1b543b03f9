"""Figure rendering for CLI outputs.

Each function renders one PNG next to the delimited output it
illustrates.  Rendering is optional (the CSV/JSON files are the data
contract); matplotlib is imported lazily with the Agg backend so the CLI
works headless.
"""

from __future__ import annotations

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_sample_sets(path, sets):
    """Scatter of sampled point sets (first two coordinates for d > 2)."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4))
    for set_id, points in enumerate(sets):
        pts = np.atleast_2d(points)
        if pts.shape[1] == 1:
            ax.scatter(pts[:, 0], np.full(len(pts), set_id), s=12)
        else:
            ax.scatter(pts[:, 0], pts[:, 1], s=12, label=f"set {set_id}")
    ax.set_xlabel("x1")
    ax.set_ylabel("set" if np.atleast_2d(sets[0]).shape[1] == 1 else "x2")
    ax.set_title("sampled point sets")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_tv_sweep(path, estimates):
    """TV distance against sigma^2, one line per method."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4))
    methods = sorted({e.config["method"] for e in estimates})
    for method in methods:
        rows = sorted(
            (e for e in estimates if e.config["method"] == method),
            key=lambda e: e.config["sigma2"],
        )
        x = [e.config["sigma2"] for e in rows]
        y = [e.mean for e in rows]
        err = [e.std_error for e in rows]
        ax.errorbar(x, y, yerr=err, marker="o", capsize=3, label=method)
    ax.set_xlabel("sigma^2")
    ax.set_ylabel("estimated TV distance")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_chain_trace(path, chain):
    """Trajectories of each point slot along the first coordinate."""
    plt = _pyplot()
    arr = np.asarray(chain, dtype=float)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    fig, ax = plt.subplots(figsize=(6, 4))
    for slot in range(arr.shape[1]):
        ax.plot(arr[:, slot, 0], lw=0.8)
    ax.set_xlabel("kept cycle")
    ax.set_ylabel("x1")
    ax.set_title("Gibbs point trajectories")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_mixture_fit(path, data, chain):
    """Data histogram with the posterior-mean mixture density."""
    from .mixture_model import mixture_density

    plt = _pyplot()
    data = np.asarray(data, dtype=float)
    grid = np.linspace(data.min() - 1.0, data.max() + 1.0, 400)
    dens = np.mean([mixture_density(state, grid) for state in chain], axis=0)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.hist(data, bins=30, density=True, alpha=0.4)
    ax.plot(grid, dens, lw=1.5)
    ax.set_xlabel("y")
    ax.set_ylabel("density")
    ax.set_title("posterior-mean mixture density")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_coverage_curves(path, epsilons, curve_dpp, curve_iid):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(epsilons, curve_dpp, label="DPP sample")
    ax.plot(epsilons, curve_iid, label="matched i.i.d.")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("coverage rate")
    ax.set_ylim(0, 1.02)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
