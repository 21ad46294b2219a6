"""Figure rendering for the command-line report path.

Each function takes data already computed by the sweep layer plus an
output path, draws one matplotlib figure and closes it.  Nothing here
computes science.  Saving strips the Software tag so identical data
produces identical PNG bytes on reruns.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE = {"dpi": 150, "metadata": {"Software": None}}
_OURS = "tab:orange"
_LOOP = "tab:blue"
_ALT = "tab:green"


def _finish(fig, path):
    fig.savefig(path, **_SAVE)
    plt.close(fig)


def heat_map(path, x, y, values, *, xlabel, ylabel, clabel,
             contour_levels=()):
    """Filled map of values[i, j] over rows y[i] and columns x[j]."""
    fig, ax = plt.subplots(figsize=(5.4, 4.2), constrained_layout=True)
    mesh = ax.pcolormesh(x, y, values, shading="nearest", cmap="viridis")
    if contour_levels:
        ax.contour(x, y, values, levels=list(contour_levels),
                   colors="white", linewidths=0.8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.colorbar(mesh, ax=ax, label=clabel)
    _finish(fig, path)


def population_curves(path, t_over_tau, chi_values, populations):
    """Auxiliary-level occupation against normalized time, one line per path."""
    fig, ax = plt.subplots(figsize=(5.4, 3.6), constrained_layout=True)
    for chi, row in zip(chi_values, populations):
        ax.plot(t_over_tau, row, label=f"chi = {chi / np.pi:.1f} pi")
    ax.set_xlabel("t / tau")
    ax.set_ylabel("auxiliary population")
    ax.set_xlim(0.0, 1.0)
    ax.legend(fontsize=8)
    _finish(fig, path)


def infidelity_surfaces(path, deltas, epsilons, ours, loop):
    """Two 1 - F sheets over the joint error plane, path scheme vs full loop."""
    fig = plt.figure(figsize=(6.0, 4.6))
    ax = fig.add_subplot(projection="3d")
    d, e = np.meshgrid(deltas, epsilons, indexing="ij")
    ax.plot_surface(d, e, loop, color=_LOOP, alpha=0.55, label="full loop")
    ax.plot_surface(d, e, ours, color=_OURS, alpha=0.9, label="optimized path")
    ax.set_xlabel("detuning error")
    ax.set_ylabel("amplitude error")
    ax.set_zlabel("1 - F")
    # proxy handles: plot_surface legends are unreliable across versions
    handles = [plt.Line2D([0], [0], color=_OURS, lw=4),
               plt.Line2D([0], [0], color=_LOOP, lw=4)]
    ax.legend(handles, ["optimized path", "full loop"], fontsize=8)
    _finish(fig, path)


def robustness_panels(path, values, panels):
    """2 x 2 grid of fidelity-vs-error curves.

    panels maps (row, col) to a dict with keys "title", "ours", "loop" and
    optional "alt" (the all-transmon variant), each a curve over values.
    """
    fig, axes = plt.subplots(2, 2, figsize=(8.0, 6.0), constrained_layout=True)
    for (i, j), panel in panels.items():
        ax = axes[i][j]
        ax.plot(values, panel["loop"], color=_LOOP, label="SL")
        ax.plot(values, panel["ours"], color=_OURS, label="ours")
        if panel.get("alt") is not None:
            ax.plot(values, panel["alt"], color=_ALT, ls="--", label="3T")
        ax.set_title(panel["title"], fontsize=9)
        ax.set_xlabel(panel["xlabel"])
        ax.set_ylabel("F")
        ax.legend(fontsize=8)
    _finish(fig, path)


def pair_populations(path, times, p01, p11, p02, state_fidelity):
    """Benchmark-state populations of the controlled-phase run."""
    fig, ax = plt.subplots(figsize=(5.4, 3.6), constrained_layout=True)
    ax.plot(times, p01, label="|01>")
    ax.plot(times, p11, label="|11>")
    ax.plot(times, p02, label="|02>")
    ax.set_xlabel("t (ns)")
    ax.set_ylabel("population")
    ax.set_title(f"final state fidelity {state_fidelity:.4f}", fontsize=9)
    ax.legend(fontsize=8)
    _finish(fig, path)
