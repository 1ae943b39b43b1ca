"""Figure rendering for the report paths.

Every CLI report writes a figure next to its delimited output: the
convergence sweep plots the average decay exponent against the step size,
the energy trace plots the value gap and the discrete energies, and the
swarm batch plots the outcome mix over trials.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def convergence_figure(rows, path) -> None:
    """p-bar against the step size, one line per scheme."""
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    by_scheme: dict[str, list] = {}
    for row in rows:
        by_scheme.setdefault(row["scheme"], []).append(row)
    for scheme, items in by_scheme.items():
        items = sorted(items, key=lambda r: -r["h"])
        hs = [r["h"] for r in items]
        ps = [r["p_bar"] for r in items]
        ax.plot(hs, ps, "o-", label=scheme)
        for r in items:
            if not r["success"]:
                ax.plot([r["h"]], [r["p_bar"]], "rx", markersize=9)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("step size h")
    ax.set_ylabel(r"average rate exponent $\bar{p}$")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def trace_figure(rows, path) -> None:
    """Value gap, Lyapunov energy and kinetic part per step (semilog)."""
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6))
    ks = [r["k"] for r in rows]

    def positive(series):
        return [v if v > 0 else float("nan") for v in series]

    axes[0].semilogy(ks, positive([r["f_gap"] for r in rows]), label="F - F*")
    axes[0].semilogy(
        ks, positive([r["energy_fd"] for r in rows]), label="discrete energy"
    )
    axes[0].semilogy(ks, positive([r["kinetic"] for r in rows]), label="kinetic")
    axes[0].set_xlabel("k")
    axes[0].grid(True, alpha=0.3)
    axes[0].legend()

    ps = [r["p_k"] for r in rows]
    axes[1].plot(ks, ps, ".", markersize=3)
    finite = [p for p in ps if p is not None and not math.isnan(p)]
    if finite:
        axes[1].set_ylim(min(finite) - 0.5, max(finite) + 0.5)
    axes[1].set_xlabel("k")
    axes[1].set_ylabel(r"$p_k$")
    axes[1].grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def swarm_figure(row, records, path) -> None:
    """Success-rate bar plus the iteration-count histogram."""
    fig, axes = plt.subplots(1, 2, figsize=(8.0, 3.4))
    axes[0].bar(["success", "failure"], [
        row["successes"], row["trials"] - row["successes"]
    ], color=["tab:green", "tab:red"])
    axes[0].set_title(
        f"{row['scheme']} on {row['function']} (d={row['dim']}, {row['param']}): "
        f"rate {row['success_rate']:.3f}"
    )
    iters = [r.iterations for r in records]
    axes[1].hist(iters, bins=min(40, max(5, len(set(iters)))))
    axes[1].set_xlabel("iterations per trial")
    axes[1].set_ylabel("trials")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
