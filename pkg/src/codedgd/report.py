"""Figure rendering for run outputs: completion CDFs and sweep curves.

Figures are written next to the CSV files they visualize; the CSVs remain
the machine-readable contract.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_FIG_SIZE = (6.0, 4.0)


def render_cdf_figure(path, t, closed_form, monte_carlo, title):
    fig, ax = plt.subplots(figsize=_FIG_SIZE)
    ax.plot(t, closed_form, label="closed form", lw=1.5)
    ax.step(t, monte_carlo, where="post", label="simulation", lw=1.0, alpha=0.8)
    ax.set_xlabel("iteration completion time")
    ax.set_ylabel("Pr(T ≤ t)")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    ax.legend(loc="lower right", frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_empirical_cdfs(path, curves, title):
    """Overlay empirical completion CDFs: curves = {label: sorted samples}."""
    fig, ax = plt.subplots(figsize=_FIG_SIZE)
    for label, samples in curves.items():
        n = len(samples)
        ax.step(samples, [(i + 1) / n for i in range(n)], where="post", label=label)
    ax.set_xlabel("iteration completion time")
    ax.set_ylabel("empirical Pr(T ≤ t)")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    ax.legend(loc="lower right", frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_sweep_figures(out_dir, rows, param_name):
    """Mean completion and communication load versus the swept parameter.

    rows: iterable of dicts with scheme, param_point, mean_completion_ms,
    mean_msgs keys (the summary-table rows).
    """
    by_scheme = {}
    for row in rows:
        by_scheme.setdefault(row["scheme"], []).append(row)
    made = []
    for metric, ylabel, fname in (
            ("mean_completion_ms", "mean completion time", "fig_sweep_completion.png"),
            ("mean_msgs", "communication load (messages/iteration)", "fig_sweep_load.png")):
        fig, ax = plt.subplots(figsize=_FIG_SIZE)
        for scheme, entries in sorted(by_scheme.items()):
            entries = sorted(entries, key=lambda e: e["param_point"])
            xs = [e["param_point"] for e in entries]
            ys = [e[metric] for e in entries]
            ax.plot(xs, ys, marker="o", ms=3, label=scheme)
        ax.set_xlabel(param_name or "grid point")
        ax.set_ylabel(ylabel)
        ax.legend(frameon=False, fontsize=8)
        ax.grid(alpha=0.3)
        fig.tight_layout()
        target = f"{out_dir}/{fname}"
        fig.savefig(target, dpi=150)
        plt.close(fig)
        made.append(target)
    return made
