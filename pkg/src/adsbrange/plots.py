"""Render report figures to files (headless matplotlib)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_METRIC_LABEL = {
    "range": r"$1-P_{\mathrm{out},r}$",
    "phase_raw": r"$1-P_{\mathrm{out},\theta}$ (raw)",
    "phase_circ": r"$1-P_{\mathrm{out},\theta}$ (circular)",
}


def _series(rows, metric, x_key):
    """Group report rows of one metric into {alpha: (x, success, stderr)}."""
    out = {}
    for row in rows:
        if row["metric"] != metric:
            continue
        out.setdefault(row["alpha"], []).append(
            (row[x_key], row["success"], row["stderr"])
        )
    return {
        alpha: np.array(sorted(points)).T for alpha, points in out.items()
    }


def save_sweep_figures(rows, out_dir, prefix="sweep") -> list:
    """One figure for range and one for phase success rates versus SNR."""
    paths = []
    for fname, metrics in ((f"{prefix}_range.png", ["range"]),
                           (f"{prefix}_phase.png", ["phase_raw", "phase_circ"])):
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for metric, style in zip(metrics, ("-o", "--s")):
            for alpha, (x, y, err) in sorted(_series(rows, metric, "gamma_db").items()):
                ax.errorbar(x, y, yerr=2 * err, fmt=style, capsize=3,
                            label=rf"{_METRIC_LABEL[metric]}, $\alpha$={alpha:g}")
        ax.set_xlabel(r"SNR $\gamma$ [dB]")
        ax.set_ylabel("success rate")
        ax.set_ylim(-0.02, 1.02)
        ax.grid(True, alpha=0.4)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = f"{out_dir}/{fname}"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths


def save_msens_figure(rows, out_dir, prefix="msens") -> list:
    """Success rate versus the maximum integer delay M."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for metric, style in (("range", "-o"), ("phase_raw", "--s")):
        for alpha, (x, y, err) in sorted(_series(rows, metric, "M").items()):
            ax.errorbar(x, y, yerr=2 * err, fmt=style, capsize=3,
                        label=rf"{_METRIC_LABEL[metric]}, $\alpha$={alpha:g}")
    ax.set_xlabel("maximum integer delay M")
    ax.set_ylabel("success rate")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.4)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = f"{out_dir}/{prefix}.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def save_tracking_figure(rows, out_dir, prefix="tracking") -> list:
    """True (dashed) and estimated (solid) range per packet index."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    drones = sorted({row["drone"] for row in rows})
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for k in drones:
        pts = [(row["packet"], row["r_true"], row["r_hat"])
               for row in rows if row["drone"] == k]
        pts.sort()
        n = [p[0] for p in pts]
        true = [p[1] for p in pts]
        est = [p[2] if p[2] is not None else np.nan for p in pts]
        c = colors[(k - 1) % len(colors)]
        ax.plot(n, true, "--", color=c, linewidth=1.0)
        ax.plot(n, est, "-", color=c, linewidth=1.2, label=f"drone {k}")
    ax.set_xlabel("packet index")
    ax.set_ylabel("range [m]")
    ax.grid(True, alpha=0.4)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = f"{out_dir}/{prefix}.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]
