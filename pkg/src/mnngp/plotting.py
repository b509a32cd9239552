"""Figure rendering for command reports.

Each function writes one PNG next to a command's delimited output and
returns the path written.  The Agg backend keeps rendering headless.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def plot_table_check(rhos, table_values, closed_values, path):
    """Overlay of table vs closed form with the pointwise gap below."""
    fig, (top, bottom) = plt.subplots(
        2, 1, figsize=(6.4, 6.0), sharex=True, height_ratios=[2, 1]
    )
    top.plot(rhos, closed_values, lw=2.0, label="closed form", color="#444444")
    top.plot(rhos, table_values, lw=0.9, ls="--", label="table", color="#d62728")
    top.set_ylabel("F_2(rho)")
    top.legend(frameon=False)
    diff = np.abs(np.asarray(table_values) - np.asarray(closed_values))
    bottom.semilogy(rhos, np.maximum(diff, 1e-18), lw=0.9, color="#1f77b4")
    bottom.set_xlabel("rho")
    bottom.set_ylabel("|difference|")
    return _finish(fig, path)


def plot_kernel_heatmap(K, path):
    K = np.asarray(K)
    fig, ax = plt.subplots(figsize=(5.6, 4.8))
    image = ax.imshow(K, cmap="viridis", aspect="auto")
    fig.colorbar(image, ax=ax, label="kernel value")
    ax.set_xlabel("column")
    ax.set_ylabel("row")
    return _finish(fig, path)


def plot_infer_report(report, path):
    """Per-repeat accuracies with the mean marked."""
    accs = [r["accuracy"] for r in report["repeats"]]
    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    ax.bar(range(len(accs)), accs, color="#1f77b4", width=0.6)
    ax.axhline(report["mean_accuracy"], color="#d62728", lw=1.2,
               label=f"mean {report['mean_accuracy']:.4f}")
    ax.set_xlabel("repeat")
    ax.set_ylabel("test accuracy")
    ax.set_ylim(0.0, 1.05)
    ax.legend(frameon=False)
    return _finish(fig, path)


def plot_gridsearch_report(report, path):
    """Mean validation accuracy per cell; failed cells marked at zero."""
    cells = report["cells"]
    idx = [c["index"] for c in cells]
    means = [c["mean_accuracy"] for c in cells]
    good = [(i, m) for i, m in zip(idx, means) if m is not None]
    bad = [i for i, m in zip(idx, means) if m is None]
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    if good:
        ax.bar([i for i, _ in good], [m for _, m in good], color="#1f77b4",
               width=0.8, label="mean accuracy")
    if bad:
        ax.plot(bad, [0.0] * len(bad), "x", color="#d62728", ms=8,
                label="failed cell")
    best = report.get("best")
    if best is not None:
        ax.bar([best["index"]], [best["mean_accuracy"]], color="#2ca02c",
               width=0.8, label="best")
    ax.set_xlabel("cell index")
    ax.set_ylabel("validation accuracy")
    ax.legend(frameon=False)
    return _finish(fig, path)


def plot_fq_suite(report, path):
    """MC z-scores per case with the acceptance band."""
    checks = report["mc_checks"]
    z = [c["z"] for c in checks]
    labels = [f"q{c['q']}:{c['rho']:+.1f}" for c in checks]
    fig, ax = plt.subplots(figsize=(6.8, 3.6))
    ax.axhspan(-3.0, 3.0, color="#2ca02c", alpha=0.12, label="|z| <= 3")
    ax.plot(range(len(z)), z, "o", color="#1f77b4")
    ax.set_xticks(range(len(z)))
    ax.set_xticklabels(labels, rotation=60, fontsize=7)
    ax.set_ylabel("z-score vs MC oracle")
    ax.legend(frameon=False)
    return _finish(fig, path)


def plot_prop1_suite(report, path):
    depths = sorted(int(d) for d in report["per_depth_max_residual"])
    residuals = [report["per_depth_max_residual"][str(d)] for d in depths]
    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    ax.semilogy(depths, residuals, "o-", color="#1f77b4", label="max residual")
    ax.axhline(report["config"]["tol"], color="#d62728", lw=1.0, ls="--",
               label="tolerance")
    ax.set_xlabel("depth")
    ax.set_ylabel("max |K_maxout - K_relu|")
    ax.legend(frameon=False)
    return _finish(fig, path)


def plot_theorem1_suite(report, path):
    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    for width, gaps in report["per_seed_gaps"].items():
        ax.plot([int(width)] * len(gaps), gaps, "o", alpha=0.5, color="#1f77b4")
    ax.plot([int(w) for w in report["widths"]], report["gaps"], "s-",
            color="#d62728", label="mean gap")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("width")
    ax.set_ylabel("relative Frobenius gap")
    ax.legend(frameon=False)
    return _finish(fig, path)


def plot_property_suite(report, path):
    checks = report["checks"]
    names = [c["name"] for c in checks]
    colors = ["#2ca02c" if c["passed"] else "#d62728" for c in checks]
    fig, ax = plt.subplots(figsize=(7.0, 0.28 * len(checks) + 1.2))
    ax.barh(range(len(checks)), [1.0] * len(checks), color=colors, height=0.7)
    ax.set_yticks(range(len(checks)))
    ax.set_yticklabels(names, fontsize=7)
    ax.invert_yaxis()
    ax.set_xticks([])
    ax.set_xlim(0, 1)
    for spine in ax.spines.values():
        spine.set_visible(False)
    ax.set_title("green: pass    red: fail", fontsize=8, loc="left")
    return _finish(fig, path)
