"""Optional matplotlib rendering of evaluation reports to image files."""

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_report_figures(report, out_dir):
    """Per-class AP bars and AP-vs-threshold curves. Returns written paths."""
    os.makedirs(out_dir, exist_ok=True)
    labels = sorted(report.per_class)
    paths = []

    fig, ax = plt.subplots(figsize=(max(6, 0.8 * len(labels) + 2), 4))
    x = np.arange(len(labels))
    ap_iou = [report.per_class[lb].ap_iou for lb in labels]
    ap_dist = [report.per_class[lb].ap_dist for lb in labels]
    ax.bar(x - 0.2, ap_iou, width=0.4, label="AP (IoU match)")
    ax.bar(x + 0.2, ap_dist, width=0.4, label="AP (distance match)")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("AP")
    ax.set_ylim(0, 1.05)
    ax.legend()
    ax.set_title(f"per-class AP (ODS = {100.0 * report.ods:.1f})")
    fig.tight_layout()
    path = os.path.join(out_dir, "ap_per_class.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)

    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    for lb in labels:
        c = report.per_class[lb]
        taus = sorted(c.ap_iou_per_threshold)
        axes[0].plot(taus, [c.ap_iou_per_threshold[t] for t in taus], marker="o", label=lb)
        ratios = sorted(c.ap_dist_per_threshold)
        axes[1].plot(ratios, [c.ap_dist_per_threshold[r] for r in ratios], marker="o", label=lb)
    axes[0].set_xlabel("IoU threshold")
    axes[1].set_xlabel("distance ratio threshold")
    axes[0].set_ylabel("AP")
    axes[0].set_ylim(0, 1.05)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    path = os.path.join(out_dir, "ap_vs_threshold.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)
    return paths


def render_matching_gap_figure(rows, out_dir):
    """Bar chart of per-class (AP_dist - AP_iou); rows are (label, iou, dist)."""
    os.makedirs(out_dir, exist_ok=True)
    labels = [r[0] for r in rows]
    gaps = [r[2] - r[1] for r in rows]
    fig, ax = plt.subplots(figsize=(max(6, 0.8 * len(labels) + 2), 4))
    ax.bar(np.arange(len(labels)), gaps, color="tab:red")
    ax.set_xticks(np.arange(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("AP_dist - AP_iou")
    ax.axhline(0.0, color="black", linewidth=0.8)
    fig.tight_layout()
    path = os.path.join(out_dir, "matching_gap.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]
