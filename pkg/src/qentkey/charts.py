"""SVG chart rendering for experiment reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .experiment import CHART_FILES, ExperimentReport

# keep SVG output stable across runs of the same report
matplotlib.rcParams["svg.hashsalt"] = "qentkey"

_SAVE_KW = {"format": "svg", "metadata": {"Date": None}}


def _pair_labels(report: ExperimentReport) -> list[str]:
    return [f"{p[0]}-{p[1]}" for p in sorted(s.pair for s in report.scores)]


def render_report_charts(report: ExperimentReport, out_dir: Path) -> list[Path]:
    """Write the negativity, fidelity and comparison charts; returns paths."""
    out_dir = Path(out_dir)
    labels = _pair_labels(report)
    scores = {s.pair: s for s in report.scores}
    fids = {f.pair: f for f in report.fidelities}
    ordered_pairs = sorted(scores)
    negativities = [scores[p].negativity for p in ordered_pairs]
    fidelities = [fids[p].mean_fidelity for p in ordered_pairs]
    errors = [fids[p].std_error for p in ordered_pairs]
    topology = report.config.get("topology_name", "")

    paths = [out_dir / name for name in CHART_FILES]

    fig, ax = plt.subplots(figsize=(max(4.0, 0.55 * len(labels)), 3.2))
    ax.bar(labels, negativities, color="#2c3e50")
    ax.set_ylabel("negativity")
    ax.set_ylim(0, 0.55)
    ax.set_xlabel("qubit pair")
    ax.set_title(f"Entanglement per pair ({topology})")
    plt.setp(ax.get_xticklabels(), rotation=60, ha="right", fontsize=8)
    fig.tight_layout()
    fig.savefig(paths[0], **_SAVE_KW)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(max(4.0, 0.55 * len(labels)), 3.2))
    ax.bar(labels, fidelities, yerr=errors, capsize=2, color="#2980b9")
    ax.set_ylabel("protocol fidelity")
    ax.set_ylim(0, 1.05)
    ax.set_xlabel("qubit pair")
    ax.set_title(f"Fidelity per pair ({topology})")
    plt.setp(ax.get_xticklabels(), rotation=60, ha="right", fontsize=8)
    fig.tight_layout()
    fig.savefig(paths[1], **_SAVE_KW)
    plt.close(fig)

    selected = report.fidelity_for(report.selected_pair)
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.bar(
        ["random selection\n(average case)", "max-negativity pair"],
        [report.baseline_mean, selected.mean_fidelity],
        yerr=[report.baseline_std_error, selected.std_error],
        capsize=4,
        color=["#7f8c8d", "#27ae60"],
    )
    ax.set_ylabel("protocol fidelity")
    ax.set_ylim(0, 1.05)
    ax.set_title(
        f"Selected pair {selected.pair} vs average "
        f"(+{report.improvement_percent:.1f}%)"
    )
    # error bars show the standard error over repeats / pairs
    fig.tight_layout()
    fig.savefig(paths[2], **_SAVE_KW)
    plt.close(fig)

    return paths
