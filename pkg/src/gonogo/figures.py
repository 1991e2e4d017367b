"""Matplotlib renderings saved alongside the delimited outputs."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .design import CutoffParams, DecisionTable, cutoff
from .state import MONITOR_FUTILITY

__all__ = ["oc_figure", "cutoff_figure", "threshold_figure", "save_figure"]

_DESIGN_ORDER = ("simon", "ts", "bop2", "tess")
_COLORS = {"simon": "#888888", "ts": "#7a9e7e", "bop2": "#5b7db1", "tess": "#c0504d"}


def oc_figure(reports_by_scenario: dict):
    """Grouped bars of accept rate, expected sample size and duration.

    ``reports_by_scenario`` maps scenario label to a mapping of design name
    to OCReport.
    """
    scenarios = list(reports_by_scenario)
    designs = [d for d in _DESIGN_ORDER if any(d in r for r in reports_by_scenario.values())]
    extra = sorted({d for r in reports_by_scenario.values() for d in r} - set(designs))
    designs += extra
    metrics = [
        ("accept_rate", "accept_se", "Pr(declared promising)"),
        ("expected_n", "n_se", "Expected sample size"),
        ("mean_duration_months", "duration_se", "Mean duration (months)"),
    ]
    fig, axes = plt.subplots(len(metrics), 1, figsize=(max(6, 1.6 * len(scenarios)), 9), sharex=True)
    width = 0.8 / max(len(designs), 1)
    xs = np.arange(len(scenarios))
    for ax, (attr, se_attr, label) in zip(axes, metrics):
        for j, design in enumerate(designs):
            vals, errs, pos = [], [], []
            for i, sc in enumerate(scenarios):
                rep = reports_by_scenario[sc].get(design)
                if rep is None:
                    continue
                vals.append(getattr(rep, attr))
                se = getattr(rep, se_attr)
                errs.append(0.0 if se != se else se)  # NaN-safe
                pos.append(xs[i] + (j - (len(designs) - 1) / 2) * width)
            ax.bar(pos, vals, width=width, yerr=errs, capsize=2,
                   label=design.upper(), color=_COLORS.get(design, "#444444"))
        ax.set_ylabel(label)
        ax.grid(axis="y", alpha=0.3)
    axes[0].legend(ncol=len(designs), fontsize=9)
    axes[-1].set_xticks(xs)
    axes[-1].set_xticklabels(scenarios, rotation=30, ha="right")
    fig.tight_layout()
    return fig


def cutoff_figure(params: CutoffParams, max_n: int, looks):
    """Stopping cutoff C_n across the trial with the analysis points marked."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ns = np.arange(1, max_n + 1)
    ax.plot(ns, [cutoff(int(n), max_n, params) for n in ns], color="#333333")
    for n in looks:
        ax.axvline(n, color="#c0504d", alpha=0.4, linestyle="--")
        ax.plot([n], [cutoff(n, max_n, params)], "o", color="#c0504d")
    ax.set_xlabel("patients enrolled")
    ax.set_ylabel("stopping cutoff $C_n$")
    ax.set_ylim(0, 1.02)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return fig


def threshold_figure(table: DecisionTable):
    """TESS thresholds by response count, one panel per endpoint."""
    eps = table.endpoints
    fig, axes = plt.subplots(1, len(eps), figsize=(5 * len(eps), 4), squeeze=False)
    for ax, ept in zip(axes[0], eps):
        for block in ept.blocks:
            if block.is_final or not block.thresholds:
                continue
            xs = sorted(block.thresholds)
            ax.plot(xs, [block.thresholds[x] for x in xs], "o-", label=f"n={block.n}")
        direction = "go while TESS below" if ept.monitor == MONITOR_FUTILITY else "stop while TESS below"
        ax.set_title(f"{ept.endpoint} ({direction})", fontsize=10)
        ax.set_xlabel("monitored count")
        ax.set_ylabel("TESS threshold")
        ax.legend(fontsize=8)
        ax.grid(alpha=0.3)
    fig.tight_layout()
    return fig


def save_figure(fig, path):
    fig.savefig(path, dpi=150)
    plt.close(fig)
