"""Report rendering: delimited tables plus matplotlib figures.

Every figure-writing helper takes an output directory and returns the
paths it wrote, so callers can list them for the user.  The Agg backend
is forced; no display is ever needed.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def ensure_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_tsv(path, header, rows):
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(str(h) for h in header) + "\n")
        for row in rows:
            fh.write("\t".join(str(v) for v in row) + "\n")
    return path


def write_json(path, payload):
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def fig_per_query_metric(out_dir, per_query: dict, metric_name: str,
                         filename: str = "per_query.png"):
    """Bar chart of a per-query metric, queries in id order."""
    out = ensure_dir(out_dir) / filename
    qids = sorted(per_query)
    values = [per_query[q] for q in qids]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.45 * len(qids) + 1.5), 3.2))
    ax.bar(range(len(qids)), values, color="#4878a8")
    ax.set_xticks(range(len(qids)))
    ax.set_xticklabels(qids, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel(metric_name)
    ax.set_ylim(0, 1.0)
    ax.set_title(f"{metric_name} by query")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def fig_length_scope_scatter(out_dir, lengths, scopes, measure_name,
                             filename: str = "length_vs_scope.png"):
    """Scatter of document length against scope; the spread off the
    diagonal is exactly the verbosity variation in the collection."""
    out = ensure_dir(out_dir) / filename
    fig, ax = plt.subplots(figsize=(4.8, 4.0))
    ax.scatter(lengths, scopes, s=14, alpha=0.6, color="#a8484f")
    upper = max(lengths) if lengths else 1
    ax.plot([0, upper], [0, upper], lw=0.8, color="gray", linestyle="--",
            label="scope = length")
    ax.set_xlabel("document length")
    ax.set_ylabel(f"scope ({measure_name})")
    ax.legend(fontsize=8)
    ax.set_title("length vs scope")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def fig_tuning_curve(out_dir, fold_curves: dict, param_name: str, metric_name: str,
                     filename: str = "tuning_curve.png"):
    """Training-metric curves over the primary parameter, one line per fold.

    fold_curves maps fold name -> list of (param value, training metric).
    """
    out = ensure_dir(out_dir) / filename
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    for fold_name in sorted(fold_curves):
        curve = fold_curves[fold_name]
        xs = [x for x, _ in curve]
        ys = [y for _, y in curve]
        ax.plot(xs, ys, marker="o", markersize=3, label=fold_name)
    if fold_curves and len(next(iter(fold_curves.values()))) > 1:
        xs = [x for x, _ in next(iter(fold_curves.values()))]
        if xs and xs[0] > 0 and xs[-1] / max(xs[0], 1e-12) > 50:
            ax.set_xscale("log")
    ax.set_xlabel(param_name)
    ax.set_ylabel(f"training {metric_name}")
    ax.legend(fontsize=8)
    ax.set_title("parameter sensitivity")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def fig_constraint_passrates(out_dir, cells, filename: str = "constraint_passrates.png"):
    """Horizontal bars of pass rate per bench cell.

    cells is a list of dicts with `label`, `passed`, `total`.
    """
    out = ensure_dir(out_dir) / filename
    labels = [c["label"] for c in cells]
    rates = [c["passed"] / c["total"] if c["total"] else 0.0 for c in cells]
    fig, ax = plt.subplots(figsize=(6.4, max(2.4, 0.32 * len(cells) + 1.0)))
    ax.barh(range(len(cells)), rates, color="#53885a")
    ax.set_yticks(range(len(cells)))
    ax.set_yticklabels(labels, fontsize=7)
    ax.set_xlim(0, 1.02)
    ax.set_xlabel("fraction of records satisfying the constraint")
    ax.invert_yaxis()
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def fig_paired_differences(out_dir, qids, diffs, metric_name,
                           filename: str = "paired_differences.png"):
    """Per-query metric differences between two runs."""
    out = ensure_dir(out_dir) / filename
    fig, ax = plt.subplots(figsize=(max(4.0, 0.45 * len(qids) + 1.5), 3.2))
    colors = ["#53885a" if d >= 0 else "#a8484f" for d in diffs]
    ax.bar(range(len(qids)), diffs, color=colors)
    ax.axhline(0.0, color="black", lw=0.8)
    ax.set_xticks(range(len(qids)))
    ax.set_xticklabels(qids, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel(f"difference in {metric_name} (A - B)")
    ax.set_title("per-query paired differences")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out
