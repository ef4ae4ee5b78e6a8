"""Report figures rendered next to the CSV outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .evaluation import AblationReport, ImportanceReport, MetricsReport  # noqa: E402

# no timestamps or version strings, so reruns give identical bytes
PNG_METADATA = {"Software": None}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=100, metadata=PNG_METADATA)
    plt.close(fig)
    return path


def plot_metrics(reports: list[MetricsReport], path) -> Path:
    labels = [m.label for m in reports]
    fig, ax = plt.subplots(figsize=(7, 0.45 * len(reports) + 1.2))
    y = range(len(reports))
    ax.barh(y, [m.macro_f1 for m in reports], color="#4c72b0")
    ax.set_yticks(list(y), labels)
    ax.invert_yaxis()
    ax.set_xlim(0, 1)
    ax.set_xlabel("macro F1 (test split)")
    for i, m in enumerate(reports):
        ax.text(m.macro_f1 + 0.01, i, f"{m.macro_f1:.3f}", va="center", fontsize=8)
    fig.tight_layout()
    return _save(fig, Path(path))


def plot_ablation(report: AblationReport, path) -> Path:
    rows = [r for r in report.rows if r.removed != "none"]
    fig, ax = plt.subplots(figsize=(6, 0.45 * max(len(rows), 1) + 1.2))
    deltas = [r.delta_f1 for r in rows]
    ax.barh(range(len(rows)), deltas, color=["#c44e52" if d < 0 else "#55a868" for d in deltas])
    ax.set_yticks(range(len(rows)), [f"without {r.removed}" for r in rows])
    ax.invert_yaxis()
    ax.axvline(0, color="black", linewidth=0.8)
    ax.set_xlabel("change in macro F1 vs. full model")
    fig.tight_layout()
    return _save(fig, Path(path))


def plot_importance(report: ImportanceReport, path, limit: int = 30) -> Path:
    items = report.stylistic
    if len(items) > limit:
        half = limit // 2
        items = items[:half] + items[-half:]
    fig, ax = plt.subplots(figsize=(7, 0.3 * max(len(items), 1) + 1.2))
    coefs = [i.coefficient for i in items]
    ax.barh(range(len(items)), coefs, color=["#c44e52" if c < 0 else "#4c72b0" for c in coefs])
    ax.set_yticks(range(len(items)), [i.name for i in items], fontsize=8)
    ax.invert_yaxis()
    ax.axvline(0, color="black", linewidth=0.8)
    ax.set_xlabel("coefficient on standardized feature")
    fig.tight_layout()
    return _save(fig, Path(path))
