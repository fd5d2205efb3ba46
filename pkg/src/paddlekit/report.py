"""Rendering of evaluation reports: metric tables, delimited exports, and
bar-chart figures written as static images (with plain-text fallbacks)."""

from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluate import EvalReport, ImportanceResult, MetricSet

logger = logging.getLogger(__name__)

_METRIC_LABELS = {
    "accuracy": "Accuracy",
    "sensitivity": "Sensitivity",
    "specificity": "Specificity",
    "ppv": "PPV",
    "npv": "NPV",
    "f_score": "F Score",
}


def _cell_text(metrics: MetricSet, name: str) -> str:
    value = getattr(metrics, name)
    if value is None:
        return "--"
    return f"{value.mean:.4f} ± {value.se:.4f}"


def metrics_table_text(report: EvalReport, title: str = "Model performance") -> str:
    """Fixed-width table: one row per (phase, model), mean +/- SE columns."""
    headers = ["Phase", "Model"] + [_METRIC_LABELS[m] for m in MetricSet.METRIC_NAMES]
    rows = []
    for (phase, model), cell in sorted(report.cells.items()):
        metrics: MetricSet = cell["metrics"]
        rows.append(
            [phase, model] + [_cell_text(metrics, m) for m in MetricSet.METRIC_NAMES]
        )
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    lines = [title, ""]
    lines.append("  ".join(h.ljust(w) for h, w in zip(headers, widths)))
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def metrics_table_csv(report: EvalReport) -> str:
    lines = ["phase,model," + ",".join(
        f"{m}_mean,{m}_se" for m in MetricSet.METRIC_NAMES
    )]
    for (phase, model), cell in sorted(report.cells.items()):
        metrics: MetricSet = cell["metrics"]
        cells = [phase, model]
        for name in MetricSet.METRIC_NAMES:
            value = getattr(metrics, name)
            if value is None:
                cells += ["", ""]
            else:
                cells += [repr(value.mean), repr(value.se)]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _grouped_bars(ax, report: EvalReport, metric: str) -> None:
    phases = sorted({phase for phase, _ in report.cells})
    models = sorted({model for _, model in report.cells})
    width = 0.8 / max(len(models), 1)
    for m_idx, model in enumerate(models):
        xs, ys, errs = [], [], []
        for p_idx, phase in enumerate(phases):
            value = getattr(report.cells[(phase, model)]["metrics"], metric)
            if value is None:
                continue
            xs.append(p_idx + m_idx * width)
            ys.append(value.mean)
            errs.append(value.se)
        ax.bar(xs, ys, width=width, label=model, yerr=errs, capsize=2)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(phases))])
    ax.set_xticklabels(phases)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel(_METRIC_LABELS[metric])


def render_metric_figures(report: EvalReport, out_dir: Path, stem: str = "metrics") -> list[Path]:
    """One bar chart per metric (error bars = SE); returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for metric in MetricSet.METRIC_NAMES:
        fig, ax = plt.subplots(figsize=(7, 4))
        _grouped_bars(ax, report, metric)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out_dir / f"{stem}_{metric}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def render_importance_figure(
    importance: ImportanceResult, out_dir: Path, top_n: int = 20
) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fig, (ax_feat, ax_group) = plt.subplots(1, 2, figsize=(12, 5))

    top = importance.features[:top_n]
    ax_feat.barh([name for name, _ in reversed(top)], [v for _, v in reversed(top)])
    ax_feat.set_title(f"top {len(top)} features (accuracy drop)")
    ax_feat.tick_params(axis="y", labelsize=6)

    ax_group.barh(
        [name for name, _ in reversed(importance.groups)],
        [v for _, v in reversed(importance.groups)],
    )
    ax_group.set_title("grouped importance")
    fig.tight_layout()
    path = out_dir / "importance.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def importance_table_text(importance: ImportanceResult, top_n: int = 20) -> str:
    lines = [f"baseline accuracy: {importance.baseline_accuracy:.4f}", ""]
    lines.append("rank  importance  feature")
    for rank, (name, value) in enumerate(importance.features[:top_n], start=1):
        lines.append(f"{rank:>4}  {value:+.4f}     {name}")
    lines.append("")
    lines.append("group importance")
    for name, value in importance.groups:
        lines.append(f"  {value:+.4f}  {name}")
    return "\n".join(lines) + "\n"


def write_report(
    report: EvalReport,
    out_dir: Path,
    figures: bool = True,
    title: str = "Model performance",
) -> dict[str, Path]:
    """Write the JSON document, delimited table, text table, and figures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}

    json_path = out_dir / "report.json"
    json_path.write_text(report.to_json(), encoding="utf-8")
    written["json"] = json_path

    csv_path = out_dir / "metrics.csv"
    csv_path.write_text(metrics_table_csv(report), encoding="utf-8")
    written["csv"] = csv_path

    text_path = out_dir / "metrics.txt"
    text_path.write_text(metrics_table_text(report, title), encoding="utf-8")
    written["text"] = text_path

    if report.importance is not None:
        imp_path = out_dir / "importance.csv"
        imp_path.write_text(report.importance.to_table(), encoding="utf-8")
        written["importance"] = imp_path

    if figures:
        try:
            paths = render_metric_figures(report, out_dir)
            written["figures"] = paths[0].parent
            if report.importance is not None:
                render_importance_figure(report.importance, out_dir)
        except Exception:
            logger.exception("figure rendering failed; text tables remain")
    return written
