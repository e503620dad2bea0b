"""Render a metric report as delimited text plus figures on disk."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # file output only, no display backend
import matplotlib.pyplot as plt

from .scoring import GENERATION_METRICS, RETRIEVAL_METRICS, MetricReport

_FAMILIES = (("retrieval", RETRIEVAL_METRICS), ("generation", GENERATION_METRICS))


def metrics_rows(report: MetricReport) -> list[tuple[str, str, float | None]]:
    """Flatten a report into (scope, metric, value) rows, overall first."""
    rows: list[tuple[str, str, float | None]] = []
    for _, names in _FAMILIES:
        for name in names:
            rows.append(("overall", name, report.overall.get(name)))
    for qtype in sorted(report.per_type):
        for _, names in _FAMILIES:
            for name in names:
                rows.append((qtype, name, report.per_type[qtype].get(name)))
    return rows


def write_metrics_tsv(report: MetricReport, path: str | Path) -> Path:
    """One row per (scope, metric); absent judge values render as empty cells."""
    path = Path(path)
    lines = [f"# revision: {report.revision}", "scope\tmetric\tvalue"]
    for scope, metric, value in metrics_rows(report):
        cell = "" if value is None else f"{value:.6f}"
        lines.append(f"{scope}\t{metric}\t{cell}")
    if report.judge_note:
        lines.append(f"# judge: {report.judge_note}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def render_figures(report: MetricReport, out_dir: str | Path, stem: str = "metrics") -> list[Path]:
    """One grouped bar chart per metric family, overall plus each question type."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scopes = ["overall"] + sorted(report.per_type)

    def value(scope: str, metric: str) -> float | None:
        source = report.overall if scope == "overall" else report.per_type[scope]
        return source.get(metric)

    written: list[Path] = []
    for family, names in _FAMILIES:
        plotted = [m for m in names if any(value(s, m) is not None for s in scopes)]
        if not plotted:
            continue
        fig, ax = plt.subplots(figsize=(1.8 + 1.4 * len(scopes), 3.6))
        width = 0.8 / len(plotted)
        for j, metric in enumerate(plotted):
            xs, heights = [], []
            for i, scope in enumerate(scopes):
                v = value(scope, metric)
                if v is not None:
                    xs.append(i + (j - (len(plotted) - 1) / 2) * width)
                    heights.append(v)
            ax.bar(xs, heights, width=width, label=metric)
        ax.set_xticks(range(len(scopes)))
        ax.set_xticklabels(scopes, rotation=20, ha="right")
        ax.set_ylim(0.0, 1.05)
        ax.set_ylabel("score")
        ax.set_title(f"{family} metrics, revision {report.revision}")
        ax.legend(fontsize="small")
        fig.tight_layout()
        target = out_dir / f"{stem}_{family}.png"
        fig.savefig(target, dpi=110)
        plt.close(fig)
        written.append(target)
    return written


def write_report(report: MetricReport, out_dir: str | Path, stem: str = "metrics") -> dict[str, list[Path]]:
    """Delimited table plus figures, side by side in one directory."""
    out_dir = Path(out_dir)
    tsv = write_metrics_tsv(report, out_dir / f"{stem}.tsv")
    figures = render_figures(report, out_dir, stem=stem)
    return {"tables": [tsv], "figures": figures}


__all__ = ["metrics_rows", "render_figures", "write_metrics_tsv", "write_report"]
