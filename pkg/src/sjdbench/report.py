"""Render a BenchReport to CSV, JSON, native SVG charts, and a text table.

The SVG writer emits plain paths, rects and text — no plotting service — so a
report renders identically anywhere.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable

from .bench import BenchReport
from .errors import ValidationError

CSV_HEADER = [
    "player_setting", "jds_easy", "jds_hard", "jds_all",
    "mpjpe_active_mm", "mpjpe_all_mm", "sr_percent",
    "jerk_rad_s3", "acc_rad_s2",
]


def _fmt(v, nd: int = 4) -> str:
    if v is None:
        return "-"
    return f"{v:.{nd}f}".rstrip("0").rstrip(".") if isinstance(v, float) else str(v)


def report_to_csv(report: BenchReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in report.rows:
        w.writerow([
            f"{r.player}-{r.setting}", _fmt(r.jds_easy), _fmt(r.jds_hard),
            _fmt(r.jds_all), _fmt(r.mpjpe_active_mm), _fmt(r.mpjpe_all_mm),
            _fmt(r.sr_percent), _fmt(r.jerk), _fmt(r.acceleration),
        ])
    return buf.getvalue()


def report_to_text(report: BenchReport) -> str:
    """Fixed-width table: JDS Easy/Hard/All, MPJPE Active/All, SR, Jerk, Acc."""
    head = (f"{'Player-Setting':<24}{'JDS-E':>8}{'JDS-H':>8}{'JDS-All':>9}"
            f"{'Act(mm)':>9}{'All(mm)':>9}{'SR(%)':>7}{'Jerk':>10}{'Acc':>8}")
    lines = [f"# scores from the built-in model, seed {report.provenance.get('seed')}",
             head, "-" * len(head)]
    for r in report.rows:
        lines.append(
            f"{r.player + '-' + r.setting:<24}"
            f"{_num(r.jds_easy):>8}{_num(r.jds_hard):>8}{_num(r.jds_all):>9}"
            f"{r.mpjpe_active_mm:>9.1f}{r.mpjpe_all_mm:>9.1f}"
            f"{r.sr_percent:>7.1f}{r.jerk:>10.1f}{r.acceleration:>8.1f}"
        )
    return "\n".join(lines) + "\n"


def _num(v) -> str:
    return "-" if v is None else f"{v:.0f}"


def _svg_bar_chart(title: str, groups: list[tuple[str, list[tuple[str, float]]]],
                   y_label: str) -> str:
    """Grouped bar chart; one <g class="bar-group"> per group."""
    width, height = 640, 360
    margin_l, margin_b, margin_t = 60, 50, 40
    plot_w = width - margin_l - 20
    plot_h = height - margin_t - margin_b
    values = [v for _, bars in groups for _, v in bars] or [1.0]
    vmax = max(max(values), 1e-9)
    n_groups = max(len(groups), 1)
    group_w = plot_w / n_groups
    palette = ["#4878a8", "#e1812c", "#3a923a", "#c03d3e", "#9372b2", "#845b53"]

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<text x="{width / 2}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
        f'<line x1="{margin_l}" y1="{margin_t + plot_h}" x2="{margin_l + plot_w}" '
        f'y2="{margin_t + plot_h}" stroke="#333"/>',
        f'<line x1="{margin_l}" y1="{margin_t}" x2="{margin_l}" '
        f'y2="{margin_t + plot_h}" stroke="#333"/>',
        f'<text x="14" y="{margin_t + plot_h / 2}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="11" '
        f'transform="rotate(-90 14 {margin_t + plot_h / 2})">{y_label}</text>',
    ]
    for i in range(5):
        val = vmax * i / 4
        y = margin_t + plot_h * (1 - i / 4)
        parts.append(
            f'<text x="{margin_l - 6}" y="{y + 4}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{val:.0f}</text>')
        parts.append(
            f'<line x1="{margin_l}" y1="{y}" x2="{margin_l + plot_w}" y2="{y}" '
            f'stroke="#ddd" stroke-dasharray="3,3"/>')

    for gi, (group_label, bars) in enumerate(groups):
        x0 = margin_l + gi * group_w
        nb = max(len(bars), 1)
        bar_w = group_w * 0.8 / nb
        parts.append(f'<g class="bar-group" id="group-{group_label}">')
        for bi, (label, value) in enumerate(bars):
            h = plot_h * value / vmax
            x = x0 + group_w * 0.1 + bi * bar_w
            y = margin_t + plot_h - h
            color = palette[bi % len(palette)]
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w * 0.9:.1f}" '
                f'height="{h:.1f}" fill="{color}"><title>{label}: {value:.1f}'
                f'</title></rect>')
        parts.append('</g>')
        parts.append(
            f'<text x="{x0 + group_w / 2:.1f}" y="{margin_t + plot_h + 18}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="12">'
            f'{group_label}</text>')

    seen = []
    for _, bars in groups:
        for bi, (label, _) in enumerate(bars):
            if label not in [s for s, _ in seen]:
                seen.append((label, palette[bi % len(palette)]))
    for li, (label, color) in enumerate(seen):
        y = margin_t + 14 * li
        parts.append(f'<rect x="{width - 130}" y="{y}" width="10" height="10" '
                     f'fill="{color}"/>')
        parts.append(f'<text x="{width - 115}" y="{y + 9}" '
                     f'font-family="sans-serif" font-size="10">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def report_to_score_svg(report: BenchReport) -> str:
    settings = _ordered_settings(report)
    groups = []
    for s in settings:
        bars = [(r.player, r.jds_all) for r in report.rows if r.setting == s]
        groups.append((s, bars))
    return _svg_bar_chart("Score by input setting", groups, "score")


def report_to_smoothness_svg(report: BenchReport) -> str:
    settings = _ordered_settings(report)
    groups = []
    for s in settings:
        bars = [(r.player, r.jerk) for r in report.rows if r.setting == s]
        groups.append((s, bars))
    return _svg_bar_chart("Joint-angle jerk by input setting", groups,
                          "jerk (rad/s^3)")


def _ordered_settings(report: BenchReport) -> list[str]:
    out: list[str] = []
    for r in report.rows:
        if r.setting not in out:
            out.append(r.setting)
    return out


def render_report(report: BenchReport, out_dir,
                  formats: Iterable[str] = ("csv", "json", "svg", "text")) -> list[Path]:
    """Write the requested renderings into out_dir and return the paths."""
    if not report.rows:
        raise ValidationError("cannot render an empty report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    formats = {f.lower() for f in formats}
    if "json" in formats:
        p = out / "report.json"
        p.write_text(report.to_json())
        written.append(p)
    if "csv" in formats:
        p = out / "report.csv"
        p.write_text(report_to_csv(report))
        written.append(p)
    if "text" in formats or "text-table" in formats:
        p = out / "report.txt"
        p.write_text(report_to_text(report))
        written.append(p)
    if "svg" in formats:
        p1 = out / "score_by_setting.svg"
        p1.write_text(report_to_score_svg(report))
        p2 = out / "smoothness_by_setting.svg"
        p2.write_text(report_to_smoothness_svg(report))
        written.extend([p1, p2])
    return written
