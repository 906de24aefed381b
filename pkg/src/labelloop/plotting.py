"""Minimal deterministic SVG rendering of learning curves.

Hand-rolled so the output is byte-stable: per-run curves in light gray, the
mean curve in color, and per-round mean pseudo-label counts as bars along
the bottom.
"""

from __future__ import annotations

from .engine import LearningCurve, RunAggregate

WIDTH, HEIGHT = 720, 440
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 60, 20, 30, 50


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def render_curves_svg(
    curves: list[LearningCurve],
    aggregate: RunAggregate | None = None,
    title: str = "learning curves",
) -> str:
    if not curves:
        raise ValueError("nothing to plot")
    xs = [int(c) for c in curves[0].labeled_counts()]
    x_min, x_max = xs[0], xs[-1]
    if x_max == x_min:
        x_max = x_min + 1
    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(x: float) -> float:
        return MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w

    def py(y: float) -> float:
        return MARGIN_TOP + (1.0 - y) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="18" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">{title}</text>',
    ]

    # axes and gridlines
    for tick in range(0, 11, 2):
        y = tick / 10.0
        parts.append(
            f'<line x1="{MARGIN_LEFT}" y1="{py(y):.1f}" x2="{WIDTH - MARGIN_RIGHT}" '
            f'y2="{py(y):.1f}" stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{MARGIN_LEFT - 8}" y="{py(y) + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt(y)}</text>'
        )
    for x in xs:
        parts.append(
            f'<text x="{px(x):.1f}" y="{HEIGHT - MARGIN_BOTTOM + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{x}</text>'
        )
    parts.append(
        f'<text x="{WIDTH / 2:.0f}" y="{HEIGHT - 10}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">labeled instances</text>'
    )

    # pseudo-label bars (mean over runs), scaled to the top quarter of the plot
    mean_pseudo = (
        aggregate.mean_pseudo_counts
        if aggregate is not None
        else [float(p.pseudo_count) for p in curves[0].points]
    )
    peak = max(mean_pseudo) if max(mean_pseudo) > 0 else 1.0
    bar_w = max(4.0, plot_w / max(len(xs), 1) * 0.3)
    for x, count in zip(xs, mean_pseudo):
        bar_h = count / peak * plot_h * 0.25
        parts.append(
            f'<rect x="{px(x) - bar_w / 2:.1f}" y="{HEIGHT - MARGIN_BOTTOM - bar_h:.1f}" '
            f'width="{bar_w:.1f}" height="{bar_h:.1f}" fill="#c9daf8"/>'
        )

    # per-run curves
    for curve in curves:
        points = " ".join(
            f"{px(p.labeled_count):.1f},{py(p.score):.1f}" for p in curve.points
        )
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="#aaaaaa" stroke-width="1"/>'
        )

    # mean curve
    if len(curves) >= 1:
        n = len(curves)
        mean_scores = [
            sum(c.points[i].score for c in curves) / n for i in range(len(xs))
        ]
        points = " ".join(f"{px(x):.1f},{py(s):.1f}" for x, s in zip(xs, mean_scores))
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="#1f77b4" stroke-width="2"/>'
        )
        for x, s in zip(xs, mean_scores):
            parts.append(f'<circle cx="{px(x):.1f}" cy="{py(s):.1f}" r="2.5" fill="#1f77b4"/>')

    if aggregate is not None:
        label = (
            f"final {_fmt(aggregate.final_score_mean)} ± {_fmt(aggregate.final_score_std)}  "
            f"auc {_fmt(aggregate.auc_mean)} ± {_fmt(aggregate.auc_std)}  runs {aggregate.num_runs}"
        )
        parts.append(
            f'<text x="{WIDTH - MARGIN_RIGHT}" y="{MARGIN_TOP + 12}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{label}</text>'
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
