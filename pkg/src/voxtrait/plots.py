"""Deterministic SVG renderings of study reports.

Every renderer is a pure function from report data to an SVG string:
fixed canvas sizes, a fixed palette, and all coordinates formatted to
two decimals, so identical inputs produce byte-identical files. Only a
small subset of SVG is used (lines, polylines, paths, text).
"""

from __future__ import annotations

import math

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

FONT = 'font-family="Helvetica,Arial,sans-serif"'


def _fmt(v: float) -> str:
    return f"{float(v):.2f}"


def _svg(width: int, height: int, body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">'
    )
    return "\n".join([head, f'<rect width="{width}" height="{height}" fill="white"/>',
                      *body, "</svg>"]) + "\n"


def _text(x, y, s, size=11, anchor="start", color="#000000") -> str:
    return (
        f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}" {FONT} '
        f'text-anchor="{anchor}" fill="{color}">{_escape(s)}</text>'
    )


def _line(x1, y1, x2, y2, color="#000000", width=1.0, dash: str | None = None) -> str:
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    return (
        f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
        f'stroke="{color}" stroke-width="{_fmt(width)}"{extra}/>'
    )


def _escape(s: str) -> str:
    return (
        str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )


def _truncate(name: str, limit: int = 30) -> str:
    return name if len(name) <= limit else name[: limit - 1] + "…"


# ---------------------------------------------------------------------------
# Dendrogram


def _leaf_order(merges: list[dict], n_leaves: int) -> list[int]:
    """Left-to-right leaf ordering that keeps the tree planar."""
    children = {m["new_id"]: (m["cluster_a"], m["cluster_b"]) for m in merges}
    root = merges[-1]["new_id"] if merges else 0
    order: list[int] = []
    stack = [root]
    while stack:
        node = stack.pop()
        if node < n_leaves:
            order.append(node)
        else:
            a, b = children[node]
            stack.append(b)
            stack.append(a)
    return order


def render_dendrogram(merges: list[dict], leaf_names: list[str], cut_k: int | None = None) -> str:
    """Horizontal dendrogram; an optional dashed line marks the k-cut."""
    n = len(leaf_names)
    if n == 0:
        raise ValueError("no leaves to draw")
    row_h, gutter, top, bottom = 18, 170, 28, 16
    width, height = 660, top + bottom + row_h * n
    plot_w = width - gutter - 20
    max_dist = max((m["distance"] for m in merges), default=1.0) or 1.0

    def x_of(dist: float) -> float:
        return gutter + plot_w * (dist / max_dist)

    order = _leaf_order(merges, n)
    ypos = {leaf: top + row_h * (i + 0.5) for i, leaf in enumerate(order)}
    xpos = {leaf: float(gutter) for leaf in range(n)}
    body = [_text(10, 16, "Acoustic-measure dendrogram", size=13)]
    for leaf in range(n):
        body.append(_text(gutter - 6, ypos[leaf] + 4, leaf_names[leaf], size=10,
                          anchor="end"))
    for m in merges:
        a, b = m["cluster_a"], m["cluster_b"]
        x = x_of(m["distance"])
        ya, yb = ypos[a], ypos[b]
        body.append(_line(xpos[a], ya, x, ya, color="#333333"))
        body.append(_line(xpos[b], yb, x, yb, color="#333333"))
        body.append(_line(x, ya, x, yb, color="#333333"))
        ypos[m["new_id"]] = (ya + yb) / 2.0
        xpos[m["new_id"]] = x
    if cut_k is not None and merges and 1 <= cut_k <= n:
        if cut_k == n:
            cut_d = merges[0]["distance"] / 2.0
        elif cut_k == 1:
            cut_d = max_dist * 1.01
        else:
            lo = merges[n - cut_k - 1]["distance"]
            hi = merges[n - cut_k]["distance"]
            cut_d = (lo + hi) / 2.0
        xc = x_of(cut_d)
        body.append(_line(xc, top - 8, xc, height - bottom, color="#d62728",
                          width=1.2, dash="5,4"))
        body.append(_text(xc + 4, top, f"k = {cut_k}", size=11, color="#d62728"))
    body.append(_line(gutter, height - bottom, width - 20, height - bottom,
                      color="#888888"))
    body.append(_text(width - 20, height - 3, "merge distance", size=10, anchor="end",
                      color="#555555"))
    return _svg(width, height, body)


# ---------------------------------------------------------------------------
# Line charts (VIF curve, metric curves)


def _axis_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + step * i for i in range(n)]


def render_curves(
    x_labels: list,
    series: list[tuple[str, list]],
    title: str,
    y_label: str,
    hline: tuple[float, str] | None = None,
) -> str:
    """Polyline chart over categorical x positions.

    ``series`` holds (name, values) pairs; None values leave gaps.
    ``hline`` draws one dashed reference line with a label.
    """
    if not x_labels or not series:
        raise ValueError("nothing to plot")
    width, height = 560, 320
    left, right, top, bottom = 60, 150, 40, 40
    plot_w, plot_h = width - left - right, height - top - bottom
    finite = [v for _, values in series for v in values
              if v is not None and math.isfinite(v)]
    if hline is not None:
        finite.append(hline[0])
    if not finite:
        raise ValueError("no finite values to plot")
    lo, hi = min(finite), max(finite)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.06 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    def px(i: int) -> float:
        if len(x_labels) == 1:
            return left + plot_w / 2.0
        return left + plot_w * i / (len(x_labels) - 1)

    def py(v: float) -> float:
        return top + plot_h * (1.0 - (v - lo) / (hi - lo))

    body = [_text(10, 20, title, size=13)]
    for tick in _axis_ticks(lo, hi):
        y = py(tick)
        body.append(_line(left, y, width - right, y, color="#dddddd"))
        body.append(_text(left - 6, y + 4, _fmt(tick), size=9, anchor="end",
                          color="#555555"))
    for i, label in enumerate(x_labels):
        body.append(_text(px(i), height - bottom + 14, str(label), size=9,
                          anchor="middle", color="#555555"))
    body.append(_line(left, height - bottom, width - right, height - bottom,
                      color="#888888"))
    body.append(_line(left, top, left, height - bottom, color="#888888"))
    body.append(_text(14, top - 8, y_label, size=10, color="#555555"))
    if hline is not None:
        y = py(hline[0])
        body.append(_line(left, y, width - right, y, color="#d62728", width=1.2,
                          dash="5,4"))
        body.append(_text(width - right + 4, y + 4, hline[1], size=9,
                          color="#d62728"))
    for s, (name, values) in enumerate(series):
        color = PALETTE[s % len(PALETTE)]
        run: list[str] = []
        for i, v in enumerate(values):
            if v is None or not math.isfinite(v):
                if len(run) >= 2:
                    body.append(
                        f'<polyline points="{" ".join(run)}" fill="none" '
                        f'stroke="{color}" stroke-width="1.5"/>'
                    )
                run = []
                continue
            run.append(f"{_fmt(px(i))},{_fmt(py(v))}")
            body.append(
                f'<circle cx="{_fmt(px(i))}" cy="{_fmt(py(v))}" r="2.5" '
                f'fill="{color}"/>'
            )
        if len(run) >= 2:
            body.append(
                f'<polyline points="{" ".join(run)}" fill="none" '
                f'stroke="{color}" stroke-width="1.5"/>'
            )
        ly = top + 14 * s
        body.append(_line(width - right + 8, ly, width - right + 24, ly,
                          color=color, width=2.0))
        body.append(_text(width - right + 28, ly + 4, _truncate(name, 18), size=9))
    return _svg(width, height, body)


def render_vif_curve(report: dict) -> str:
    """Max VIF against cluster count, with the acceptance threshold."""
    rows = [r for r in report["rows"] if not r["failed"]]
    rows = sorted(rows, key=lambda r: -r["k"])
    ks = [r["k"] for r in rows]
    vifs = [r["max_vif"] for r in rows]
    return render_curves(
        ks,
        [("max VIF", vifs)],
        title="Multicollinearity across cluster counts",
        y_label="max VIF",
        hline=(report.get("vif_threshold", 5.0), "threshold"),
    )


def render_metric_curves(report: dict) -> str:
    """Test correlation and R^2 against cluster count."""
    rows = [r for r in report["rows"] if not r["failed"]]
    rows = sorted(rows, key=lambda r: -r["k"])
    ks = [r["k"] for r in rows]
    return render_curves(
        ks,
        [
            ("r (test)", [r["metrics"]["r_test"] for r in rows]),
            ("R² (test)", [r["metrics"]["r2_test"] for r in rows]),
        ],
        title="Model performance across cluster counts",
        y_label="score",
    )


def render_duration_curves(report: dict) -> str:
    """Test metrics against segment duration."""
    rows = [r for r in report["durations"] if not r["skipped"]]
    labels = [str(r["duration"]) for r in rows]
    return render_curves(
        labels,
        [
            ("r (test)", [r["metrics"]["r_test"] for r in rows]),
            ("R² (test)", [r["metrics"]["r2_test"] for r in rows]),
        ],
        title="Model performance across segment durations",
        y_label="score",
    )


# ---------------------------------------------------------------------------
# Importance pie


def render_importance_pie(report: dict) -> str:
    """Cluster-weight pie with a legend, largest slice first."""
    clusters = sorted(report["clusters"], key=lambda c: -c["weight"])
    clusters = [c for c in clusters if c["weight"] > 0.0]
    if not clusters:
        raise ValueError("no positive weights to draw")
    width, height = 640, 360
    cx, cy, radius = 180.0, 190.0, 130.0
    body = [_text(10, 20, "Acoustic-factor importance", size=13)]
    if len(clusters) == 1:
        body.append(
            f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(radius)}" '
            f'fill="{PALETTE[0]}" stroke="white"/>'
        )
    else:
        total = sum(c["weight"] for c in clusters)
        angle = -math.pi / 2.0
        for i, c in enumerate(clusters):
            frac = c["weight"] / total
            sweep = 2.0 * math.pi * frac
            x1 = cx + radius * math.cos(angle)
            y1 = cy + radius * math.sin(angle)
            x2 = cx + radius * math.cos(angle + sweep)
            y2 = cy + radius * math.sin(angle + sweep)
            large = 1 if sweep > math.pi else 0
            body.append(
                f'<path d="M {_fmt(cx)} {_fmt(cy)} L {_fmt(x1)} {_fmt(y1)} '
                f'A {_fmt(radius)} {_fmt(radius)} 0 {large} 1 {_fmt(x2)} {_fmt(y2)} Z" '
                f'fill="{PALETTE[i % len(PALETTE)]}" stroke="white"/>'
            )
            if frac >= 0.04:
                mid = angle + sweep / 2.0
                body.append(_text(
                    cx + radius * 0.62 * math.cos(mid),
                    cy + radius * 0.62 * math.sin(mid) + 4,
                    f"{100.0 * frac:.1f}%",
                    size=10, anchor="middle", color="white",
                ))
            angle += sweep
    for i, c in enumerate(clusters):
        y = 60 + 18 * i
        body.append(
            f'<rect x="350" y="{_fmt(y - 9)}" width="12" height="12" '
            f'fill="{PALETTE[i % len(PALETTE)]}"/>'
        )
        body.append(_text(368, y + 2,
                          f"{_truncate(c['name'])} — {100.0 * c['weight']:.1f}%",
                          size=10))
    return _svg(width, height, body)
