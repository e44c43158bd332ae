"""
Emitters for smoothing diagrams.

All formats share one layout: vertex k sits on a circle of radius RADIUS at
angle 90 + 360 k / n degrees, so labels run counterclockwise from the top.
An angle of weight w at apex k on edge (i, j) is drawn as a dot between k
and the midpoint of the edge, light for w = 1 and dark for w = 2.
"""
import math

import pandas as pd
import plotly.graph_objects as go

from utils import ValidationError

RADIUS = 2.0
MARKER_OFFSET = 0.3
EDGE_COLOR = "#c8c8c8"
SMOOTHABLE_COLOR = "#d62728"
ANGLE_COLORS = {1: "#9a9a9a", 2: "#000000"}
FORMATS = ("dot", "tikz", "svg", "csv", "html")


def _fmt(value):
    text = "%.4f" % value
    return "0.0000" if text == "-0.0000" else text


def layout(n):
    """Vertex positions, index k -> (x, y)."""
    return [
        (RADIUS * math.cos(math.pi / 2 + 2 * math.pi * k / n), RADIUS * math.sin(math.pi / 2 + 2 * math.pi * k / n))
        for k in range(n)
    ]


def _angle_markers(d, points):
    markers = []
    for ((i, j), k), weight in sorted(d.angles.items()):
        mx = (points[i][0] + points[j][0]) / 2 - points[k][0]
        my = (points[i][1] + points[j][1]) / 2 - points[k][1]
        norm = math.hypot(mx, my) or 1.0
        x = points[k][0] + MARKER_OFFSET * mx / norm
        y = points[k][1] + MARKER_OFFSET * my / norm
        markers.append(((i, j), k, weight, x, y))
    return markers


def _edges(d):
    smoothable = set(d.smoothable_edges)
    plain = [(i, j) for i in range(d.n) for j in range(i + 1, d.n) if (i, j) not in smoothable]
    return plain, sorted(smoothable)


def to_dot(d):
    points = layout(d.n)
    plain, smoothable = _edges(d)
    lines = ["graph smoothing {", "  layout=neato;", "  node [shape=circle, fontsize=10];"]
    for k, (x, y) in enumerate(points):
        lines.append(f'  {k} [pos="{_fmt(x)},{_fmt(y)}!"];')
    for i, j in plain:
        lines.append(f'  {i} -- {j} [color="{EDGE_COLOR}"];')
    for i, j in smoothable:
        lines.append(f'  {i} -- {j} [color="{SMOOTHABLE_COLOR}", penwidth=2.5];')
    for (i, j), k, weight, x, y in _angle_markers(d, points):
        kind = "dark" if weight == 2 else "light"
        lines.append(
            f'  "a{i}_{j}_{k}" [shape=point, width=0.08, color="{ANGLE_COLORS[weight]}", '
            f'pos="{_fmt(x)},{_fmt(y)}!", comment="{kind} angle at {k} on {i}-{j}"];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_tikz(d):
    points = layout(d.n)
    plain, smoothable = _edges(d)
    lines = ["\\begin{tikzpicture}"]
    for k, (x, y) in enumerate(points):
        lines.append(f"  \\node[circle, draw, inner sep=1pt] (v{k}) at ({_fmt(x)},{_fmt(y)}) {{{k}}};")
    for i, j in plain:
        lines.append(f"  \\draw[gray!40] (v{i}) -- (v{j});")
    for i, j in smoothable:
        lines.append(f"  \\draw[red, very thick] (v{i}) -- (v{j});")
    for (i, j), k, weight, x, y in _angle_markers(d, points):
        shade = "black" if weight == 2 else "gray"
        lines.append(f"  \\fill[{shade}] ({_fmt(x)},{_fmt(y)}) circle (1.5pt);")
    lines.append("\\end{tikzpicture}")
    return "\n".join(lines) + "\n"


def to_svg(d):
    size = 2 * RADIUS + 1.0
    scale = 100

    def sx(x):
        return _fmt((x + size / 2) * scale)

    def sy(y):
        return _fmt((size / 2 - y) * scale)

    points = layout(d.n)
    plain, smoothable = _edges(d)
    width = _fmt(size * scale)
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{width}">']
    for i, j in plain:
        lines.append(
            f'  <line x1="{sx(points[i][0])}" y1="{sy(points[i][1])}" x2="{sx(points[j][0])}" '
            f'y2="{sy(points[j][1])}" stroke="{EDGE_COLOR}" stroke-width="1"/>'
        )
    for i, j in smoothable:
        lines.append(
            f'  <line x1="{sx(points[i][0])}" y1="{sy(points[i][1])}" x2="{sx(points[j][0])}" '
            f'y2="{sy(points[j][1])}" stroke="{SMOOTHABLE_COLOR}" stroke-width="3" class="smoothable"/>'
        )
    for (i, j), k, weight, x, y in _angle_markers(d, points):
        lines.append(f'  <circle cx="{sx(x)}" cy="{sy(y)}" r="5" fill="{ANGLE_COLORS[weight]}" class="angle-{weight}"/>')
    for k, (x, y) in enumerate(points):
        lines.append(f'  <circle cx="{sx(x)}" cy="{sy(y)}" r="14" fill="white" stroke="black"/>')
        lines.append(f'  <text x="{sx(x)}" y="{sy(y)}" text-anchor="middle" dominant-baseline="central">{k}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def to_figure(d):
    """Plotly figure of the diagram."""
    points = layout(d.n)
    plain, smoothable = _edges(d)
    fig = go.Figure()
    for edges, color, width in ((plain, EDGE_COLOR, 1), (smoothable, SMOOTHABLE_COLOR, 3)):
        xs, ys = [], []
        for i, j in edges:
            xs += [points[i][0], points[j][0], None]
            ys += [points[i][1], points[j][1], None]
        fig.add_trace(go.Scatter(x=xs, y=ys, mode="lines", line=dict(color=color, width=width), hoverinfo="skip", showlegend=False))
    for weight in (1, 2):
        markers = [m for m in _angle_markers(d, points) if m[2] == weight]
        fig.add_trace(go.Scatter(
            x=[m[3] for m in markers],
            y=[m[4] for m in markers],
            mode="markers",
            marker=dict(color=ANGLE_COLORS[weight], size=8),
            name="dark angle" if weight == 2 else "light angle",
            text=[f"apex {m[1]} on {m[0][0]}-{m[0][1]}" for m in markers],
        ))
    fig.add_trace(go.Scatter(
        x=[p[0] for p in points],
        y=[p[1] for p in points],
        mode="markers+text",
        text=[str(k) for k in range(d.n)],
        marker=dict(size=24, color="white", line=dict(color="black", width=1)),
        showlegend=False,
    ))
    fig.update_layout(
        xaxis=dict(visible=False),
        yaxis=dict(visible=False, scaleanchor="x"),
        plot_bgcolor="white",
        legend=dict(orientation="h", yanchor="bottom", y=-0.1, xanchor="center", x=0.5),
    )
    return fig


def to_html(d):
    return to_figure(d).to_html(full_html=True, include_plotlyjs="cdn", div_id="smoothing-diagram")


def to_csv(d):
    """One row per angle: edge endpoints i < j, apex and weight."""
    rows = [(i, j, k, weight) for ((i, j), k), weight in sorted(d.angles.items())]
    return pd.DataFrame(rows, columns=["i", "j", "apex", "weight"]).to_csv(index=False)


_EMITTERS = {"dot": to_dot, "tikz": to_tikz, "svg": to_svg, "csv": to_csv, "html": to_html}


def render_diagram(d, fmt="dot"):
    """
    Render a smoothing diagram.

    Args:
        d (SmoothingDiagram): the diagram
        fmt (str): one of dot, tikz, svg, csv, html

    Returns:
        str: the rendered text
    """
    try:
        emitter = _EMITTERS[fmt]
    except KeyError:
        raise ValidationError(f"unknown diagram format {fmt!r}; expected one of {', '.join(FORMATS)}")
    return emitter(d)
