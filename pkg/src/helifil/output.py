"""Deterministic file output: CSV data, JSON manifests, SVG plots.

CSV floats carry 17 significant digits so regression diffs are exact; all
text uses LF newlines and fixed formatting with no timestamps (manifests
excepted), making outputs byte-identical for identical inputs.
"""

import json
import os
import warnings

import numpy as np


def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json_atomic(path, obj):
    """Serialize with sorted keys and replace the target atomically."""
    tmp = str(path) + ".tmp"
    with open(tmp, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


# -- SVG plotting ------------------------------------------------------------

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
_W, _H = 640, 440
_ML, _MR, _MT, _MB = 70, 20, 40, 55


def _f(x):
    return "%.2f" % x


def _data_range(arrs):
    with warnings.catch_warnings():
        # all-NaN input warns in nanmin before the explicit error below
        warnings.simplefilter("ignore", RuntimeWarning)
        lo = min(float(np.nanmin(a)) for a in arrs if len(a))
        hi = max(float(np.nanmax(a)) for a in arrs if len(a))
    if not np.isfinite(lo) or not np.isfinite(hi):
        raise ValueError("plot data has no finite values")
    if lo == hi:
        pad = 1.0 if lo == 0 else 0.1 * abs(lo)
        lo, hi = lo - pad, hi + pad
    return lo, hi


def _axes(xlo, xhi, ylo, yhi, xlabel, ylabel, title):
    px0, px1 = _ML, _W - _MR
    py0, py1 = _H - _MB, _MT
    el = [
        f'<rect x="{px0}" y="{py1}" width="{px1 - px0}" height="{py0 - py1}" '
        'fill="none" stroke="#333" stroke-width="1"/>',
        f'<text x="{(px0 + px1) // 2}" y="{_H - 14}" text-anchor="middle" '
        f'font-size="14">{xlabel}</text>',
        f'<text x="18" y="{(py0 + py1) // 2}" text-anchor="middle" '
        f'font-size="14" transform="rotate(-90 18 {(py0 + py1) // 2})">{ylabel}</text>',
        f'<text x="{(px0 + px1) // 2}" y="24" text-anchor="middle" '
        f'font-size="15">{title}</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        xv = xlo + frac * (xhi - xlo)
        yv = ylo + frac * (yhi - ylo)
        px = px0 + frac * (px1 - px0)
        py = py0 - frac * (py0 - py1)
        el.append(f'<text x="{_f(px)}" y="{py0 + 18}" text-anchor="middle" '
                  f'font-size="11">{"%.4g" % xv}</text>')
        el.append(f'<text x="{px0 - 6}" y="{_f(py + 4)}" text-anchor="end" '
                  f'font-size="11">{"%.4g" % yv}</text>')
    return el


def _svg(elements):
    body = "\n".join(elements)
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" '
            f'height="{_H}" viewBox="0 0 {_W} {_H}">\n'
            f'<rect width="{_W}" height="{_H}" fill="white"/>\n'
            f"{body}\n</svg>\n")


def line_plot_svg(path, x, series, xlabel="", ylabel="", title="",
                  markers=None, vline=None):
    """series: list of (label, y array).  Single points are drawn as markers;
    vline draws a labeled vertical reference line."""
    x = np.asarray(x, dtype=float)
    if len(x) == 0 or not series:
        raise ValueError("plot data is empty")
    ys = [np.asarray(y, dtype=float) for _, y in series]
    xlo, xhi = _data_range([x] + ([np.array([vline])] if vline is not None else []))
    ylo, yhi = _data_range(ys)
    px0, px1 = _ML, _W - _MR
    py0, py1 = _H - _MB, _MT

    def sx(v):
        return px0 + (v - xlo) / (xhi - xlo) * (px1 - px0)

    def sy(v):
        return py0 - (v - ylo) / (yhi - ylo) * (py0 - py1)

    el = _axes(xlo, xhi, ylo, yhi, xlabel, ylabel, title)
    if ylo < 0 < yhi:
        el.append(f'<line x1="{px0}" y1="{_f(sy(0))}" x2="{px1}" '
                  f'y2="{_f(sy(0))}" stroke="#bbb" stroke-width="1" '
                  'stroke-dasharray="4,3"/>')
    if vline is not None:
        el.append(f'<line x1="{_f(sx(vline))}" y1="{py1}" x2="{_f(sx(vline))}" '
                  f'y2="{py0}" stroke="#888" stroke-width="1" '
                  'stroke-dasharray="5,3"/>')
        el.append(f'<text x="{_f(sx(vline) + 4)}" y="{py1 + 14}" '
                  f'font-size="11">{"%.4g" % vline}</text>')
    for i, (label, _) in enumerate(series):
        y = ys[i]
        col = _COLORS[i % len(_COLORS)]
        ok = np.isfinite(x) & np.isfinite(y)
        if ok.sum() == 1 or (markers and markers[i]) or len(x) == 1:
            for xv, yv in zip(x[ok], y[ok]):
                el.append(f'<circle cx="{_f(sx(xv))}" cy="{_f(sy(yv))}" r="3" '
                          f'fill="{col}"/>')
        if ok.sum() > 1:
            pts = " ".join(f"{_f(sx(xv))},{_f(sy(yv))}"
                           for xv, yv in zip(x[ok], y[ok]))
            el.append(f'<polyline points="{pts}" fill="none" stroke="{col}" '
                      'stroke-width="1.5"/>')
        el.append(f'<text x="{px1 - 8}" y="{py1 + 16 + 15 * i}" '
                  f'text-anchor="end" font-size="12" fill="{col}">{label}</text>')
    with open(path, "w", newline="\n") as fh:
        fh.write(_svg(el))


def _ramp(t):
    """Blue-white-red color ramp, t in [0, 1]."""
    t = min(1.0, max(0.0, t))
    if t < 0.5:
        u = t / 0.5
        r, g, b = 59 + u * (255 - 59), 76 + u * (255 - 76), 192 + u * (255 - 192)
    else:
        u = (t - 0.5) / 0.5
        r, g, b = 255 - u * (255 - 180), 255 - u * (255 - 4), 255 - u * (255 - 38)
    return f"#{int(r):02x}{int(g):02x}{int(b):02x}"


def heatmap_svg(path, x_values, y_values, grid, xlabel="", ylabel="", title=""):
    """grid[i, j] is the value at (y_values[i], x_values[j]); NaN cells are
    hatched gray."""
    x_values = np.asarray(x_values, dtype=float)
    y_values = np.asarray(y_values, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if grid.shape != (len(y_values), len(x_values)):
        raise ValueError("grid shape must be (len(y_values), len(x_values))")
    finite = grid[np.isfinite(grid)]
    if len(finite) == 0:
        raise ValueError("heatmap has no finite values")
    vlo, vhi = float(finite.min()), float(finite.max())
    if vlo == vhi:
        vhi = vlo + 1.0
    px0, px1 = _ML, _W - _MR - 60
    py0, py1 = _H - _MB, _MT
    cw = (px1 - px0) / len(x_values)
    ch = (py0 - py1) / len(y_values)
    el = [f'<text x="{(px0 + px1) // 2}" y="24" text-anchor="middle" '
          f'font-size="15">{title}</text>']
    for i in range(len(y_values)):
        for j in range(len(x_values)):
            v = grid[i, j]
            cx = px0 + j * cw
            cy = py0 - (i + 1) * ch
            fill = "#dddddd" if not np.isfinite(v) else _ramp((v - vlo) / (vhi - vlo))
            el.append(f'<rect x="{_f(cx)}" y="{_f(cy)}" width="{_f(cw)}" '
                      f'height="{_f(ch)}" fill="{fill}" stroke="#fff" '
                      'stroke-width="0.5"/>')
    for j, xv in enumerate(x_values):
        el.append(f'<text x="{_f(px0 + (j + 0.5) * cw)}" y="{py0 + 16}" '
                  f'text-anchor="middle" font-size="10">{"%.3g" % xv}</text>')
    for i, yv in enumerate(y_values):
        el.append(f'<text x="{px0 - 6}" y="{_f(py0 - (i + 0.5) * ch + 4)}" '
                  f'text-anchor="end" font-size="10">{"%.3g" % yv}</text>')
    el.append(f'<text x="{(px0 + px1) // 2}" y="{_H - 14}" text-anchor="middle" '
              f'font-size="14">{xlabel}</text>')
    el.append(f'<text x="18" y="{(py0 + py1) // 2}" text-anchor="middle" '
              f'font-size="14" transform="rotate(-90 18 {(py0 + py1) // 2})">'
              f'{ylabel}</text>')
    # color bar
    bx = px1 + 18
    nseg = 24
    for s in range(nseg):
        t = (s + 0.5) / nseg
        cy = py0 - (s + 1) * (py0 - py1) / nseg
        el.append(f'<rect x="{bx}" y="{_f(cy)}" width="16" '
                  f'height="{_f((py0 - py1) / nseg + 0.5)}" fill="{_ramp(t)}"/>')
    el.append(f'<text x="{bx + 20}" y="{py0 + 4}" font-size="10">{"%.3g" % vlo}</text>')
    el.append(f'<text x="{bx + 20}" y="{py1 + 8}" font-size="10">{"%.3g" % vhi}</text>')
    with open(path, "w", newline="\n") as fh:
        fh.write(_svg(el))
