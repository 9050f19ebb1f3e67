"""Static SVG rendering of campaign CSV files.

The SVG text depends only on the CSV content, so identical CSV gives
identical bytes. Nothing is recomputed: every drawn number is a CSV cell.
"""

from __future__ import annotations

import csv
import io
import math
from xml.sax.saxutils import escape

from .montecarlo import ALGORITHMS, CSV_COLUMNS

W, H = 720, 460
LEFT, RIGHT, TOP, BOTTOM = 70, 190, 40, 60
COLORS = {"no-oris": "#7f7f7f", "single-shot": "#1f77b4", "algorithm1": "#d62728"}
DASHES = ("", "6,3", "2,3", "8,3,2,3")
MARKERS = ("circle", "square", "triangle")


class PlotError(ValueError):
    pass


def read_rows(text: str):
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
        raise PlotError("CSV header does not match the campaign column contract")
    rows = list(reader)
    if not rows:
        raise PlotError("empty sweep: the CSV has no data rows")
    experiments = {r["experiment"] for r in rows}
    if len(experiments) != 1:
        raise PlotError(f"expected one experiment per CSV, found {sorted(experiments)}")
    for r in rows:
        if r["algorithm"] not in ALGORITHMS:
            raise PlotError(f"unknown algorithm {r['algorithm']!r}")
    return rows


def _num(s: str) -> float:
    if s == "":
        return math.nan
    try:
        return float(s)
    except ValueError:
        raise PlotError(f"non-numeric cell {s!r}") from None


def _f(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(round(v, 12))
        v += step
    return out


class _Axes:
    def __init__(self, xlo, xhi, ylo, yhi, log_y=False):
        self.log_y = log_y
        if log_y:
            ylo, yhi = math.floor(math.log10(ylo)), math.ceil(math.log10(yhi))
            if yhi <= ylo:
                yhi = ylo + 1
        elif yhi <= ylo:
            yhi = ylo + 1.0
        if xhi <= xlo:
            xlo, xhi = xlo - 0.5, xhi + 0.5
        self.xlo, self.xhi, self.ylo, self.yhi = xlo, xhi, ylo, yhi

    def x(self, v):
        return LEFT + (v - self.xlo) / (self.xhi - self.xlo) * (W - LEFT - RIGHT)

    def y(self, v):
        if self.log_y:
            v = math.log10(v)
        return H - BOTTOM - (v - self.ylo) / (self.yhi - self.ylo) * (H - TOP - BOTTOM)


def _frame(ax: _Axes, title, xlabel, ylabel, xticks=None, xticklabels=None):
    out = [f'<rect x="{LEFT}" y="{TOP}" width="{W - LEFT - RIGHT}" height="{H - TOP - BOTTOM}" '
           f'fill="none" stroke="#000"/>',
           f'<text x="{(LEFT + W - RIGHT) / 2:.1f}" y="{TOP - 14}" text-anchor="middle" '
           f'font-size="15">{escape(title)}</text>',
           f'<text x="{(LEFT + W - RIGHT) / 2:.1f}" y="{H - 16}" text-anchor="middle" '
           f'font-size="13">{escape(xlabel)}</text>',
           f'<text x="18" y="{(TOP + H - BOTTOM) / 2:.1f}" text-anchor="middle" font-size="13" '
           f'transform="rotate(-90 18 {(TOP + H - BOTTOM) / 2:.1f})">{escape(ylabel)}</text>']
    if xticks is None:
        xticks = _ticks(ax.xlo, ax.xhi)
    labels = xticklabels or [f"{t:g}" for t in xticks]
    for t, lab in zip(xticks, labels):
        px = ax.x(t)
        out.append(f'<line x1="{_f(px)}" y1="{H - BOTTOM}" x2="{_f(px)}" y2="{H - BOTTOM + 5}" stroke="#000"/>')
        out.append(f'<text x="{_f(px)}" y="{H - BOTTOM + 19}" text-anchor="middle" '
                   f'font-size="11">{escape(lab)}</text>')
    if ax.log_y:
        yt = [(10.0 ** e, f"1e{e}") for e in range(int(ax.ylo), int(ax.yhi) + 1)]
    else:
        yt = [(t, f"{t:g}") for t in _ticks(ax.ylo, ax.yhi)]
    for t, lab in yt:
        py = ax.y(t)
        out.append(f'<line x1="{LEFT - 5}" y1="{_f(py)}" x2="{LEFT}" y2="{_f(py)}" stroke="#000"/>')
        out.append(f'<line x1="{LEFT}" y1="{_f(py)}" x2="{W - RIGHT}" y2="{_f(py)}" stroke="#ddd"/>')
        out.append(f'<text x="{LEFT - 8}" y="{_f(py + 4)}" text-anchor="end" font-size="11">{lab}</text>')
    return out


def _marker(kind, px, py, color):
    if kind == "square":
        return f'<rect x="{_f(px - 3)}" y="{_f(py - 3)}" width="6" height="6" fill="{color}"/>'
    if kind == "triangle":
        return (f'<polygon points="{_f(px)},{_f(py - 4)} {_f(px - 4)},{_f(py + 3)} '
                f'{_f(px + 4)},{_f(py + 3)}" fill="{color}"/>')
    return f'<circle cx="{_f(px)}" cy="{_f(py)}" r="3" fill="{color}"/>'


def _legend(entries):
    out = []
    for i, (label, color, dash, marker) in enumerate(entries):
        y = TOP + 12 + 18 * i
        x = W - RIGHT + 12
        d = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<line x1="{x}" y1="{y}" x2="{x + 26}" y2="{y}" stroke="{color}" stroke-width="2"{d}/>')
        out.append(_marker(marker, x + 13, y, color))
        out.append(f'<text x="{x + 32}" y="{y + 4}" font-size="11">{escape(label)}</text>')
    return out


def _svg(body):
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}" font-family="sans-serif">')
    return "\n".join([head, f'<rect width="{W}" height="{H}" fill="#fff"/>', *body, "</svg>"]) + "\n"


def _want_log(values):
    pos = [v for v in values if v > 0 and math.isfinite(v)]
    return bool(pos) and max(pos) / min(pos) >= 100.0


def _line_plot(series, title, xlabel, ylabel):
    """``series``: list of (label, color, dash, marker, [(x, y)])."""
    ys = [y for *_, pts in series for _, y in pts if math.isfinite(y)]
    xs = [x for *_, pts in series for x, _ in pts if math.isfinite(x)]
    if not ys or not xs:
        raise PlotError("nothing to draw")
    log_y = _want_log(ys)
    if log_y:
        pos = [y for y in ys if y > 0]
        ax = _Axes(min(xs), max(xs), min(pos), max(pos), log_y=True)
    else:
        ax = _Axes(min(xs), max(xs), min(0.0, min(ys)), max(ys))
    body = _frame(ax, title, xlabel, ylabel + (" (log scale)" if log_y else ""))
    for label, color, dash, marker, pts in series:
        keep = [(x, y) for x, y in pts if math.isfinite(y) and (y > 0 or not log_y)]
        if not keep:
            continue
        d = f' stroke-dasharray="{dash}"' if dash else ""
        path = " ".join(f"{_f(ax.x(x))},{_f(ax.y(y))}" for x, y in keep)
        body.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"{d}/>')
        body.extend(_marker(marker, ax.x(x), ax.y(y), color) for x, y in keep)
    body += _legend([(s[0], s[1], s[2], s[3]) for s in series])
    return _svg(body)


def _fig1(rows):
    users = sorted({int(_num(r["users"])) for r in rows})
    algs = [a for a in ALGORITHMS if any(r["algorithm"] == a for r in rows)]
    vals = [_num(r[c]) for r in rows for c in ("whisker_low_db", "whisker_high_db")]
    vals = [v for v in vals if math.isfinite(v)]
    if not vals:
        raise PlotError("nothing to draw")
    ax = _Axes(min(users) - 0.6, max(users) + 0.6, min(vals), max(vals))
    body = _frame(ax, "SNR distribution per user count", "number of users", "SNR (dB)",
                  xticks=users)
    width = 0.8 / max(len(algs), 1)
    for i, alg in enumerate(algs):
        color = COLORS[alg]
        for r in rows:
            if r["algorithm"] != alg:
                continue
            u = int(_num(r["users"]))
            cx = u - 0.4 + width * (i + 0.5)
            q = [_num(r[c]) for c in ("whisker_low_db", "q1_snr_db", "median_snr_db",
                                      "q3_snr_db", "whisker_high_db")]
            if not all(math.isfinite(v) for v in q):
                continue
            x0, x1 = ax.x(cx - width * 0.4), ax.x(cx + width * 0.4)
            xm = ax.x(cx)
            body.append(f'<line x1="{_f(xm)}" y1="{_f(ax.y(q[0]))}" x2="{_f(xm)}" '
                        f'y2="{_f(ax.y(q[4]))}" stroke="{color}"/>')
            body.append(f'<rect x="{_f(x0)}" y="{_f(ax.y(q[3]))}" width="{_f(x1 - x0)}" '
                        f'height="{_f(ax.y(q[1]) - ax.y(q[3]))}" fill="#fff" stroke="{color}"/>')
            body.append(f'<line x1="{_f(x0)}" y1="{_f(ax.y(q[2]))}" x2="{_f(x1)}" '
                        f'y2="{_f(ax.y(q[2]))}" stroke="{color}" stroke-width="2"/>')
    body += _legend([(a, COLORS[a], "", "square") for a in algs])
    return _svg(body)


def _group(rows, key):
    out = {}
    for r in rows:
        out.setdefault(key(r), []).append(r)
    return out


def _fig2(rows):
    series = []
    ths = sorted({_num(r["gamma_th_db"]) for r in rows})
    for alg in ALGORITHMS:
        for j, th in enumerate(ths):
            pts = sorted((_num(r["users"]), _num(r["p_out"])) for r in rows
                         if r["algorithm"] == alg and _num(r["gamma_th_db"]) == th)
            if pts:
                series.append((f"{alg}, {th:g} dB", COLORS[alg], DASHES[j % len(DASHES)],
                               MARKERS[j % len(MARKERS)], pts))
    return _line_plot(series, "Outage probability vs number of users", "number of users",
                      "outage probability")


def _fig3(rows):
    series = []
    users = sorted({int(_num(r["users"])) for r in rows})
    for alg in ALGORITHMS:
        for j, u in enumerate(users):
            pts = sorted((_num(r["gamma_th_db"]), _num(r["p_out"])) for r in rows
                         if r["algorithm"] == alg and int(_num(r["users"])) == u)
            if pts:
                series.append((f"{alg}, U={u}", COLORS[alg], DASHES[j % len(DASHES)],
                               MARKERS[j % len(MARKERS)], pts))
    return _line_plot(series, "Outage probability vs SNR threshold", "SNR threshold (dB)",
                      "outage probability")


def _fig4(rows):
    series = []
    for alg in ALGORITHMS:
        pts = sorted((_num(r["element_area_m2"]), _num(r["p_out"])) for r in rows
                     if r["algorithm"] == alg)
        if pts:
            series.append((alg, COLORS[alg], "", "circle", pts))
    return _line_plot(series, "Outage probability vs ORIS element area",
                      "element area (m^2)", "outage probability")


def render(csv_text: str) -> str:
    """SVG text for a campaign CSV."""
    rows = read_rows(csv_text)
    exp = rows[0]["experiment"]
    renderers = {"fig1": _fig1, "fig2": _fig2, "fig3": _fig3, "fig4": _fig4}
    if exp not in renderers:
        raise PlotError(f"unknown experiment {exp!r}")
    return renderers[exp](rows)


def emit_plot(csv_path, svg_path) -> str:
    """Render ``csv_path`` into ``svg_path``; nothing is written on error."""
    with open(csv_path, encoding="utf-8") as fh:
        svg = render(fh.read())
    with open(svg_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    return svg
