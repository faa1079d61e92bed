"""Deterministic report emission: JSON, CSV, SVG plots and markdown summaries.

Nothing time- or host-dependent is written, so equal inputs and seeds give
byte-identical files.
"""

import csv
import io
import json
import math
import os
import shutil
import tempfile
from xml.sax.saxutils import escape

import numpy as np

from .volume import profile_csv


def clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj):
    return json.dumps(clean(obj), indent=2, allow_nan=False) + "\n"


def write_text(path, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


class AtomicDir:
    """Build a directory under a temporary name and rename it into place on success.

    On an exception the partial directory is removed, so a failed run never
    leaves outputs behind.
    """

    def __init__(self, target):
        self.target = os.path.abspath(target)
        self.tmp = None

    def __enter__(self):
        parent = os.path.dirname(self.target)
        os.makedirs(parent, exist_ok=True)
        self.tmp = tempfile.mkdtemp(prefix="." + os.path.basename(self.target) + ".", dir=parent)
        return self.tmp

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            shutil.rmtree(self.tmp, ignore_errors=True)
            return False
        os.chmod(self.tmp, 0o755)
        if os.path.exists(self.target):
            shutil.rmtree(self.target)
        os.rename(self.tmp, self.target)
        return False


# ---------------------------------------------------------------------------
# CSV


def volumes_csv(result):
    return profile_csv(list(zip(result.t_grid, result.volumes)))


def ray_values(spec, t):
    """u along the diagonal ray ``e^t (1, ..., 1) / sqrt(n)``."""
    n = spec.dimension
    t = np.asarray(t, dtype=float)
    x = np.stack([t - 0.5 * math.log(n)] * n)
    if spec.symmetry.value == "s1":
        return spec.at_points(np.exp(x).astype(complex))
    return spec.toric(x)


def profile_rows(spec, result, count=200):
    kt, _ = result.u_hat.knot_arrays()
    lo = max(float(kt[0]), spec.log_radius - 30.0)
    t = np.linspace(lo, spec.log_radius, count)
    return t, ray_values(spec, t), result.u_hat(t)


def profiles_csv(spec, result, count=200):
    t, f, fh = profile_rows(spec, result, count)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "u_on_diagonal_ray", "f_hat"])
    for row in zip(t, f, fh):
        w.writerow([format(float(v), ".17g") for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# SVG


def _fmt(x):
    return format(float(x), ".6g")


def svg_plot(series, title, xlabel, ylabel, width=640, height=400):
    """Line plot of ``[(label, x, y, color, dashed), ...]`` as an SVG string."""
    left, right, top, bottom = 70, 20, 40, 50
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series])
    ok = np.isfinite(xs) & np.isfinite(ys)
    x0, x1 = float(xs[ok].min()), float(xs[ok].max())
    y0, y1 = float(ys[ok].min()), float(ys[ok].max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = width - left - right, height - top - bottom

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for k in range(5):
        xv = x0 + k * (x1 - x0) / 4
        yv = y0 + k * (y1 - y0) / 4
        out.append(f'<text x="{_fmt(px(xv))}" y="{top + ph + 18}" text-anchor="middle" '
                   f'font-size="11">{_fmt(xv)}</text>')
        out.append(f'<text x="{left - 6}" y="{_fmt(py(yv) + 4)}" text-anchor="end" '
                   f'font-size="11">{_fmt(yv)}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle" '
               f'font-size="13">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2}" text-anchor="middle" font-size="13" '
               f'transform="rotate(-90 16 {top + ph / 2})">{escape(ylabel)}</text>')
    for i, (label, x, y, color, dashed) in enumerate(series):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        keep = np.isfinite(x) & np.isfinite(y)
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x[keep], y[keep]))
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.6"{dash} points="{pts}"/>')
        ly = top + 16 + 16 * i
        out.append(f'<line x1="{left + 10}" y1="{ly}" x2="{left + 34}" y2="{ly}" stroke="{color}" '
                   f'stroke-width="2"{dash}/>')
        out.append(f'<text x="{left + 40}" y="{ly + 4}" font-size="12">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def profile_svg(spec, result):
    t, f, fh = profile_rows(spec, result)
    return svg_plot([("u on the diagonal ray", t, f, "#1f77b4", False),
                     ("symmetrized profile", t, fh, "#d62728", True)],
                    f"{spec.name}: profiles", "t = log|z|", "value")


def volume_svg(spec, result, report):
    t = np.asarray(result.t_grid, float)
    lm = np.array([e.log_value for e in result.volumes], dtype=float)
    ok = np.isfinite(lm) & (t >= spec.boundary_sup - 30.0)
    series = [("log mu(t)", t[ok], lm[ok], "#2ca02c", False)]
    iota = report.iota_volume.slope
    if iota > 0 and np.any(ok):
        # slope 2/iota line through the deepest plotted point
        k = 2.0 / iota
        tt = t[ok]
        j = int(np.argmin(tt))
        series.append((f"fitted slope 2/iota = {k:.4g}", tt, lm[ok][j] + k * (tt - tt[j]),
                       "#9467bd", True))
    return svg_plot(series, f"{spec.name}: sub-level volumes", "t", "log |{u < t}|")


# ---------------------------------------------------------------------------
# markdown


def _num(x, digits=6):
    if x is None:
        return "n/a"
    if isinstance(x, str):
        return x
    return format(float(x), f".{digits}g")


def theorem_table(theorems):
    lines = ["| check | status | lhs | rhs | margin | tolerance |",
             "|---|---|---|---|---|---|"]
    for c in theorems["checks"]:
        lines.append(f"| {c['title']} | {c['status']} | {_num(c.get('lhs'))} | {_num(c.get('rhs'))} "
                     f"| {_num(c.get('margin'))} | {_num(c.get('tolerance'))} |")
    return "\n".join(lines)


def summary_md(spec, report, theorems=None, config=None):
    r = report
    lines = [f"# {spec.name}", "",
             f"dimension {spec.dimension}, symmetry {spec.symmetry.value}, "
             f"pole structure {spec.pole_structure.value}", "",
             "| quantity | value | stderr | method | unstable |", "|---|---|---|---|---|"]
    for label, est in (("nu", r.nu), ("iota (volume)", r.iota_volume),
                       ("iota (Kiselman)", r.iota_kiselman), ("nu_hat", r.nu_hat)):
        if est is None:
            lines.append(f"| {label} | n/a | | | |")
        else:
            lines.append(f"| {label} | {_num(est.slope)} | {_num(est.stderr, 3)} | {est.method} "
                         f"| {est.unstable} |")
    lines.append(f"| tau_hat | {_num(r.tau_hat)} | | nu_hat^n | |")
    lines.append(f"| tau | {_num(r.tau)} | | catalog or radial | |")
    lines.append(f"| Rashkovskii bound | {_num(r.rashkovskii_lb)} | | simplex search | |")
    if theorems is not None:
        lines += ["", "## Checks", "", theorem_table(theorems)]
    if config is not None:
        lines += ["", "## Configuration", "", "```", dumps(config).rstrip(), "```"]
    return "\n".join(lines) + "\n"
