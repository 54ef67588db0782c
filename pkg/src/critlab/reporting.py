"""Report serialisation: CSV tables, SVG line charts and schema-checked JSON.

Everything written here is locale-independent and deterministic, so that two
runs with the same inputs produce byte-identical files.
"""

import csv
import io
import json
import math
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
from referencing import Registry, Resource

from .errors import InvalidArgumentError
from .limit_periodic import DriftField, LimitField, SigmaField

FIELDS = ("sigma", "b", "B", "binf")
SCHEMAS = ("verification_record", "pipeline_report", "criticality_report", "eigen_result", "suite_report")
MAX_SAMPLES = 5_000_000


def fmt(v):
    """12 significant digits, dot decimal separator, no locale involvement."""
    v = float(v)
    if not math.isfinite(v):
        return "inf" if v > 0 else "-inf" if v < 0 else "nan"
    return format(v, ".12g")


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def sample_grid(lo, hi, step):
    if not (math.isfinite(lo) and math.isfinite(hi)) or not hi > lo:
        raise InvalidArgumentError("range must be finite with lo < hi")
    if not step > 0:
        raise InvalidArgumentError("step must be positive")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    if n > MAX_SAMPLES:
        raise InvalidArgumentError(f"{n} samples requested; the limit is {MAX_SAMPLES}")
    return lo + step * np.arange(n)


def sample_field(which, x, tol=1e-9):
    """Values of sigma, b, B or b_inf at ``x``."""
    if which == "sigma":
        return np.asarray(SigmaField()(x), dtype=float)
    if which == "b":
        return np.asarray(DriftField().value(x), dtype=float)
    if which == "B":
        return np.asarray(DriftField().antiderivative(x), dtype=float)
    if which == "binf":
        return np.asarray(LimitField(tol).value(x), dtype=float)
    raise InvalidArgumentError(f"unknown field {which!r}; expected one of {', '.join(FIELDS)}")


def field_csv(x, values):
    return csv_text(["x", "value"], zip(np.asarray(x, dtype=float), np.asarray(values, dtype=float)))


def sweep_csv(points):
    return csv_text(["R", "lambda", "residual"], ((p.radius, p.lam, p.residual) for p in points))


# -- SVG ------------------------------------------------------------------------


def _ticks(lo, hi, count=5):
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def _panel(x, y, label, top, width, height, margin):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = float(np.min(y)), float(np.max(y))
    pad = 0.05 * (y1 - y0) if y1 > y0 else 1.0
    y0, y1 = y0 - pad, y1 + pad
    w, h = width - 2 * margin, height - 2 * margin

    def px(v):
        return margin + (v - x0) / (x1 - x0) * w

    def py(v):
        return top + margin + (y1 - v) / (y1 - y0) * h

    pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
    out = [
        f'<rect x="{margin}" y="{top + margin}" width="{w}" height="{h}" fill="none" stroke="#888"/>',
        f'<text x="{margin}" y="{top + margin - 8}" font-size="14">{label}</text>',
    ]
    if y0 < 0 < y1:
        out.append(f'<line x1="{margin}" y1="{py(0):.2f}" x2="{margin + w}" y2="{py(0):.2f}" stroke="#ccc"/>')
    for t in _ticks(x0, x1):
        out.append(f'<text x="{px(t):.2f}" y="{top + margin + h + 16}" font-size="10" '
                   f'text-anchor="middle">{fmt(round(t, 10))}</text>')
    for t in _ticks(y0, y1, 4):
        out.append(f'<text x="{margin - 6}" y="{py(t) + 3:.2f}" font-size="10" '
                   f'text-anchor="end">{fmt(round(t, 10))}</text>')
    out.append(f'<polyline fill="none" stroke="#1f4e9c" stroke-width="1" points="{pts}"/>')
    return out


def line_chart_svg(x, panels, width=800, panel_height=260, margin=50):
    """Stacked line-chart panels sharing the x samples.

    ``panels`` is a list of ``(label, values)``.  Only ``rect``, ``line``,
    ``text`` and ``polyline`` elements are used.
    """
    if not panels:
        raise InvalidArgumentError("need at least one panel")
    height = panel_height * len(panels)
    body = []
    for i, (label, y) in enumerate(panels):
        body += _panel(x, y, label, i * panel_height, width, panel_height, margin)
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">')
    return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>'] + body + ["</svg>"]) + "\n"


# -- JSON ---------------------------------------------------------------------------


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


@lru_cache(maxsize=None)
def _registry():
    pairs = []
    for name in SCHEMAS:
        text = resources.files("critlab.schemas").joinpath(f"{name}.schema.json").read_text(encoding="utf-8")
        pairs.append((f"{name}.schema.json", Resource.from_contents(json.loads(text))))
    return Registry().with_resources(pairs)


def load_schema(name):
    if name not in SCHEMAS:
        raise InvalidArgumentError(f"unknown schema {name!r}")
    return _registry()[f"{name}.schema.json"].contents


def validate(obj, name):
    """Raise ``jsonschema.ValidationError`` unless ``obj`` fits the named schema."""
    schema = load_schema(name)
    jsonschema.Draft202012Validator(schema, registry=_registry()).validate(obj)
    return obj


def eigen_dict(operator, points, extrapolated=False):
    return {
        "operator": operator,
        "extrapolated": bool(extrapolated),
        "points": [{"R": float(p.radius), "lambda": float(p.lam), "residual": float(p.residual),
                    "h": float(p.h), "positive": bool(p.positive)} for p in points],
    }


def suite_dict(pipelines):
    return {"pass": all(p.passed for p in pipelines), "pipelines": [p.to_dict() for p in pipelines]}
