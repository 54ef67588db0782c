"""The limit-periodic drift and its limit field.

Samples sigma, b, B and b_inf on [-9, 9], writes a CSV per field and one
stacked SVG chart, and shows how the translates b(. + 3**n) approach b_inf.

Run:  python demos/01_fields.py [out_dir]
"""

import sys
from pathlib import Path

from critlab import reporting
from critlab.limit_periodic import DriftField, LimitField, translated_eval

out = Path(sys.argv[1] if len(sys.argv) > 1 else "out/demos")

x = reporting.sample_grid(-9.0, 9.0, 0.01)
panels = [(w, reporting.sample_field(w, x)) for w in reporting.FIELDS]
for name, y in panels:
    reporting.write_text(out / f"field_{name}.csv", reporting.field_csv(x, y))
reporting.write_text(out / "fields.svg", reporting.line_chart_svg(x, panels))
print(f"wrote {len(panels)} CSV files and fields.svg to {out}")

# B grows along powers of three with a 1/(n+1)^2 damped increment
b = DriftField()
for n in range(6):
    print(f"B(3^{n}) = {float(b.antiderivative(3.0**n)):.6f}")

# translates along 3**n converge to the limit field, at the rate of the zeta tail
lim = LimitField(1e-12)
for n in (2, 5, 10, 20):
    gap = translated_eval(0.5, n) - float(lim.value(0.5))
    print(f"b(0.5 + 3^{n}) - b_inf(0.5) = {gap:+.6f}")
