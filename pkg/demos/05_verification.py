"""The two verification pipelines.

Each pipeline runs its stages in order, stops at the first failure and
records the worst margin per check.  The JSON report is deterministic.

Run:  python demos/05_verification.py [out_dir]
"""

import sys
from pathlib import Path

from critlab import reporting
from critlab.verification import CellPerturbation, run_ce1, run_ce2, verify_kn_lower

out = Path(sys.argv[1] if len(sys.argv) > 1 else "out/demos")

pipelines = [run_ce1(), run_ce2()]
for p in pipelines:
    print(p.summary_table())
    print()
doc = reporting.validate(reporting.suite_dict(pipelines), "suite_report")
print("wrote", reporting.write_text(out / "suite.json", reporting.dumps(doc)))

# a negative control: lowering b on the first cell breaks the lower inequality
rec = verify_kn_lower(8, CellPerturbation(-0.5, 0))
print(f"perturbed kn-lower: passed={rec.passed}, worst margin {rec.worst_margin:+.4f} at {rec.worst_location}")
