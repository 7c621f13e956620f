"""The same audit as a file-based CLI workflow.

Everything the library does is reachable through the ``etaudit`` command:
generate a benchmark CSV, audit it, and render the report.  This script
drives the CLI in-process; from a shell the equivalent commands are printed
as it goes.
"""

import json
import tempfile
from pathlib import Path

from etaudit.cli import run

workdir = Path(tempfile.mkdtemp(prefix="etaudit-demo-"))
data = workdir / "indirect.csv"
report = workdir / "report.json"

steps = [
    ["generate", "--kind", "indirect", "--gamma", "0.8", "--n", "4000",
     "--seed", "0", "--out", str(data)],
    ["audit", "--data", str(data), "--target", "y", "--protected", "z",
     "--drop", "x4,y_prob", "--pair", "0:1", "--shap", "exact",
     "--background-cap", "64", "--bootstrap", "3", "--seed", "0",
     "--out", str(report), "--summary-csv", str(workdir / "summary.csv")],
    ["report", "--in", str(report), "--format", "md"],
]

for argv in steps:
    print(f"\n$ etaudit {' '.join(argv)}")
    code = run(argv)
    print(f"[exit {code}]")

doc = json.loads(report.read_text())
et_auc = doc["reports"][0]["et"]["auc"]
print(f"\nParsed back from {report.name}: equal-treatment AUC {et_auc:.3f}")
print(f"artifacts in {workdir}: {sorted(p.name for p in workdir.iterdir())}")
