"""Sweep the data-unfairness dial and watch the four inspectors.

Two scenarios share the same inputs (x3 correlated with the protected group
at strength gamma) and differ only in whether the model's target uses x3:

* indirect: the target depends on x3, so the model is genuinely unfair and
  every good detector should climb with gamma;
* uninformative: the target ignores x3, so the model is fair; detectors on
  the explanation or prediction space should stay at 1/2 while detectors on
  the raw input flag a false positive.

Writes a plot-ready CSV into the current directory.
"""

import os

from etaudit import AuditConfig
from etaudit.synthetic import gamma_sweep, gamma_sweep_to_csv

gammas = [0.0, 0.3, 0.6, 0.9]
config = AuditConfig(bootstrap_runs=1, background_cap=32)

for kind in ("indirect", "uninformative"):
    points = gamma_sweep(kind, gammas, n=4000, seed=0, config=config)
    print(f"\n{kind} case (n=4000):")
    print("  gamma   ET     DP     input  combined")
    for p in points:
        print(f"  {p.gamma:5.2f}  {p.et_auc:.3f}  {p.dp_auc:.3f}  "
              f"{p.input_auc:.3f}  {p.combined_auc:.3f}")
    out = os.path.join(os.getcwd(), f"gamma_sweep_{kind}.csv")
    gamma_sweep_to_csv(points, out)
    print(f"  curve written to {out}")

print("\nReading: in the indirect case all detectors climb; in the "
      "uninformative case only the input detectors climb -- the "
      "explanation-space audit correctly refuses the false positive.")
