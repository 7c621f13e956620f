"""Quickstart: audit a model for equal treatment on synthetic data.

The "indirect" scenario bakes unfairness into the data (x3 is correlated
with the protected group) and into the model (the target depends on x3).
The audit fits a gradient boosted model, projects validation/test rows into
its Shapley explanation distribution, trains a logistic inspector to tell
the groups apart from the explanations, and tests the inspector's held-out
AUC against 1/2.
"""

from etaudit import (
    AuditConfig,
    GroupPair,
    ScenarioSpec,
    equal_treatment_audit,
    generate,
)

data = generate(ScenarioSpec(kind="indirect", n=6000, gamma=0.7, seed=0))
print(f"dataset: {data.n_rows} rows, features {data.feature_names}, "
      f"groups {data.group_labels()}")

config = AuditConfig(bootstrap_runs=5, background_cap=64)
report = equal_treatment_audit(data, GroupPair("0", "1"), config)

print("\nInspector AUCs (test partition):")
print(f"  equal treatment (explanations): {report.et.auc:.3f}  p={report.et.p_value:.2g}")
print(f"  demographic parity (predictions): {report.dp.auc:.3f}  p={report.dp.p_value:.2g}")
print(f"  input data: {report.input.auc:.3f}")
print(f"  predictions + input: {report.combined.auc:.3f}")

print("\nPrediction-distribution distances between groups:")
d = report.dp_distances
print(f"  KS p-value {d.ks_pvalue:.2g}, Wasserstein {d.wasserstein:.4f}")

print("\nExplanation features driving the gap (standardised coefficients):")
for row in sorted(report.drivers, key=lambda r: -abs(r.coefficient)):
    print(f"  {row.feature}: {row.coefficient:+.3f}")

spread = max(report.bootstrap["et"]) - min(report.bootstrap["et"])
print(f"\nET AUC over {len(report.bootstrap['et'])} bootstrap runs: "
      f"{[round(a, 3) for a in report.bootstrap['et']]} (spread {spread:.3f})")
print("\nVerdict:", "un-equal treatment flagged" if report.violation() else "no violation")
