"""Which features drive un-equal treatment?

With a linear inspector, the standardised coefficient on each explanation
column measures how much that feature's attributions help predict the
protected group.  Contrasting the bootstrap distribution of each
coefficient against a random-groups baseline (Wasserstein distance) turns
the raw coefficients into a robustness-checked ranking.
"""

import numpy as np

from etaudit import (
    AuditConfig,
    GroupPair,
    LearnerSpec,
    TabularDataset,
    equal_treatment_audit,
    explain_drivers,
)

# x1, x2 carry the signal and are independent of the group; x3 leaks the
# group (correlation 0.8 with the latent group variable) and also feeds the
# target, so the model must use it
rng = np.random.default_rng(0)
n = 4000
latent = rng.standard_normal(n)
x3 = 0.8 * latent + np.sqrt(1 - 0.64) * rng.standard_normal(n)
x1, x2 = rng.standard_normal(n), rng.standard_normal(n)
data = TabularDataset(
    feature_names=("x1", "x2", "x3"),
    X=np.column_stack([x1, x2, x3]),
    y=x1 + x2 + x3,
    z=np.where(latent > 0, "1", "0").astype(object),
    target="y",
    protected="z",
)

config = AuditConfig(model=LearnerSpec("linear"), shap_variant="linear",
                     bootstrap_runs=8)
report = equal_treatment_audit(data, GroupPair("0", "1"), config)
print(f"equal-treatment AUC {report.et.auc:.3f} (p={report.et.p_value:.2g})")

rows = explain_drivers(report, data, GroupPair("0", "1"), config, n_baseline_runs=15)
print("\nfeature   coefficient   wasserstein vs random groups")
for r in sorted(rows, key=lambda r: -abs(r.coefficient)):
    print(f"  {r.feature}      {r.coefficient:+.3f}        {r.wasserstein_vs_random:.4f}")

print("\nx3 dominates on both readings: its attributions predict the group, "
      "and its coefficient distribution sits far from the permuted-group "
      "baseline; x1 and x2 are indistinguishable from chance.")
