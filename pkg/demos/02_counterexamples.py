"""Why audit explanations instead of predictions or single features?

Three constructions separate the fairness notions:

* lundberg: each feature's attribution is independent of the group, yet the
  model output identifies the group exactly -- per-feature checks miss a
  joint dependence.
* ex42: the prediction distribution is identical across groups (demographic
  parity holds) while the explanation distribution differs in shape -- a
  prediction-space audit stays silent where the explanation-space audit
  flags.
* squared_dependence: the conditional-expectation attribution of an unused
  feature is identically zero even though the model output depends on it --
  a zero attribution of the protected feature does not certify fairness.
"""

from etaudit import counterexample_suite

results = counterexample_suite(seed=0, n=10_000)

lb = results["lundberg"]
print("lundberg:", "PASS" if lb.passed else "FAIL")
print(f"  per-feature test p-values: s1={lb.checks['s1_p_value']:.3f}, "
      f"s2={lb.checks['s2_p_value']:.3f}  (no marginal dependence)")
print(f"  P(group=0 | model output = 0) = {lb.checks['p_z0_given_f0']:.3f}  "
      f"(output pins the group down)")

ex = results["ex42"]
print("\nex42:", "PASS" if ex.passed else "FAIL")
print(f"  demographic-parity p-value: {ex.checks['dp_p_value']:.3f}  (no rejection)")
print(f"  equal-treatment AUC: {ex.checks['et_auc']:.3f}  "
      f"p={ex.checks['et_p_value']:.2g}  (clear rejection)")
print(f"  attribution shapes: var given group 0 = {ex.checks['s1_var_given_z0']:.3f} "
      f"(normal), max |value| given group 1 = {ex.checks['s1_max_abs_given_z1']:.3f} "
      f"(uniform on a unit box)")

sq = results["squared_dependence"]
print("\nsquared_dependence:", "PASS" if sq.passed else "FAIL")
print(f"  max |conditional attribution of x2| = {sq.checks['max_abs_phi2']}  (exactly zero)")
print(f"  KS p-value of model output across x2 groups: {sq.checks['ks_p_value']:.2g}  "
      f"(yet the output depends on x2)")
