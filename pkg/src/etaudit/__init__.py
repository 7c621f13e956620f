"""etaudit: equal-treatment fairness auditing.

Audits whether a predictive model treats protected groups equally by
projecting data into the model's Shapley explanation distribution, training
an inspector classifier to tell the groups apart from the explanations, and
testing the inspector's held-out AUC against 1/2 with a Brunner-Munzel
test.  Baselines on predictions (demographic parity), raw inputs and both
combined ship alongside, as do driver attribution, synthetic benchmark
generators and a power-study engine.
"""

__version__ = "0.1.0"

from .data import (  # noqa: E402
    GroupPair,
    SplitSpec,
    TabularDataset,
    bootstrap_indices,
    load_csv,
    save_csv,
    split_three_way,
)
from .errors import DataError, EtauditError, FitError, UsageError  # noqa: E402
from .models import (  # noqa: E402
    DecisionTree,
    GradientBoostedTrees,
    LinearModel,
    fit_gbt,
    fit_linear,
    fit_tree,
    margin,
    model_from_json,
    model_to_json,
    predict,
)
from .shapley import (  # noqa: E402
    BackgroundSample,
    ConditionalMeanTable,
    ExplanationMatrix,
    compare_variants,
    conditional_mean_table,
    shap_exact_enumeration,
    shap_linear_interventional,
    shap_linear_observational_bivariate,
    shap_montecarlo,
)
from .stats import (  # noqa: E402
    AccuracyTestResult,
    AucTestResult,
    DistanceReport,
    KsResult,
    PowerPoint,
    accuracy_c2st,
    auc,
    brunner_munzel_auc_test,
    ks_two_sample,
    power_study,
    power_study_to_csv,
    wasserstein_1d,
)
from .inspector import (  # noqa: E402
    AuditConfig,
    AuditReport,
    CounterexampleResult,
    DriverRow,
    LearnerSpec,
    SweepCell,
    counterexample_suite,
    demographic_parity_audit,
    equal_treatment_audit,
    explain_drivers,
    sweep,
    sweep_to_csv,
)
from .synthetic import (  # noqa: E402
    GammaPoint,
    ScenarioSpec,
    gamma_sweep,
    gamma_sweep_to_csv,
    generate,
)

__all__ = [
    "__version__",
    "AccuracyTestResult",
    "AuditConfig",
    "AuditReport",
    "AucTestResult",
    "BackgroundSample",
    "ConditionalMeanTable",
    "CounterexampleResult",
    "DataError",
    "DecisionTree",
    "DistanceReport",
    "DriverRow",
    "EtauditError",
    "ExplanationMatrix",
    "FitError",
    "GammaPoint",
    "GradientBoostedTrees",
    "GroupPair",
    "KsResult",
    "LearnerSpec",
    "LinearModel",
    "PowerPoint",
    "ScenarioSpec",
    "SplitSpec",
    "SweepCell",
    "TabularDataset",
    "UsageError",
    "accuracy_c2st",
    "auc",
    "bootstrap_indices",
    "brunner_munzel_auc_test",
    "compare_variants",
    "conditional_mean_table",
    "counterexample_suite",
    "demographic_parity_audit",
    "equal_treatment_audit",
    "explain_drivers",
    "fit_gbt",
    "fit_linear",
    "fit_tree",
    "gamma_sweep",
    "gamma_sweep_to_csv",
    "generate",
    "ks_two_sample",
    "load_csv",
    "margin",
    "model_from_json",
    "model_to_json",
    "power_study",
    "power_study_to_csv",
    "predict",
    "save_csv",
    "shap_exact_enumeration",
    "shap_linear_interventional",
    "shap_linear_observational_bivariate",
    "shap_montecarlo",
    "split_three_way",
    "sweep",
    "sweep_to_csv",
    "wasserstein_1d",
]
