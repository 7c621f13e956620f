"""Audit pipelines built on explanation distributions.

The equal-treatment audit projects a model into its Shapley explanation
distribution, trains an inspector classifier to predict the protected group
from the explanations, and reads the inspector's held-out AUC as a
statistical test of independence.  Baseline inspectors work on the
predictions alone (demographic parity), on the raw inputs, and on both
combined.  For linear inspectors, the standardised coefficients attribute
un-equal treatment to individual features, optionally contrasted against a
random-group baseline via the Wasserstein distance.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__ as _pkg_version
from ._util import run_jobs, seed_for
from .data import GroupPair, SplitSpec, _chunk_permutation, bootstrap_indices
from .errors import DataError, FitError
from .models import (
    LinearModel,
    fit_gbt,
    fit_linear,
    fit_tree,
    margin as model_margin,
    predict as model_predict,
)
from .shapley import (
    BackgroundSample,
    conditional_mean_table,
    shap_exact_enumeration,
    shap_linear_interventional,
    shap_linear_observational_bivariate,
    shap_montecarlo,
)
from .stats import (
    AucTestResult,
    DistanceReport,
    brunner_munzel_auc_test,
    ks_two_sample,
    wasserstein_1d,
)
from .synthetic import ScenarioSpec, generate

REPORT_FORMAT_VERSION = 1

LEARNER_KINDS = ("linear", "logistic", "tree", "gbt")

SHAP_VARIANTS = ("exact", "linear", "montecarlo", "observational")


@dataclass(frozen=True)
class LearnerSpec:
    """A learner family plus hyperparameters, resolved at fit time."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in LEARNER_KINDS:
            raise FitError(f"unknown learner kind {self.kind!r}")
        object.__setattr__(self, "params", dict(self.params))

    def describe(self):
        if not self.params:
            return self.kind
        inner = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.kind}({inner})"


DEFAULT_MODEL = LearnerSpec("gbt")
# unit ridge on the raw coefficient scale; mutes explanation columns whose
# information lives at a vanishing scale instead of amplifying them
DEFAULT_INSPECTOR = LearnerSpec("logistic", {"l2": 1.0})

_GBT_DEFAULTS = {
    "n_trees": 100,
    "max_depth": 3,
    "learning_rate": 0.1,
    "min_leaf": 1,
    "reg_lambda": 1.0,
    "min_gain_fraction": 0.05,
}
_TREE_DEFAULTS = {"max_depth": 3, "min_leaf": 1}


def _is_binary(y):
    return set(np.unique(y).tolist()) <= {0.0, 1.0}


def fit_learner(spec, X, y, binary):
    """Fit a LearnerSpec; classification variants are used when ``binary``."""
    params = dict(spec.params)
    if spec.kind == "linear":
        return fit_linear(X, y, link="identity", l2=params.get("l2"))
    if spec.kind == "logistic":
        return fit_linear(X, y, link="logistic", l2=params.get("l2"))
    if spec.kind == "tree":
        merged = {**_TREE_DEFAULTS, **params}
        task = "classification" if binary else "regression"
        return fit_tree(X, y, merged["max_depth"], merged["min_leaf"], task=task)
    merged = {**_GBT_DEFAULTS, **params}
    loss = "logistic" if binary else "squared"
    return fit_gbt(
        X,
        y,
        n_trees=merged["n_trees"],
        max_depth=merged["max_depth"],
        learning_rate=merged["learning_rate"],
        loss=loss,
        min_leaf=merged["min_leaf"],
        reg_lambda=merged["reg_lambda"],
        min_gain_fraction=merged["min_gain_fraction"],
    )


@dataclass(frozen=True)
class AuditConfig:
    """Everything an audit needs besides the data and the group pair."""

    model: LearnerSpec = DEFAULT_MODEL
    inspector: LearnerSpec = DEFAULT_INSPECTOR
    shap_variant: str = "exact"
    split: SplitSpec = field(default_factory=SplitSpec)
    alpha: float = 0.05
    bootstrap_runs: int = 30
    background_cap: int = 512
    mc_permutations: int = 200
    include_protected: bool = False
    explain_probability: bool = False
    alternative: str = "greater"
    ci_level: float = 0.95
    workers: int = 1

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise DataError("alpha must be in (0, 1)")
        if self.bootstrap_runs < 1:
            raise DataError("bootstrap_runs must be >= 1")
        if self.shap_variant not in SHAP_VARIANTS:
            raise DataError(f"unknown shap_variant {self.shap_variant!r}")

    def to_dict(self):
        return {
            "model": self.model.describe(),
            "inspector": self.inspector.describe(),
            "shap_variant": self.shap_variant,
            "split_fractions": list(self.split.fractions),
            "split_seed": self.split.seed,
            "alpha": self.alpha,
            "bootstrap_runs": self.bootstrap_runs,
            "background_cap": self.background_cap,
            "mc_permutations": self.mc_permutations,
            "include_protected": self.include_protected,
            "explain_probability": self.explain_probability,
            "alternative": self.alternative,
            "ci_level": self.ci_level,
        }


@dataclass(frozen=True)
class DriverRow:
    """Per-feature attribution of un-equal treatment."""

    feature: str
    coefficient: float
    wasserstein_vs_random: float = None


@dataclass(frozen=True)
class AuditReport:
    """All inspector outcomes for one group pair, plus bootstrap spreads."""

    pair: GroupPair
    orientation: str
    group_sizes: dict
    et: AucTestResult
    dp: AucTestResult
    input: AucTestResult
    combined: AucTestResult
    dp_distances: DistanceReport
    drivers: tuple = None
    bootstrap: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def violation(self, alpha=None):
        """True when the equal-treatment test rejects independence."""
        cut = self.config.get("alpha", 0.05) if alpha is None else alpha
        return bool(self.et.p_value < cut)

    def to_dict(self):
        return {
            "report_version": REPORT_FORMAT_VERSION,
            "pair": {"group_a": self.pair.group_a, "group_b": self.pair.group_b},
            "orientation": self.orientation,
            "group_sizes": self.group_sizes,
            "et": self.et.to_dict(),
            "dp": self.dp.to_dict(),
            "input": self.input.to_dict(),
            "combined": self.combined.to_dict(),
            "dp_distances": self.dp_distances.to_dict(),
            "drivers": None
            if self.drivers is None
            else [
                {
                    "feature": d.feature,
                    "coefficient": d.coefficient,
                    "wasserstein_vs_random": d.wasserstein_vs_random,
                }
                for d in self.drivers
            ],
            "bootstrap": self.bootstrap,
            "config": self.config,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class _RunOutcome:
    et: AucTestResult
    dp: AucTestResult
    input: AucTestResult
    combined: AucTestResult
    dp_distances: DistanceReport
    coefficients: np.ndarray
    feature_names: tuple


def _explanations(model, X_val, X_te, background, feature_names, config, run_seed):
    variant = config.shap_variant
    prob = config.explain_probability
    if variant == "linear":
        if prob:
            raise FitError(
                "probability-scale explanations need shap_variant 'exact' or 'montecarlo'"
            )
        if not isinstance(model, LinearModel):
            raise FitError("shap_variant 'linear' requires a linear or logistic model")
        means = background.rows.mean(axis=0)
        return (
            shap_linear_interventional(model, X_val, means, feature_names),
            shap_linear_interventional(model, X_te, means, feature_names),
        )
    if variant == "observational":
        if not isinstance(model, LinearModel) or model.n_features != 2:
            raise FitError("shap_variant 'observational' requires a 2-feature linear model")
        means = background.rows.mean(axis=0)
        t21 = conditional_mean_table(X_val[:, 0] - means[0], X_val[:, 1] - means[1])
        t12 = conditional_mean_table(X_val[:, 1] - means[1], X_val[:, 0] - means[0])
        out = []
        for part in (X_val, X_te):
            out.append(
                shap_linear_observational_bivariate(
                    model, part - means[None, :], t21, t12, means=(0.0, 0.0),
                    feature_names=feature_names,
                )
            )
        return tuple(out)
    if variant == "montecarlo":
        return tuple(
            shap_montecarlo(
                model,
                part,
                background,
                n_permutations=config.mc_permutations,
                seed=seed_for(run_seed, i),
                feature_names=feature_names,
                probability_scale=prob,
            )
            for i, part in enumerate((X_val, X_te))
        )
    return tuple(
        shap_exact_enumeration(
            model, part, background, feature_names=feature_names, probability_scale=prob
        )
        for part in (X_val, X_te)
    )


def _inspector_auc_test(spec, F_val, z_val, F_te, z_te, config):
    """Fit one inspector and test its held-out scores against the labels."""
    F_val = np.atleast_2d(np.asarray(F_val, dtype=np.float64))
    F_te = np.atleast_2d(np.asarray(F_te, dtype=np.float64))
    clf = fit_learner(spec, F_val, z_val, binary=True)
    scores = model_predict(clf, F_te)
    result = brunner_munzel_auc_test(
        scores, z_te, alternative=config.alternative, ci_level=config.ci_level
    )
    return clf, result


def _standardized_coefficients(clf, F_val):
    if not isinstance(clf, LinearModel):
        return None
    scale = np.std(np.atleast_2d(F_val), axis=0)
    return clf.coefficients * scale


def _audit_once(ds, perm, config, run_index, model=None, with_explanations=True):
    """One complete audit pass over one shuffle of the filtered data."""
    z_all = ds.z01().astype(np.float64)
    tr, va, te = _chunk_permutation(perm, config.split.fractions)
    X = ds.X
    names = list(ds.feature_names)
    if config.include_protected:
        X = np.column_stack([X, z_all])
        names.append(ds.protected or "protected")
    names = tuple(names)

    if model is None:
        if ds.y is None:
            raise DataError("dataset has no target column; supply a prefitted model")
        model = fit_learner(config.model, X[tr], ds.y[tr], binary=_is_binary(ds.y))

    run_seed = seed_for(config.split.seed, 31, run_index)
    background = BackgroundSample.from_matrix(
        X[va], cap=config.background_cap, seed=run_seed
    )
    z_val, z_te = z_all[va], z_all[te]
    if len(np.unique(z_val)) < 2 or len(np.unique(z_te)) < 2:
        raise DataError("a split part lost one of the two groups; use more data")

    margins_val = model_margin(model, X[va])
    margins_te = model_margin(model, X[te])
    probs_te = model_predict(model, X[te])

    if with_explanations:
        S_val, S_te = _explanations(model, X[va], X[te], background, names, config, run_seed)
        g_et, et = _inspector_auc_test(
            config.inspector, S_val.values, z_val, S_te.values, z_te, config
        )
        coefficients = _standardized_coefficients(g_et, S_val.values)
    else:
        S_val = S_te = None
        g_et, et, coefficients = None, None, None

    _, dp = _inspector_auc_test(
        config.inspector, margins_val[:, None], z_val, margins_te[:, None], z_te, config
    )
    _, inp = _inspector_auc_test(config.inspector, X[va], z_val, X[te], z_te, config)
    comb_val = np.column_stack([margins_val, X[va]])
    comb_te = np.column_stack([margins_te, X[te]])
    _, comb = _inspector_auc_test(config.inspector, comb_val, z_val, comb_te, z_te, config)

    dp_distances = DistanceReport(
        auc_c2st=dp.auc,
        ks_pvalue=ks_two_sample(probs_te[z_te == 0], probs_te[z_te == 1]).p_value,
        wasserstein=wasserstein_1d(probs_te[z_te == 0], probs_te[z_te == 1]),
    )
    return _RunOutcome(
        et=et,
        dp=dp,
        input=inp,
        combined=comb,
        dp_distances=dp_distances,
        coefficients=coefficients,
        feature_names=names,
    ), (S_val, S_te, margins_val, margins_te)


def _filtered_pair(data, pair, min_rows=20):
    ds = data.filter_pair(pair)
    sizes = {
        pair.group_a: int(np.sum(ds.z == "0")),
        pair.group_b: int(np.sum(ds.z == "1")),
    }
    small = [g for g, s in sizes.items() if s < min_rows]
    if small:
        raise DataError(
            f"groups {small} have fewer than {min_rows} rows after filtering"
        )
    return ds, sizes


def equal_treatment_audit(data, pair, config=None, model=None):
    """Run the full equal-treatment audit for one group pair.

    Per bootstrap run: shuffle, split three ways, fit the audited model on
    train (unless one is supplied prefitted), explain the val and test rows
    against a shared background drawn from val, fit the explanation
    inspector on val and AUC-test its scores on test.  The prediction,
    input and combined baseline inspectors ride along on the same splits.
    The headline results come from the first run; per-run AUCs of all four
    inspectors are collected under ``bootstrap``.
    """
    config = config or AuditConfig()
    ds, sizes = _filtered_pair(data, pair)
    perms = bootstrap_indices(ds.n_rows, config.bootstrap_runs, config.split.seed)

    def one(args):
        r, perm = args
        out, _ = _audit_once(ds, perm, config, run_index=r, model=model)
        return out

    outcomes = run_jobs(one, list(enumerate(perms)), workers=config.workers)
    first = outcomes[0]
    drivers = None
    if first.coefficients is not None:
        drivers = tuple(
            DriverRow(feature=name, coefficient=float(c))
            for name, c in zip(first.feature_names, first.coefficients)
        )
    bootstrap = {
        key: [float(getattr(o, key).auc) for o in outcomes]
        for key in ("et", "dp", "input", "combined")
    }
    orientation = f"{pair.group_a}=0,{pair.group_b}=1"
    return AuditReport(
        pair=pair,
        orientation=orientation,
        group_sizes=sizes,
        et=first.et,
        dp=first.dp,
        input=first.input,
        combined=first.combined,
        dp_distances=first.dp_distances,
        drivers=drivers,
        bootstrap=bootstrap,
        config={"tool_version": _pkg_version, **config.to_dict()},
    )


def demographic_parity_audit(data, pair, config=None, model=None):
    """Prediction-distribution audit: inspector on the model score alone,
    plus the KS p-value and Wasserstein distance between the two groups'
    prediction distributions on the test part."""
    config = config or AuditConfig()
    ds, _ = _filtered_pair(data, pair)
    perms = bootstrap_indices(ds.n_rows, 1, config.split.seed)
    out, _ = _audit_once(ds, perms[0], config, run_index=0, model=model,
                         with_explanations=False)
    return out.dp, out.dp_distances


def explain_drivers(report, data, pair, config=None, n_baseline_runs=30):
    """Wasserstein contrast of inspector coefficients against random groups.

    Re-runs the audit over ``config.bootstrap_runs`` shuffles to collect the
    bootstrap distribution of each standardised inspector coefficient, then
    repeats with the protected labels randomly permuted (``n_baseline_runs``
    times).  The per-feature Wasserstein distance between the two coefficient
    distributions scores how far that feature's role is from chance.
    """
    config = config or AuditConfig()
    if config.inspector.kind not in ("linear", "logistic"):
        raise FitError(
            "driver attribution needs a linear inspector; rerun with "
            "inspector 'logistic' or read the coefficient-free report"
        )
    ds, _ = _filtered_pair(data, pair)
    perms = bootstrap_indices(ds.n_rows, config.bootstrap_runs, config.split.seed)

    def coefs_for(ds_run, perm, run_index):
        out, _ = _audit_once(ds_run, perm, config, run_index=run_index)
        return out.coefficients, out.feature_names

    true_rows = []
    names = None
    for r, perm in enumerate(perms):
        c, names = coefs_for(ds, perm, r)
        true_rows.append(c)
    true_coefs = np.asarray(true_rows)

    base_rows = []
    base_perms = bootstrap_indices(ds.n_rows, max(1, n_baseline_runs), seed_for(config.split.seed, 77))
    for b in range(max(1, n_baseline_runs)):
        rng = np.random.default_rng(seed_for(config.split.seed, 78, b))
        shuffled = replace(ds, z=ds.z[rng.permutation(ds.n_rows)])
        c, _ = coefs_for(shuffled, base_perms[b], b)
        base_rows.append(c)
    base_coefs = np.asarray(base_rows)

    point = (
        {d.feature: d.coefficient for d in report.drivers}
        if report is not None and report.drivers
        else {n: float(c) for n, c in zip(names, true_coefs.mean(axis=0))}
    )
    rows = []
    for j, name in enumerate(names):
        dist = wasserstein_1d(true_coefs[:, j], base_coefs[:, j])
        rows.append(
            DriverRow(
                feature=name,
                coefficient=float(point.get(name, true_coefs[:, j].mean())),
                wasserstein_vs_random=float(dist),
            )
        )
    return tuple(rows)


@dataclass(frozen=True)
class SweepCell:
    model: str
    inspector: str
    et_auc: float = None
    et_p: float = None
    error: str = None


def sweep(data, pair, model_grid, inspector_grid, config=None):
    """Cross-product audit of model and inspector specs on shared splits.

    A failing cell records its error and the sweep continues.
    """
    config = config or AuditConfig()
    if not model_grid or not inspector_grid:
        raise DataError("model_grid and inspector_grid must be nonempty")
    cells = []
    for mspec in model_grid:
        for gspec in inspector_grid:
            cfg = replace(config, model=mspec, inspector=gspec)
            try:
                report = equal_treatment_audit(data, pair, cfg)
                cells.append(
                    SweepCell(
                        model=mspec.describe(),
                        inspector=gspec.describe(),
                        et_auc=report.et.auc,
                        et_p=report.et.p_value,
                    )
                )
            except Exception as exc:  # cell failures must not kill the sweep
                cells.append(
                    SweepCell(model=mspec.describe(), inspector=gspec.describe(),
                              error=str(exc))
                )
    return cells


def sweep_to_csv(cells, path):
    lines = ["model,inspector,et_auc,et_p,error"]
    for c in cells:
        auc_s = "" if c.et_auc is None else repr(c.et_auc)
        p_s = "" if c.et_p is None else repr(c.et_p)
        err = "" if c.error is None else c.error.replace(",", ";")
        lines.append(f"{c.model},{c.inspector},{auc_s},{p_s},{err}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class CounterexampleResult:
    name: str
    checks: dict
    passed: bool


def _marginal_feature_tests(S_val, z_val, S_te, z_te, spec, config):
    """Independence test of each explanation column against the labels."""
    results = []
    for j in range(S_val.shape[1]):
        _, res = _inspector_auc_test(
            spec, S_val[:, j][:, None], z_val, S_te[:, j][:, None], z_te, config
        )
        results.append(res)
    return results


def counterexample_suite(seed=0, n=10000, alpha=0.05):
    """Reproduce the three constructions separating the fairness notions.

    lundberg: every per-feature explanation is independent of the group, yet
    the model output pins the group down exactly.  ex42: the prediction
    distribution matches across groups while the explanation distribution
    differs in shape (needs a non-linear inspector).  squared_dependence:
    the conditional-variant explanation of the unused feature is identically
    zero even though the model output depends on it.
    """
    gbt_inspector = LearnerSpec("gbt", {"n_trees": 50})
    split = SplitSpec(seed=seed)
    results = {}

    # -- lundberg ---------------------------------------------------------
    ds = generate(ScenarioSpec(kind="lundberg", n=n, seed=seed))
    model = fit_linear(ds.X, ds.y, link="identity")
    cfg = AuditConfig(
        model=LearnerSpec("linear"),
        inspector=gbt_inspector,
        shap_variant="linear",
        split=split,
        bootstrap_runs=1,
        alternative="greater",
    )
    perm = bootstrap_indices(ds.n_rows, 1, seed)[0]
    tr, va, te = _chunk_permutation(perm, split.fractions)
    means = ds.X[va].mean(axis=0)
    S_val = shap_linear_interventional(model, ds.X[va], means).values
    S_te = shap_linear_interventional(model, ds.X[te], means).values
    z = ds.z01().astype(np.float64)
    marg = _marginal_feature_tests(S_val, z[va], S_te, z[te], gbt_inspector, cfg)
    f_all = model.predict(ds.X)
    at_zero = np.abs(f_all) < 1e-12
    p_z0_given_f0 = float(np.mean(ds.z[at_zero] == "0"))
    checks = {
        "s1_p_value": marg[0].p_value,
        "s2_p_value": marg[1].p_value,
        "p_z0_given_f0": p_z0_given_f0,
    }
    passed = marg[0].p_value >= alpha and marg[1].p_value >= alpha and p_z0_given_f0 == 1.0
    results["lundberg"] = CounterexampleResult("lundberg", checks, bool(passed))

    # -- ex42 -------------------------------------------------------------
    ds = generate(ScenarioSpec(kind="ex42", n=n, seed=seed))
    cfg = AuditConfig(
        model=LearnerSpec("linear"),
        inspector=gbt_inspector,
        shap_variant="linear",
        split=split,
        bootstrap_runs=1,
    )
    report = equal_treatment_audit(ds, GroupPair("0", "1"), cfg)
    dp_res, _ = demographic_parity_audit(
        ds, GroupPair("0", "1"), replace(cfg, inspector=LearnerSpec("logistic"))
    )
    s1 = ds.X[:, 0] - ds.X[:, 0].mean()
    z01 = ds.z01()
    var_z0 = float(np.var(s1[z01 == 0]))
    max_abs_z1 = float(np.max(np.abs(s1[z01 == 1])))
    checks = {
        "dp_p_value": dp_res.p_value,
        "et_auc": report.et.auc,
        "et_p_value": report.et.p_value,
        "s1_var_given_z0": var_z0,
        "s1_max_abs_given_z1": max_abs_z1,
    }
    passed = (
        dp_res.p_value >= alpha
        and report.et.auc >= 0.6
        and report.et.p_value < alpha
        and abs(var_z0 - 1.0) < 0.15
        and max_abs_z1 <= 1.1
    )
    results["ex42"] = CounterexampleResult("ex42", checks, bool(passed))

    # -- squared_dependence ------------------------------------------------
    ds = generate(ScenarioSpec(kind="squared_dependence", n=n - n % 4, seed=seed))
    model = LinearModel(0.0, np.array([1.0, 0.0]), "identity")
    t21 = conditional_mean_table(ds.X[:, 0], ds.X[:, 1])
    t12 = conditional_mean_table(ds.X[:, 1], ds.X[:, 0])
    obs = shap_linear_observational_bivariate(model, ds.X, t21, t12)
    phi2_max = float(np.max(np.abs(obs.values[:, 1])))
    f_vals = model.predict(ds.X)
    z01 = ds.z01()
    ks = ks_two_sample(f_vals[z01 == 0], f_vals[z01 == 1])
    checks = {"max_abs_phi2": phi2_max, "ks_p_value": ks.p_value}
    passed = phi2_max == 0.0 and ks.p_value < 0.01
    results["squared_dependence"] = CounterexampleResult(
        "squared_dependence", checks, bool(passed)
    )
    return results
