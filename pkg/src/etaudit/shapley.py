"""Shapley-value explanation functions.

Four estimators produce an :class:`ExplanationMatrix`:

* the closed form for linear models under the marginal (interventional)
  value function, ``beta_j * (x_j - mean_j)``;
* the bivariate closed form under the conditional (observational) value
  function, which needs empirical conditional-mean tables;
* exact subset enumeration of the marginal value function for arbitrary
  models (any object with a ``predict``-like callable), feasible up to 20
  features;
* permutation Monte Carlo, an unbiased sampler of the enumeration value
  with per-cell standard errors.

For logistic-link models the attributions explain the raw margin score, so
the efficiency identity (attributions sum to score minus base value) holds
exactly; pass ``probability_scale=True`` where supported to explain the
probability instead.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, FitError
from .models import LinearModel, margin as model_margin

MAX_ENUMERATION_FEATURES = 20


def scoring_function(model, probability_scale=False):
    """Callable row-scorer for a model object or plain callable."""
    if callable(model) and not hasattr(model, "predict"):
        return model
    if probability_scale:
        return model.predict
    return lambda X: model_margin(model, X)


@dataclass(frozen=True, eq=False)
class BackgroundSample:
    """Reference rows carrying the marginal distribution of the features."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.rows, dtype=np.float64))
        if rows.shape[0] < 1:
            raise DataError("background sample must contain at least one row")
        object.__setattr__(self, "rows", rows)

    @property
    def m(self):
        return self.rows.shape[0]

    @classmethod
    def from_matrix(cls, X, cap=512, seed=0):
        """Uniform seeded subsample of up to ``cap`` rows."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if cap is not None and X.shape[0] > cap:
            idx = np.random.default_rng(seed).choice(X.shape[0], size=cap, replace=False)
            X = X[np.sort(idx)]
        return cls(rows=X)


def _as_background(background):
    if isinstance(background, BackgroundSample):
        return background
    return BackgroundSample(rows=background)


@dataclass(frozen=True, eq=False)
class ExplanationMatrix:
    """Per-instance, per-feature attributions plus the base value.

    Every exact-variant row satisfies efficiency: the row sum equals the
    model score minus ``base_value`` up to float precision. Monte Carlo rows
    carry a per-cell standard error instead.
    """

    values: np.ndarray
    base_value: float
    feature_names: tuple
    variant: str
    stderr: np.ndarray = None

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=np.float64))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "base_value", float(self.base_value))
        if len(self.feature_names) != values.shape[1]:
            raise DataError("feature_names length does not match value columns")
        if self.stderr is not None:
            se = np.atleast_2d(np.asarray(self.stderr, dtype=np.float64))
            if se.shape != values.shape:
                raise DataError("stderr shape does not match values")
            object.__setattr__(self, "stderr", se)

    @property
    def n_rows(self):
        return self.values.shape[0]

    def row_sums(self):
        return self.values.sum(axis=1)

    def to_csv(self, path):
        """One row per instance: attribution columns then base_value."""
        header = ",".join(list(self.feature_names) + ["base_value"])
        lines = [header]
        for row in self.values:
            cells = [format(v, ".17g") for v in row] + [format(self.base_value, ".17g")]
            lines.append(",".join(cells))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    def to_json(self):
        doc = {
            "variant": self.variant,
            "feature_names": list(self.feature_names),
            "base_value": self.base_value,
            "values": self.values.tolist(),
        }
        if self.stderr is not None:
            doc["stderr"] = self.stderr.tolist()
        return json.dumps(doc, indent=2)


def default_feature_names(p):
    return tuple(f"f{j}" for j in range(p))


def shap_linear_interventional(model, X, means, feature_names=None):
    """Closed-form marginal attributions of a linear model.

    values[i, j] = beta_j * (x_ij - means_j); the base value is the model
    margin at the background means.  For logistic-link models this explains
    the raw linear score.
    """
    if not isinstance(model, LinearModel):
        raise FitError("closed-form explanations require a LinearModel")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    means = np.asarray(means, dtype=np.float64)
    if means.shape != (model.n_features,):
        raise FitError(f"means must have length {model.n_features}")
    if X.shape[1] != model.n_features:
        raise FitError(f"X has {X.shape[1]} columns, model has {model.n_features}")
    values = model.coefficients[None, :] * (X - means[None, :])
    base = model.intercept + float(model.coefficients @ means)
    names = feature_names or default_feature_names(model.n_features)
    return ExplanationMatrix(values, base, names, "interventional")


@dataclass(frozen=True, eq=False)
class ConditionalMeanTable:
    """Empirical lookup v -> E[other | conditioner = v].

    Exact tables map each observed distinct value; binned tables map value
    ranges (left edges in ``keys``).  Looking up a value absent from an
    exact table is an error.
    """

    keys: np.ndarray
    means: np.ndarray
    binned: bool = False

    def __post_init__(self):
        object.__setattr__(self, "keys", np.asarray(self.keys, dtype=np.float64))
        object.__setattr__(self, "means", np.asarray(self.means, dtype=np.float64))
        if len(self.keys) != len(self.means) or len(self.keys) == 0:
            raise DataError("conditional mean table needs matching, nonempty keys/means")

    def lookup(self, values):
        values = np.asarray(values, dtype=np.float64)
        if self.binned:
            idx = np.searchsorted(self.keys, values, side="right") - 1
            idx = np.clip(idx, 0, len(self.means) - 1)
            return self.means[idx]
        idx = np.searchsorted(self.keys, values)
        idx_clipped = np.clip(idx, 0, len(self.keys) - 1)
        missing = (idx >= len(self.keys)) | (self.keys[idx_clipped] != values)
        if np.any(missing):
            bad = values[np.nonzero(missing)[0][0]]
            raise DataError(f"conditioning value {bad!r} absent from conditional mean table")
        return self.means[idx]

    @classmethod
    def constant(cls, value):
        return cls(keys=np.array([-np.inf]), means=np.array([float(value)]), binned=True)


def conditional_mean_table(conditioner, target, max_exact=64, bins=16):
    """Empirical conditional-mean table E[target | conditioner].

    Uses exact grouping when the conditioner has at most ``max_exact``
    distinct values, otherwise quantile bins (empty bins fall back to the
    global mean).
    """
    conditioner = np.asarray(conditioner, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    uniq, inverse = np.unique(conditioner, return_inverse=True)
    if len(uniq) <= max_exact:
        sums = np.bincount(inverse, weights=target, minlength=len(uniq))
        counts = np.bincount(inverse, minlength=len(uniq))
        return ConditionalMeanTable(keys=uniq, means=sums / counts, binned=False)
    edges = np.quantile(conditioner, np.linspace(0.0, 1.0, bins + 1))[:-1]
    edges = np.unique(edges)
    idx = np.clip(np.searchsorted(edges, conditioner, side="right") - 1, 0, len(edges) - 1)
    sums = np.bincount(idx, weights=target, minlength=len(edges))
    counts = np.bincount(idx, minlength=len(edges))
    means = np.where(counts > 0, sums / np.maximum(counts, 1), target.mean())
    return ConditionalMeanTable(keys=edges, means=means, binned=True)


def shap_linear_observational_bivariate(
    model, X, mean_x2_given_x1, mean_x1_given_x2, means=(0.0, 0.0), feature_names=None
):
    """Conditional-expectation attributions for a two-feature linear model.

    phi_1 = (b2/2) E[X2 | x1] + b1 x1 - (b1/2) E[X1 | x2]
    phi_2 = (b1/2) E[X1 | x2] + b2 x2 - (b2/2) E[X2 | x1]

    The two attributions always sum to b1 x1 + b2 x2, so efficiency against
    the reported base value holds exactly when both feature means are zero
    (centre the data first otherwise).
    """
    if not isinstance(model, LinearModel):
        raise FitError("observational closed form requires a LinearModel")
    if model.n_features != 2:
        raise FitError("observational closed form is only available for 2 features")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != 2:
        raise FitError("X must have exactly 2 columns")
    b1, b2 = (float(c) for c in model.coefficients)
    e2 = mean_x2_given_x1.lookup(X[:, 0])
    e1 = mean_x1_given_x2.lookup(X[:, 1])
    phi1 = 0.5 * b2 * e2 + b1 * X[:, 0] - 0.5 * b1 * e1
    phi2 = 0.5 * b1 * e1 + b2 * X[:, 1] - 0.5 * b2 * e2
    base = model.intercept + b1 * float(means[0]) + b2 * float(means[1])
    names = feature_names or default_feature_names(2)
    return ExplanationMatrix(
        np.column_stack([phi1, phi2]), base, names, "observational-linear"
    )


def _subset_masks(p):
    masks = np.arange(1 << p, dtype=np.uint32)
    bits = ((masks[:, None] >> np.arange(p, dtype=np.uint32)) & 1).astype(bool)
    return bits


def _shapley_weights(p):
    # w(t) = t! (p - t - 1)! / p! = 1 / (p * C(p-1, t)), exact in float64
    return np.array([1.0 / (p * math.comb(p - 1, t)) for t in range(p)])


def shap_exact_enumeration(
    model, X, background, feature_names=None, probability_scale=False, chunk_rows=None
):
    """Exact marginal Shapley values by enumerating all feature subsets.

    The value of a subset is the background-mean model score with the
    subset's features pinned to the explained row.  Cost grows as 2^p model
    evaluations per row; more than 20 features is rejected (use the Monte
    Carlo estimator instead).
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    bg = _as_background(background).rows
    n, p = X.shape
    if bg.shape[1] != p:
        raise FitError("background and X column counts differ")
    if p > MAX_ENUMERATION_FEATURES:
        raise FitError(
            f"{p} features exceeds the 2^p enumeration limit of "
            f"{MAX_ENUMERATION_FEATURES}; use shap_montecarlo instead"
        )
    score = scoring_function(model, probability_scale)
    m = bg.shape[0]
    n_masks = 1 << p
    bits = _subset_masks(p)
    weights = _shapley_weights(p)
    popcount = bits.sum(axis=1)

    # for every j: masks not containing j, paired with mask | bit_j
    mask_ids = np.arange(n_masks, dtype=np.int64)
    without = [mask_ids[~bits[:, j]] for j in range(p)]
    with_j = [w + (1 << j) for j, w in enumerate(without)]
    pair_w = [weights[popcount[w]] for w in without]

    if chunk_rows is None:
        chunk_rows = max(1, int(2_000_000 // max(1, n_masks * m)))
    values = np.empty((n, p), dtype=np.float64)
    base = None
    for start in range(0, n, chunk_rows):
        rows = X[start : start + chunk_rows]
        k = rows.shape[0]
        mixed = np.where(
            bits[None, :, None, :], rows[:, None, None, :], bg[None, None, :, :]
        )
        scored = np.asarray(score(mixed.reshape(k * n_masks * m, p)), dtype=np.float64)
        vals = scored.reshape(k, n_masks, m).mean(axis=2)
        if base is None:
            base = float(vals[0, 0])
        for j in range(p):
            diffs = vals[:, with_j[j]] - vals[:, without[j]]
            values[start : start + k, j] = diffs @ pair_w[j]
    names = feature_names or default_feature_names(p)
    return ExplanationMatrix(values, base, names, "interventional")


def shap_montecarlo(
    model,
    X,
    background,
    n_permutations,
    seed=0,
    feature_names=None,
    probability_scale=False,
):
    """Permutation-sampling Shapley estimate with per-cell standard errors.

    Each sampled permutation fills in the explained row's features one at a
    time over the full background, crediting every feature its marginal
    change in the background-mean score.  Contributions along a permutation
    telescope, so row sums satisfy efficiency exactly; averaging over
    permutations is unbiased for the enumeration value.  Deterministic for a
    fixed seed, independent of worker chunking.
    """
    if n_permutations < 1:
        raise FitError("n_permutations must be >= 1")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    bg = _as_background(background).rows
    n, p = X.shape
    if bg.shape[1] != p:
        raise FitError("background and X column counts differ")
    score = scoring_function(model, probability_scale)
    m = bg.shape[0]
    base = float(np.mean(np.asarray(score(bg), dtype=np.float64)))

    values = np.empty((n, p), dtype=np.float64)
    stderr = np.zeros((n, p), dtype=np.float64)
    R = int(n_permutations)
    rows_idx = np.arange(R)
    for i in range(n):
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), 90211, i)))
        perms = np.argsort(rng.random((R, p)), axis=1)
        cur = np.broadcast_to(bg, (R, m, p)).copy()
        v_prev = np.full(R, base)
        contrib = np.empty((R, p), dtype=np.float64)
        for k in range(p):
            j = perms[:, k]
            cur[rows_idx, :, j] = X[i, j][:, None]
            v = np.asarray(score(cur.reshape(R * m, p)), dtype=np.float64)
            v = v.reshape(R, m).mean(axis=1)
            contrib[rows_idx, j] = v - v_prev
            v_prev = v
        values[i] = contrib.mean(axis=0)
        if R > 1:
            stderr[i] = contrib.std(axis=0, ddof=1) / math.sqrt(R)
    names = feature_names or default_feature_names(p)
    return ExplanationMatrix(values, base, names, "montecarlo", stderr=stderr)


@dataclass(frozen=True)
class VariantComparison:
    """Cell-level and downstream-AUC differences between the marginal and
    conditional explanation variants of one linear model."""

    max_abs_cell_diff: float
    auc_interventional: float
    auc_observational: float
    auc_abs_diff: float
    auc_rel_diff: float


def compare_variants(model, X, z, background=None, bins=16, split_seed=0, cond_tables=None):
    """Compare the two linear-model explanation variants end to end.

    Data is centred at the background means so the observational closed form
    applies; conditional-mean tables default to empirical estimates from the
    centred data.  Both explanation matrices feed identical downstream
    inspectors (logistic regression on a shared half split predicting ``z``)
    and the held-out AUCs are compared.
    """
    from .models import fit_linear  # local import keeps module deps one-way

    if not isinstance(model, LinearModel) or model.n_features != 2:
        raise FitError("variant comparison requires a 2-feature LinearModel")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    z = np.asarray(z, dtype=np.float64)
    bg = X if background is None else _as_background(background).rows
    means = bg.mean(axis=0)
    Xc = X - means[None, :]

    inter = shap_linear_interventional(model, X, means)
    if cond_tables is None:
        t21 = conditional_mean_table(Xc[:, 0], Xc[:, 1], bins=bins)
        t12 = conditional_mean_table(Xc[:, 1], Xc[:, 0], bins=bins)
    else:
        t21, t12 = cond_tables
    obs = shap_linear_observational_bivariate(model, Xc, t21, t12, means=(0.0, 0.0))

    cell_diff = float(np.max(np.abs(inter.values - obs.values)))

    from .stats import auc as rank_auc

    n = X.shape[0]
    perm = np.random.default_rng(split_seed).permutation(n)
    half = n // 2
    tr, te = perm[:half], perm[half:]
    if len(np.unique(z[tr])) < 2 or len(np.unique(z[te])) < 2:
        raise FitError("both groups must appear in both halves of the comparison split")
    aucs = []
    for mat in (inter, obs):
        clf = fit_linear(mat.values[tr], z[tr], link="logistic")
        aucs.append(rank_auc(clf.predict(mat.values[te]), z[te]))
    abs_diff = abs(aucs[0] - aucs[1])
    rel = abs_diff / max(aucs[0], 1e-12)
    return VariantComparison(
        max_abs_cell_diff=cell_diff,
        auc_interventional=float(aucs[0]),
        auc_observational=float(aucs[1]),
        auc_abs_diff=float(abs_diff),
        auc_rel_diff=float(rel),
    )
