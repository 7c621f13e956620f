"""Seeded generators for the synthetic audit scenarios and counterexamples.

Every generator is a pure function of its spec: the same spec returns the
same dataset, byte for byte.  The constructed identities (e.g. the
protected group being the sign of a latent coupled feature) hold row-wise
exactly; latent variables and the raw target probability are kept as extra
diagnostic columns.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._util import seed_for, sigmoid
from .data import GroupPair, TabularDataset
from .errors import DataError

SCENARIO_KINDS = (
    "indirect",
    "uninformative",
    "five_feature_indirect",
    "five_feature_uninformative",
    "ex42",
    "lundberg",
    "squared_dependence",
    "power_gaussians",
)

_GAMMA_KINDS = (
    "indirect",
    "uninformative",
    "five_feature_indirect",
    "five_feature_uninformative",
)


@dataclass(frozen=True)
class ScenarioSpec:
    """Which construction to generate, its size and parameters."""

    kind: str
    n: int = 10000
    gamma: float = None
    mu: float = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise DataError(f"unknown scenario kind {self.kind!r}")
        if self.n < 1:
            raise DataError("n must be >= 1")
        if self.kind in _GAMMA_KINDS:
            if self.gamma is None or not (0.0 <= self.gamma < 1.0):
                raise DataError(f"kind {self.kind!r} requires gamma in [0, 1)")
        if self.kind == "power_gaussians" and self.mu is None:
            raise DataError("kind 'power_gaussians' requires mu")
        if self.kind == "squared_dependence" and (self.n < 4 or self.n % 4 != 0):
            raise DataError("squared_dependence requires n to be a positive multiple of 4")


def _labels(mask):
    return np.where(mask, "1", "0").astype(object)


def _coupled_pair(rng, n, gamma):
    """(driver, latent) bivariate standard normal with correlation gamma,
    sampled through the Cholesky factor."""
    u = rng.standard_normal((n, 2))
    latent = u[:, 0]
    driver = gamma * latent + math.sqrt(1.0 - gamma * gamma) * u[:, 1]
    return driver, latent


def _gen_scenario3(spec):
    rng = np.random.default_rng(spec.seed)
    x1 = rng.standard_normal(spec.n)
    x2 = rng.standard_normal(spec.n)
    x3, x4 = _coupled_pair(rng, spec.n, spec.gamma)
    z = x4 > 0
    eta = x1 + x2 + x3 if spec.kind == "indirect" else x1 + x2
    prob = sigmoid(eta)
    y = (rng.random(spec.n) < prob).astype(np.float64)
    meta = {"realized_protected_corr": _corr(x3, z.astype(np.float64))}
    return TabularDataset(
        feature_names=("x1", "x2", "x3"),
        X=np.column_stack([x1, x2, x3]),
        y=y,
        z=_labels(z),
        target="y",
        protected="z",
        extras={"x4": x4, "y_prob": prob},
        meta=meta,
    )


def _gen_five_feature(spec):
    rng = np.random.default_rng(spec.seed)
    n, g = spec.n, spec.gamma
    x1 = rng.standard_normal(n)
    x2 = rng.standard_normal(n)
    u = rng.standard_normal((n, 3))
    x5 = u[:, 0]
    x3 = g * x5 + math.sqrt(1.0 - g * g) * u[:, 1]
    half_g = 0.5 * g
    x4 = half_g * x5 + math.sqrt(1.0 - half_g * half_g) * u[:, 2]
    z = x5 > 0
    if spec.kind == "five_feature_indirect":
        eta = x1 + x2 + x3 + x4
    else:
        eta = x1 + x2
    prob = sigmoid(eta)
    y = (rng.random(n) < prob).astype(np.float64)
    meta = {
        "realized_protected_corr": _corr(x3, z.astype(np.float64)),
        "realized_protected_corr_x4": _corr(x4, z.astype(np.float64)),
    }
    return TabularDataset(
        feature_names=("x1", "x2", "x3", "x4"),
        X=np.column_stack([x1, x2, x3, x4]),
        y=y,
        z=_labels(z),
        target="y",
        protected="z",
        extras={"x5": x5, "y_prob": prob},
        meta=meta,
    )


def _gen_ex42(spec):
    """Groups swap which of two differently shaped variables lands in which
    feature: a uniform of width 2 and a unit normal, both centred.  The sum
    of the features is independent of the group, but the per-feature
    distributions differ in shape between groups (same mean and nearly the
    same variance), so only a non-linear inspector can tell them apart.
    The raw uncentred draws (uniform on (-3,-1), normal at 2) are kept as
    extras; the features use their centred versions.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    z = rng.integers(0, 2, size=n).astype(bool)
    a = rng.uniform(-3.0, -1.0, size=n)
    b = rng.normal(2.0, 1.0, size=n)
    ac = a + 2.0
    bc = b - 2.0
    x1 = np.where(z, ac, bc)
    x2 = np.where(z, bc, ac)
    return TabularDataset(
        feature_names=("x1", "x2"),
        X=np.column_stack([x1, x2]),
        y=x1 + x2,
        z=_labels(z),
        target="y",
        protected="z",
        extras={"a": a, "b": b},
    )


def _gen_lundberg(spec):
    """Two fair coins; the model is their difference and the group marks
    rows where the coins disagree, so the group is pinned down by the model
    output while each coin alone is independent of the group."""
    rng = np.random.default_rng(spec.seed)
    x1 = rng.integers(0, 2, size=spec.n).astype(np.float64)
    x2 = rng.integers(0, 2, size=spec.n).astype(np.float64)
    z = x1 != x2
    return TabularDataset(
        feature_names=("x1", "x2"),
        X=np.column_stack([x1, x2]),
        y=x1 - x2,
        z=_labels(z),
        target="y",
        protected="z",
    )


def _gen_squared(spec):
    """x1 balanced over {1, -1, 2, -2} (exact counts), x2 = x1 squared.

    The balanced realisation makes the empirical conditional mean of x1
    given x2 exactly zero, which the observational counterexample needs.
    """
    rng = np.random.default_rng(spec.seed)
    reps = spec.n // 4
    x1 = np.tile(np.array([1.0, -1.0, 2.0, -2.0]), reps)
    x1 = x1[rng.permutation(spec.n)]
    x2 = x1 * x1
    z = x2 == 4.0
    return TabularDataset(
        feature_names=("x1", "x2"),
        X=np.column_stack([x1, x2]),
        y=x1.copy(),
        z=_labels(z),
        target="y",
        protected="z",
    )


def _gen_power(spec):
    from .stats import sample_shifted_gaussians

    rng = np.random.default_rng(spec.seed)
    X, labels = sample_shifted_gaussians(spec.mu, spec.n, rng)
    return TabularDataset(
        feature_names=("x1", "x2"),
        X=X,
        y=labels,
        z=_labels(labels > 0.5),
        target="y",
        protected="z",
    )


_GENERATORS = {
    "indirect": _gen_scenario3,
    "uninformative": _gen_scenario3,
    "five_feature_indirect": _gen_five_feature,
    "five_feature_uninformative": _gen_five_feature,
    "ex42": _gen_ex42,
    "lundberg": _gen_lundberg,
    "squared_dependence": _gen_squared,
    "power_gaussians": _gen_power,
}


def _corr(a, b):
    if np.std(a) == 0 or np.std(b) == 0:
        return 0.0
    return float(np.corrcoef(a, b)[0, 1])


def generate(spec):
    """Materialise a scenario spec as a TabularDataset.

    The binary target is a Bernoulli draw of the scenario's probability; the
    probability itself is kept in the ``y_prob`` extra column where it
    exists.  Gamma is the Gaussian correlation of the coupled pair; the
    realised correlation with the thresholded protected group is reported in
    ``meta`` rather than silently reconciled.
    """
    from dataclasses import replace

    ds = _GENERATORS[spec.kind](spec)
    meta = dict(ds.meta)
    meta.update(
        {"kind": spec.kind, "n": spec.n, "gamma": spec.gamma, "mu": spec.mu, "seed": spec.seed}
    )
    return replace(ds, meta=meta)


@dataclass(frozen=True)
class GammaPoint:
    """Audit outcomes of all four inspectors at one correlation setting."""

    gamma: float
    et_auc: float
    et_p: float
    dp_auc: float
    dp_p: float
    input_auc: float
    input_p: float
    combined_auc: float
    combined_p: float
    realized_corr: float


def gamma_sweep(kind, gammas, n, seed, config):
    """One full four-inspector audit per correlation value.

    Each point draws a fresh dataset with a seed derived from (seed, index)
    and audits the "0" vs "1" group pair under ``config``.
    """
    from .inspector import equal_treatment_audit

    if kind not in _GAMMA_KINDS:
        raise DataError(f"gamma_sweep supports kinds {_GAMMA_KINDS}, got {kind!r}")
    points = []
    for i, g in enumerate(gammas):
        ds = generate(ScenarioSpec(kind=kind, n=n, gamma=float(g), seed=seed_for(seed, i)))
        report = equal_treatment_audit(ds, GroupPair("0", "1"), config)
        points.append(
            GammaPoint(
                gamma=float(g),
                et_auc=report.et.auc,
                et_p=report.et.p_value,
                dp_auc=report.dp.auc,
                dp_p=report.dp.p_value,
                input_auc=report.input.auc,
                input_p=report.input.p_value,
                combined_auc=report.combined.auc,
                combined_p=report.combined.p_value,
                realized_corr=float(ds.meta.get("realized_protected_corr", float("nan"))),
            )
        )
    return points


def gamma_sweep_to_csv(points, path):
    header = (
        "gamma,et_auc,et_p,dp_auc,dp_p,input_auc,input_p,"
        "combined_auc,combined_p,realized_corr"
    )
    lines = [header]
    for p in points:
        lines.append(
            f"{p.gamma},{p.et_auc},{p.et_p},{p.dp_auc},{p.dp_p},{p.input_auc},"
            f"{p.input_p},{p.combined_auc},{p.combined_p},{p.realized_corr}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
