"""Rank statistics and distribution distances.

The centrepiece is an AUC-based two-sample test: the empirical AUC of a
classifier score against binary group labels, tested against the null
AUC = 1/2 with the Brunner-Munzel statistic (midranks, Satterthwaite
degrees of freedom).  Also here: an accuracy-based two-sample test used as
a power baseline, the two-sample Kolmogorov-Smirnov test, the 1-D
Wasserstein distance, and the Monte Carlo power-study engine comparing the
AUC test against the accuracy test.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats as spstats

from ._util import rng_for, run_jobs, seed_for
from .models import fit_linear


@dataclass(frozen=True)
class AucTestResult:
    """Empirical AUC with confidence interval and Brunner-Munzel test."""

    auc: float
    ci_low: float
    ci_high: float
    p_value: float
    statistic: float
    n_pos: int
    n_neg: int
    df: float = float("nan")
    alternative: str = "greater"
    degenerate: bool = False

    def reject(self, alpha=0.05):
        return bool(self.p_value < alpha)

    def to_dict(self):
        return {
            "auc": self.auc,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "p_value": self.p_value,
            "statistic": self.statistic,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
            "df": None if np.isnan(self.df) else self.df,
            "alternative": self.alternative,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class DistanceReport:
    """The three demographic-parity distances between two score samples."""

    auc_c2st: float
    ks_pvalue: float
    wasserstein: float

    def to_dict(self):
        return {
            "auc_c2st": self.auc_c2st,
            "ks_pvalue": self.ks_pvalue,
            "wasserstein": self.wasserstein,
        }


@dataclass(frozen=True)
class AccuracyTestResult:
    """Binomial test of held-out accuracy against the majority-class rate."""

    accuracy: float
    baseline: float
    p_value: float
    n: int

    def reject(self, alpha=0.05):
        return bool(self.p_value < alpha)


def _split_by_label(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must have the same length")
    lab = labels.astype(np.float64)
    if not set(np.unique(lab).tolist()) <= {0.0, 1.0}:
        raise ValueError("labels must be 0/1")
    pos = scores[lab == 1.0]
    neg = scores[lab == 0.0]
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("both classes must be present")
    return pos, neg


def auc(scores, labels):
    """Area under the ROC curve with ties counted 1/2.

    Computed from midranks in O(n log n); equal to the fraction of
    (positive, negative) pairs won, counting ties as half a win.
    """
    pos, neg = _split_by_label(scores, labels)
    n1, n0 = len(pos), len(neg)
    ranks = spstats.rankdata(np.concatenate([pos, neg]), method="average")
    # 2 * numerator and denominator stay exact integers in float64
    num2 = 2.0 * ranks[:n1].sum() - n1 * (n1 + 1.0)
    return float(num2 / (2.0 * n1 * n0))


def brunner_munzel_auc_test(scores, labels, alternative="greater", ci_level=0.95):
    """Brunner-Munzel test of H0: AUC = 1/2 for scores against 0/1 labels.

    Midrank-based statistic with Satterthwaite-approximated t degrees of
    freedom; the confidence interval comes from the same variance estimate.
    ``alternative="greater"`` tests H1: AUC > 1/2.  When both within-group
    rank variances vanish (all ties), the result is flagged degenerate and
    reported as a non-rejection instead of dividing by zero.
    """
    if alternative not in ("greater", "two-sided"):
        raise ValueError(f"unknown alternative {alternative!r}")
    pos, neg = _split_by_label(scores, labels)
    ny, nx = len(pos), len(neg)
    if ny < 2 or nx < 2:
        raise ValueError("need at least 2 observations per class")

    combined = np.concatenate([neg, pos])
    ranks = spstats.rankdata(combined, method="average")
    rx = ranks[:nx]
    ry = ranks[nx:]
    rx_in = spstats.rankdata(neg, method="average")
    ry_in = spstats.rankdata(pos, method="average")
    mx = rx.mean()
    my = ry.mean()
    auc_hat = (my - (ny + 1.0) / 2.0) / nx

    vx = np.sum((rx - rx_in - mx + (nx + 1.0) / 2.0) ** 2) / (nx - 1.0)
    vy = np.sum((ry - ry_in - my + (ny + 1.0) / 2.0) ** 2) / (ny - 1.0)
    pooled = nx * vx + ny * vy

    if pooled <= 0.0:
        return AucTestResult(
            auc=float(auc_hat),
            ci_low=0.0,
            ci_high=1.0,
            p_value=1.0,
            statistic=0.0,
            n_pos=ny,
            n_neg=nx,
            alternative=alternative,
            degenerate=True,
        )

    se = float(np.sqrt(pooled)) / (nx * ny)
    statistic = (auc_hat - 0.5) / se
    df = pooled**2 / ((nx * vx) ** 2 / (nx - 1.0) + (ny * vy) ** 2 / (ny - 1.0))
    if alternative == "greater":
        p_value = float(spstats.t.sf(statistic, df))
    else:
        p_value = float(2.0 * spstats.t.sf(abs(statistic), df))
    half = float(spstats.t.ppf(0.5 + ci_level / 2.0, df)) * se
    return AucTestResult(
        auc=float(auc_hat),
        ci_low=float(max(0.0, auc_hat - half)),
        ci_high=float(min(1.0, auc_hat + half)),
        p_value=min(1.0, p_value),
        statistic=float(statistic),
        n_pos=ny,
        n_neg=nx,
        df=float(df),
        alternative=alternative,
    )


def accuracy_c2st(scores, labels, threshold=0.5):
    """Accuracy-based two-sample test, the classical C2ST baseline.

    Thresholded predictions are scored against a binomial null whose success
    rate is the majority-class rate, which corrects for unequal class
    proportions.  One-sided: rejects only for accuracy above the baseline.
    """
    pos, neg = _split_by_label(scores, labels)
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    pred = (scores >= threshold).astype(np.float64)
    correct = int(np.sum(pred == labels))
    n = len(labels)
    baseline = max(len(pos), len(neg)) / n
    p_value = float(spstats.binom.sf(correct - 1, n, baseline))
    return AccuracyTestResult(
        accuracy=correct / n, baseline=baseline, p_value=p_value, n=n
    )


@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float


def ks_two_sample(a, b):
    """Two-sided two-sample Kolmogorov-Smirnov test (exact for small samples,
    asymptotic otherwise)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both samples must be nonempty")
    res = spstats.ks_2samp(a, b)
    return KsResult(statistic=float(res.statistic), p_value=float(res.pvalue))


def wasserstein_1d(a, b):
    """First Wasserstein distance between two empirical distributions.

    L1 distance between the empirical quantile functions, computed as the
    area between the two empirical CDFs on the merged support grid; handles
    unequal sample sizes.
    """
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both samples must be nonempty")
    grid = np.sort(np.concatenate([a, b]))
    deltas = np.diff(grid)
    ca = np.searchsorted(a, grid[:-1], side="right") / len(a)
    cb = np.searchsorted(b, grid[:-1], side="right") / len(b)
    return float(np.sum(np.abs(ca - cb) * deltas))


@dataclass(frozen=True)
class PowerPoint:
    mu: float
    power_auc: float
    power_accuracy: float
    runs: int
    n: int


DEFAULT_MU_GRID = (0.0, 0.005, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08, 0.1)

_POWER_COV_CHOL = np.linalg.cholesky(np.array([[1.0, 0.5], [0.5, 1.0]]))


def sample_shifted_gaussians(mu, n, rng):
    """Labels ~ Ber(1/2); features bivariate normal with correlation 1/2,
    mean (+mu, +mu) for positives and (-mu, -mu) for negatives."""
    labels = rng.integers(0, 2, size=n).astype(np.float64)
    X = rng.standard_normal((n, 2)) @ _POWER_COV_CHOL.T
    X = X + (2.0 * labels - 1.0)[:, None] * mu
    return X, labels


def _power_run(args):
    mu, n, alpha, seed = args
    rng = np.random.default_rng(seed)
    X, lab = sample_shifted_gaussians(mu, n, rng)
    half = n // 2
    Xtr, ytr = X[:half], lab[:half]
    Xte, yte = X[half:], lab[half:]
    if len(np.unique(ytr)) < 2 or len(np.unique(yte)) < 2:
        return (False, False)
    clf = fit_linear(Xtr, ytr, link="logistic", l2=1e-6)
    scores = clf.predict(Xte)
    rej_auc = brunner_munzel_auc_test(scores, yte, alternative="greater").reject(alpha)
    rej_acc = accuracy_c2st(scores, yte).reject(alpha)
    return (rej_auc, rej_acc)


def power_study(mu_grid=None, n=1000, runs=1000, seed=0, alpha=0.05, workers=1):
    """Rejection rates of the AUC test and the accuracy test per mean shift.

    Each run draws fresh data, fits a logistic-regression classifier on one
    half and applies both two-sample tests to the held-out half at level
    ``alpha``.  Per-run seeds are derived from the master seed, so results
    are reproducible and worker-count-invariant.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    mus = DEFAULT_MU_GRID if mu_grid is None else tuple(float(m) for m in mu_grid)
    points = []
    for i, mu in enumerate(mus):
        jobs = [(mu, n, alpha, seed_for(seed, i, r)) for r in range(runs)]
        outcomes = run_jobs(_power_run, jobs, workers=workers)
        rej = np.asarray(outcomes, dtype=np.float64)
        points.append(
            PowerPoint(
                mu=mu,
                power_auc=float(rej[:, 0].mean()),
                power_accuracy=float(rej[:, 1].mean()),
                runs=runs,
                n=n,
            )
        )
    return points


def power_study_to_csv(points, path):
    """Plot-ready CSV with header mu,power_auc,power_accuracy,runs,n."""
    lines = ["mu,power_auc,power_accuracy,runs,n"]
    for p in points:
        lines.append(f"{p.mu},{p.power_auc},{p.power_accuracy},{p.runs},{p.n}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def permutation_auc_pvalue(scores, labels, n_permutations=1000, seed=0):
    """Permutation-null p-value for H1: AUC > 1/2.

    Slow reference implementation used to validate the Brunner-Munzel test;
    shuffles labels and recomputes the rank AUC.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    observed = auc(scores, labels)
    rng = rng_for(seed, 7151)
    n1 = int(labels.sum())
    ranks = spstats.rankdata(scores, method="average")
    hits = 0
    chunk = max(1, min(n_permutations, 2_000_000 // max(1, len(scores))))
    done = 0
    while done < n_permutations:
        k = min(chunk, n_permutations - done)
        u = rng.random((k, len(scores)))
        pos_ranks = np.take_along_axis(
            np.broadcast_to(ranks, (k, len(ranks))),
            np.argsort(u, axis=1)[:, :n1],
            axis=1,
        )
        perm_auc = (pos_ranks.sum(axis=1) - n1 * (n1 + 1.0) / 2.0) / (
            n1 * (len(scores) - n1)
        )
        hits += int(np.sum(perm_auc >= observed - 1e-12))
        done += k
    return (hits + 1.0) / (n_permutations + 1.0)
