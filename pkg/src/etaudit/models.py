"""In-house supervised learners used both as audited models and as inspectors.

Three model families: ridge-regularised linear/logistic regression (Newton
solver), a CART decision tree, and stagewise gradient boosted trees.  All
fits are deterministic given (data, hyperparameters) and every model
serialises to a versioned JSON document.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from ._util import sigmoid
from .errors import FitError

MODEL_FORMAT_VERSION = 1

_LOGISTIC_TOL = 1e-8
_LOGISTIC_MAX_ITER = 500


def _as_matrix(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    return X


def _check_binary(y, what):
    vals = set(np.unique(y).tolist())
    if not vals <= {0.0, 1.0}:
        raise FitError(f"{what} requires a binary 0/1 target, got values {sorted(vals)[:5]}")


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Affine model ``link(b0 + x . b)`` with identity or logistic link."""

    intercept: float
    coefficients: np.ndarray
    link: str = "identity"

    def __post_init__(self):
        if self.link not in ("identity", "logistic"):
            raise FitError(f"unknown link {self.link!r}")
        object.__setattr__(
            self, "coefficients", np.asarray(self.coefficients, dtype=np.float64)
        )
        object.__setattr__(self, "intercept", float(self.intercept))

    @property
    def n_features(self):
        return len(self.coefficients)

    def margin(self, X):
        X = _as_matrix(X)
        if X.shape[1] != self.n_features:
            raise FitError(f"model expects {self.n_features} features, got {X.shape[1]}")
        return self.intercept + X @ self.coefficients

    def predict(self, X):
        t = self.margin(X)
        return sigmoid(t) if self.link == "logistic" else t


def fit_linear(X, y, link="identity", l2=None):
    """Fit a linear (ridge OLS) or logistic (Newton) model.

    identity link minimises ||y - b0 - Xb||^2 + l2 ||b||^2 (intercept
    unpenalised); l2 defaults to 0 and requires n >= p + 1.  logistic link
    maximises the l2-penalised log-likelihood (default ridge 1e-6) by
    Newton-Raphson on internally standardised features, iterating until the
    mean-gradient norm drops below 1e-8 or 500 iterations; coefficients are
    reported on the original feature scale.  The logistic penalty applies to
    the original-scale coefficients (standardisation only preconditions the
    solver), so a feature carrying its signal at a tiny scale cannot buy an
    arbitrarily large raw coefficient.
    """
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != len(y):
        raise FitError("X and y row counts differ")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise FitError("NaN or infinite values in training data")
    n, p = X.shape

    if link == "identity":
        l2 = 0.0 if l2 is None else float(l2)
        if l2 == 0.0 and n < p + 1:
            raise FitError(f"OLS needs n >= p + 1 ({n} rows, {p} features); set l2 > 0")
        A = np.column_stack([np.ones(n), X])
        G = A.T @ A
        if l2 > 0.0:
            G[1:, 1:] += l2 * np.eye(p)
        try:
            w = np.linalg.solve(G, A.T @ y)
        except np.linalg.LinAlgError:
            raise FitError("singular normal equations; add ridge with l2 > 0") from None
        if not np.all(np.isfinite(w)):
            raise FitError("singular normal equations; add ridge with l2 > 0")
        return LinearModel(w[0], w[1:], "identity")

    if link != "logistic":
        raise FitError(f"unknown link {link!r}")
    _check_binary(y, "logistic link")
    l2 = 1e-6 if l2 is None else float(l2)

    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd == 0.0, 1.0, sd)
    Xs = (X - mu) / sd
    A = np.column_stack([np.ones(n), Xs])
    w = np.zeros(p + 1)
    # penalty l2 * ||coef_raw||^2 expressed in standardised coordinates
    pen = np.concatenate([[0.0], l2 / (sd * sd)])

    def objective(wv):
        t = A @ wv
        # log(1 + exp(-|t|)) form avoids overflow
        nll = np.sum(np.logaddexp(0.0, t) - y * t)
        return nll + 0.5 * np.sum(pen * wv * wv)

    obj = objective(w)
    for _ in range(_LOGISTIC_MAX_ITER):
        t = A @ w
        prob = sigmoid(t)
        grad = A.T @ (prob - y) + pen * w
        if np.max(np.abs(grad)) / n < _LOGISTIC_TOL:
            break
        wgt = prob * (1.0 - prob)
        H = (A * wgt[:, None]).T @ A + np.diag(pen)
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            raise FitError("singular Hessian in logistic fit; increase l2") from None
        # backtracking keeps the penalised deviance non-increasing
        scale = 1.0
        for _ in range(40):
            cand = w - scale * step
            cand_obj = objective(cand)
            if cand_obj <= obj + 1e-12:
                break
            scale *= 0.5
        w = w - scale * step
        obj = objective(w)

    coef = w[1:] / sd
    intercept = w[0] - float(np.sum(w[1:] * mu / sd))
    return LinearModel(intercept, coef, "logistic")


def _feature_columns(X):
    return [np.ascontiguousarray(X[:, j]) for j in range(X.shape[1])]


def _tree_reduce(tree, cols, leaf_value):
    """Evaluate a tree by nested np.where over contiguous feature columns.

    Pure sequential memory passes, which beats index-gather descent by a
    wide margin on bandwidth-limited hosts.  ``leaf_value(node)`` maps a
    leaf node id to the scalar it contributes.
    """

    def rec(node):
        if tree.feature[node] < 0:
            return leaf_value(node)
        cond = cols[tree.feature[node]] <= tree.threshold[node]
        lv = rec(int(tree.left[node]))
        rv = rec(int(tree.right[node]))
        if isinstance(lv, float) and isinstance(rv, float) and lv == rv:
            return lv
        return np.where(cond, lv, rv)

    out = rec(0)
    if isinstance(out, float):
        out = np.full(len(cols[0]) if cols else 0, out)
    return out


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """CART tree stored as flat node arrays; feature == -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    max_depth: int
    task: str = "regression"
    n_features: int = 0

    def _columns(self, X):
        X = _as_matrix(X)
        if X.shape[1] != self.n_features:
            raise FitError(f"tree expects {self.n_features} features, got {X.shape[1]}")
        return _feature_columns(X)

    def apply(self, X):
        """Leaf node index for each row."""
        out = _tree_reduce(self, self._columns(X), lambda node: float(node))
        return out.astype(np.intp)

    def predict(self, X):
        return _tree_reduce(self, self._columns(X), lambda node: float(self.value[node]))


def _best_split(xcol, yvals, min_leaf, task):
    """Best (gain, threshold) for one feature, or None if no legal cut.

    argmax returns the first maximum, so equal gains resolve to the lowest
    threshold.
    """
    order = np.argsort(xcol, kind="mergesort")
    xv = xcol[order]
    yv = yvals[order]
    m = len(xv)
    cut = np.nonzero(xv[:-1] < xv[1:])[0]
    cut = cut[(cut + 1 >= min_leaf) & (m - cut - 1 >= min_leaf)]
    if cut.size == 0:
        return None
    nl = (cut + 1).astype(np.float64)
    nr = m - nl
    if task == "regression":
        s = np.cumsum(yv)
        s2 = np.cumsum(yv * yv)
        sl = s[cut]
        sse_l = s2[cut] - sl * sl / nl
        sr = s[-1] - sl
        sse_r = (s2[-1] - s2[cut]) - sr * sr / nr
        gain = (s2[-1] - s[-1] * s[-1] / m) - sse_l - sse_r
    else:
        c = np.cumsum(yv)
        cl = c[cut]
        cr = c[-1] - cl
        imp_l = nl - (cl * cl + (nl - cl) * (nl - cl)) / nl
        imp_r = nr - (cr * cr + (nr - cr) * (nr - cr)) / nr
        imp_p = m - (c[-1] * c[-1] + (m - c[-1]) * (m - c[-1])) / m
        gain = imp_p - imp_l - imp_r
    k = int(np.argmax(gain))
    thr = 0.5 * (xv[cut[k]] + xv[cut[k] + 1])
    return float(gain[k]), float(thr)


def fit_tree(X, y, max_depth, min_leaf=1, task="regression", min_gain_fraction=0.0):
    """Greedy CART fit: variance reduction for regression, Gini for
    classification (leaf value is the class-1 proportion).

    Ties between splits resolve to the lowest feature index, then the lowest
    threshold.  A pure node (constant target) becomes a leaf, so a constant
    target yields a depth-0 tree.  ``min_gain_fraction`` rejects splits whose
    impurity reduction is below that fraction of the node impurity, which
    suppresses splits that only chase noise.
    """
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    if max_depth < 1:
        raise FitError("max_depth must be >= 1")
    if min_leaf < 1:
        raise FitError("min_leaf must be >= 1")
    if task not in ("regression", "classification"):
        raise FitError(f"unknown task {task!r}")
    if task == "classification":
        _check_binary(y, "classification tree")

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        ysub = y[idx]
        value[node] = float(ysub.mean())
        node_sse = float(np.var(ysub)) * len(idx)
        impure = node_sse > 1e-15 * len(idx)
        if depth >= max_depth or len(idx) < 2 * min_leaf or not impure:
            continue
        best = None
        for j in range(X.shape[1]):
            found = _best_split(X[idx, j], ysub, min_leaf, task)
            if found is None:
                continue
            if best is None or found[0] > best[0]:
                best = (found[0], j, found[1])
        if best is None:
            continue
        if min_gain_fraction > 0.0 and best[0] < min_gain_fraction * node_sse:
            continue
        _, j, thr = best
        go_left = X[idx, j] <= thr
        feature[node] = j
        threshold[node] = thr
        li = new_node()
        ri = new_node()
        left[node] = li
        right[node] = ri
        stack.append((ri, idx[~go_left], depth + 1))
        stack.append((li, idx[go_left], depth + 1))

    return DecisionTree(
        feature=np.asarray(feature, dtype=np.intp),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.intp),
        right=np.asarray(right, dtype=np.intp),
        value=np.asarray(value, dtype=np.float64),
        max_depth=int(max_depth),
        task=task,
        n_features=X.shape[1],
    )


@dataclass(frozen=True, eq=False)
class GradientBoostedTrees:
    """Additive tree ensemble: raw score = base + lr * sum of tree outputs.

    With logistic loss the probability output passes the raw score through
    the logistic function.
    """

    trees: tuple
    learning_rate: float
    base_score: float
    loss: str = "logistic"
    train_losses: tuple = field(default_factory=tuple)

    @property
    def n_features(self):
        return self.trees[0].n_features if self.trees else 0

    def margin(self, X):
        X = _as_matrix(X)
        if X.shape[1] != self.n_features:
            raise FitError(f"model expects {self.n_features} features, got {X.shape[1]}")
        cols = _feature_columns(X)
        out = np.full(X.shape[0], self.base_score, dtype=np.float64)
        for tree in self.trees:
            out += self.learning_rate * _tree_reduce(
                tree, cols, lambda node, t=tree: float(t.value[node])
            )
        return out

    def predict(self, X):
        raw = self.margin(X)
        return sigmoid(raw) if self.loss == "logistic" else raw


def fit_gbt(
    X, y, n_trees, max_depth=3, learning_rate=0.1, loss="logistic", min_leaf=1,
    reg_lambda=1.0, min_gain_fraction=0.05,
):
    """Stagewise gradient boosting with regression trees on the negative
    gradient.  Leaf values take one Newton step with L2 shrinkage
    ``reg_lambda`` on the leaf weight (clipped to +-10 for stability), and
    splits must reduce at least ``min_gain_fraction`` of the node impurity;
    both act against fitting label noise, which would otherwise smuggle
    spurious feature usage into the model.  The recorded training loss is
    non-increasing across stages.
    """
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    if n_trees < 1:
        raise FitError("n_trees must be >= 1")
    if loss not in ("squared", "logistic"):
        raise FitError(f"unknown loss {loss!r}")
    if loss == "logistic":
        _check_binary(y, "logistic loss")
        pbar = float(np.clip(y.mean(), 1e-6, 1.0 - 1e-6))
        base = float(np.log(pbar / (1.0 - pbar)))
    else:
        base = float(y.mean())

    raw = np.full(len(y), base, dtype=np.float64)
    trees = []
    losses = []
    for _ in range(n_trees):
        if loss == "logistic":
            prob = sigmoid(raw)
            resid = y - prob
        else:
            resid = y - raw
        tree = fit_tree(
            X, resid, max_depth=max_depth, min_leaf=min_leaf, task="regression",
            min_gain_fraction=min_gain_fraction,
        )
        leaves = tree.apply(X)
        if loss == "logistic":
            hess = prob * (1.0 - prob)
        else:
            hess = np.ones(len(y))
        num = np.bincount(leaves, weights=resid, minlength=len(tree.value))
        den = np.bincount(leaves, weights=hess, minlength=len(tree.value))
        newton = num / np.maximum(den + reg_lambda, 1e-12)
        newton = np.clip(newton, -10.0, 10.0)
        is_leaf = tree.feature < 0
        values = np.where(is_leaf, newton, tree.value)
        tree = DecisionTree(
            feature=tree.feature,
            threshold=tree.threshold,
            left=tree.left,
            right=tree.right,
            value=values,
            max_depth=tree.max_depth,
            task="regression",
            n_features=tree.n_features,
        )
        raw = raw + learning_rate * tree.predict(X)
        trees.append(tree)
        if loss == "logistic":
            prob = sigmoid(raw)
            losses.append(float(-np.mean(y * np.log(prob) + (1 - y) * np.log(1 - prob))))
        else:
            losses.append(float(np.mean((y - raw) ** 2)))

    return GradientBoostedTrees(
        trees=tuple(trees),
        learning_rate=float(learning_rate),
        base_score=base,
        loss=loss,
        train_losses=tuple(losses),
    )


def predict(model, X):
    """Score rows with any fitted model; probabilities for logistic models."""
    return model.predict(X)


def margin(model, X):
    """Pre-link score: the linear score or raw boosted sum; equals
    ``predict`` for identity-link / squared-loss models."""
    if hasattr(model, "margin"):
        return model.margin(X)
    return model.predict(X)


def _tree_to_dict(tree):
    return {
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "value": tree.value.tolist(),
        "max_depth": tree.max_depth,
        "task": tree.task,
        "n_features": tree.n_features,
    }


def _tree_from_dict(d):
    return DecisionTree(
        feature=np.asarray(d["feature"], dtype=np.intp),
        threshold=np.asarray(d["threshold"], dtype=np.float64),
        left=np.asarray(d["left"], dtype=np.intp),
        right=np.asarray(d["right"], dtype=np.intp),
        value=np.asarray(d["value"], dtype=np.float64),
        max_depth=int(d["max_depth"]),
        task=d["task"],
        n_features=int(d["n_features"]),
    )


def model_to_dict(model):
    """Versioned JSON-ready description of a fitted model."""
    if isinstance(model, LinearModel):
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "linear",
            "link": model.link,
            "intercept": model.intercept,
            "coefficients": model.coefficients.tolist(),
        }
    if isinstance(model, DecisionTree):
        return {"format_version": MODEL_FORMAT_VERSION, "kind": "tree", **_tree_to_dict(model)}
    if isinstance(model, GradientBoostedTrees):
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "gbt",
            "loss": model.loss,
            "learning_rate": model.learning_rate,
            "base_score": model.base_score,
            "trees": [_tree_to_dict(t) for t in model.trees],
        }
    raise FitError(f"cannot serialise model of type {type(model).__name__}")


def model_from_dict(d):
    if d.get("format_version") != MODEL_FORMAT_VERSION:
        raise FitError(f"unsupported model format {d.get('format_version')!r}")
    kind = d["kind"]
    if kind == "linear":
        return LinearModel(d["intercept"], np.asarray(d["coefficients"]), d["link"])
    if kind == "tree":
        return _tree_from_dict(d)
    if kind == "gbt":
        return GradientBoostedTrees(
            trees=tuple(_tree_from_dict(t) for t in d["trees"]),
            learning_rate=float(d["learning_rate"]),
            base_score=float(d["base_score"]),
            loss=d["loss"],
        )
    raise FitError(f"unknown model kind {kind!r}")


def model_to_json(model):
    return json.dumps(model_to_dict(model), indent=2)


def model_from_json(text):
    return model_from_dict(json.loads(text))
