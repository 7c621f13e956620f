import numpy as np
import pytest

from etaudit import (
    FitError,
    LinearModel,
    fit_gbt,
    fit_linear,
    fit_tree,
    margin,
    model_from_json,
    model_to_json,
    predict,
)
from etaudit._util import sigmoid


class TestFitLinear:
    def test_exact_interpolation(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((40, 2))
        y = 1.0 + 2.0 * X[:, 0] - 3.0 * X[:, 1]
        m = fit_linear(X, y, link="identity", l2=0.0)
        assert abs(m.intercept - 1.0) < 1e-8
        assert np.allclose(m.coefficients, [2.0, -3.0], atol=1e-8)

    def test_separable_logistic_perfect_accuracy(self):
        rng = np.random.default_rng(1)
        X = np.concatenate([rng.normal(-3, 0.5, (50, 1)), rng.normal(3, 0.5, (50, 1))])
        y = np.r_[np.zeros(50), np.ones(50)]
        m = fit_linear(X, y, link="logistic", l2=1e-2)
        acc = np.mean((m.predict(X) >= 0.5) == y)
        assert acc == 1.0

    def test_logistic_mle_consistency(self):
        # frozen Monte Carlo check: 5000 draws from sigma(x1 + x2) labels
        rng = np.random.default_rng(0)
        X = rng.standard_normal((5000, 2))
        y = (rng.random(5000) < sigmoid(X[:, 0] + X[:, 1])).astype(float)
        m = fit_linear(X, y, link="logistic")
        assert np.all(np.abs(m.coefficients - 1.0) < 0.15)

    def test_singular_without_ridge(self):
        X = np.ones((10, 2))  # duplicate constant columns
        y = np.arange(10.0)
        with pytest.raises(FitError, match="singular|l2"):
            fit_linear(X, y, link="identity", l2=0.0)
        fit_linear(X, y, link="identity", l2=1e-3)  # ridge rescues

    def test_underdetermined_needs_ridge(self):
        X = np.random.default_rng(2).standard_normal((3, 5))
        with pytest.raises(FitError, match="n >= p"):
            fit_linear(X, np.zeros(3), link="identity", l2=0.0)

    def test_non_binary_logistic_target(self):
        X = np.random.default_rng(3).standard_normal((10, 1))
        with pytest.raises(FitError, match="binary"):
            fit_linear(X, np.arange(10.0), link="logistic")

    def test_nan_rejected(self):
        X = np.array([[np.nan], [1.0]])
        with pytest.raises(FitError, match="NaN"):
            fit_linear(X, np.zeros(2))

    def test_affine_prediction_invariant(self):
        m = LinearModel(0.7, np.array([1.5, -2.0, 0.25]), "identity")
        rng = np.random.default_rng(4)
        for _ in range(25):
            x = rng.standard_normal(3)
            j = rng.integers(0, 3)
            delta = rng.standard_normal()
            shifted = x.copy()
            shifted[j] += delta
            got = m.predict(shifted[None, :])[0] - m.predict(x[None, :])[0]
            assert np.isclose(got, m.coefficients[j] * delta, rtol=1e-12, atol=1e-12)

    def test_logistic_link_outputs(self):
        m = LinearModel(0.0, np.array([1.0]), "logistic")
        assert m.predict(np.array([[0.0]]))[0] == 0.5
        out = m.predict(np.array([[-50.0], [50.0]]))
        assert np.all(out > 0.0) and np.all(out < 1.0)

    def test_identity_predict_scalar_case(self):
        m = LinearModel(0.0, np.array([1.0]), "identity")
        assert m.predict(np.array([[2.0]]))[0] == 2.0


class TestFitTree:
    def test_threshold_split(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(-1, 1, (200, 2))
        y = (X[:, 0] > 0).astype(float)
        t = fit_tree(X, y, max_depth=1, task="classification")
        assert t.feature[0] == 0
        assert abs(t.threshold[0]) < 0.05
        assert np.mean((t.predict(X) >= 0.5) == y) == 1.0

    def test_constant_target_single_leaf(self):
        X = np.random.default_rng(1).standard_normal((20, 2))
        t = fit_tree(X, np.full(20, 3.25), max_depth=4)
        assert len(t.feature) == 1 and t.feature[0] == -1
        assert np.all(t.predict(X) == 3.25)

    def test_xor_depths(self):
        # 4-point xor grid replicated 250x
        base = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        X = np.tile(base, (250, 1))
        y = (X[:, 0] != X[:, 1]).astype(float)
        deep = fit_tree(X, y, max_depth=2, task="classification")
        assert np.mean((deep.predict(X) >= 0.5) == y) == 1.0
        shallow = fit_tree(X, y, max_depth=1, task="classification")
        assert np.mean((shallow.predict(X) >= 0.5) == y) <= 0.75

    def test_depth_limit_respected(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((500, 3))
        y = rng.standard_normal(500)
        t = fit_tree(X, y, max_depth=3)

        def depth(node, d=0):
            if t.feature[node] < 0:
                return d
            return max(depth(t.left[node], d + 1), depth(t.right[node], d + 1))

        assert depth(0) <= 3
        # internal nodes have both children, leaf values finite
        internal = t.feature >= 0
        assert np.all(t.left[internal] >= 0) and np.all(t.right[internal] >= 0)
        assert np.all(np.isfinite(t.value))

    def test_min_leaf(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((50, 1))
        y = rng.standard_normal(50)
        t = fit_tree(X, y, max_depth=8, min_leaf=10)
        leaves, counts = np.unique(t.apply(X), return_counts=True)
        assert np.all(counts >= 10)

    def test_bad_params(self):
        X = np.zeros((5, 1))
        with pytest.raises(FitError):
            fit_tree(X, np.zeros(5), max_depth=0)
        with pytest.raises(FitError):
            fit_tree(X, np.zeros(5), max_depth=1, min_leaf=0)


class TestFitGbt:
    def test_zero_trees_disallowed(self):
        X = np.zeros((10, 1))
        with pytest.raises(FitError):
            fit_gbt(X, np.zeros(10), n_trees=0)

    def test_single_stump_composition(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((100, 1))
        y = (X[:, 0] > 0).astype(float) * 2.0
        g = fit_gbt(X, y, n_trees=1, max_depth=1, learning_rate=0.5, loss="squared",
                    reg_lambda=0.0, min_gain_fraction=0.0)
        stump = g.trees[0]
        expect = g.base_score + 0.5 * stump.predict(X)
        assert np.allclose(g.predict(X), expect, rtol=1e-12, atol=1e-12)

    def test_squared_loss_stump_convergence(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(-1, 1, (2000, 1))
        y = X[:, 0] ** 2
        g = fit_gbt(X, y, n_trees=200, max_depth=1, learning_rate=0.1, loss="squared")
        grid = np.linspace(-1, 1, 201)[:, None]
        rmse = np.sqrt(np.mean((g.predict(grid) - grid[:, 0] ** 2) ** 2))
        assert rmse < 0.1

    def test_logistic_loss_reference_auc(self):
        from etaudit import ScenarioSpec, SplitSpec, auc, generate, split_three_way

        ds = generate(ScenarioSpec(kind="indirect", n=10000, gamma=0.6, seed=0))
        tr, va, te = split_three_way(ds, SplitSpec(seed=0))
        g = fit_gbt(tr.X, tr.y, n_trees=100)
        assert auc(g.predict(te.X), te.y) > 0.75

    def test_training_loss_non_increasing(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((500, 3))
        for loss, y in (
            ("squared", X[:, 0] + rng.normal(0, 0.2, 500)),
            ("logistic", (rng.random(500) < sigmoid(X[:, 0])).astype(float)),
        ):
            g = fit_gbt(X, y, n_trees=40, loss=loss, min_gain_fraction=0.0)
            losses = np.asarray(g.train_losses)
            assert np.all(np.diff(losses) <= 1e-12)

    def test_all_zero_leaves_constant_base(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((50, 2))
        y = np.full(50, 0.7)
        g = fit_gbt(X, y, n_trees=5, loss="squared")
        # constant target: every tree is a single (shrunk-to-zero) leaf
        assert np.allclose(g.predict(X), g.base_score)

    def test_non_binary_logistic_rejected(self):
        X = np.zeros((10, 1))
        with pytest.raises(FitError, match="binary"):
            fit_gbt(X, np.arange(10.0), n_trees=1, loss="logistic")

    def test_deterministic(self):
        rng = np.random.default_rng(7)
        X = rng.standard_normal((300, 3))
        y = (rng.random(300) < 0.5).astype(float)
        a = fit_gbt(X, y, n_trees=20)
        b = fit_gbt(X, y, n_trees=20)
        assert model_to_json(a) == model_to_json(b)


class TestPredictDispatch:
    def test_dimension_mismatch(self):
        m = LinearModel(0.0, np.array([1.0, 2.0]), "identity")
        with pytest.raises(FitError, match="features"):
            predict(m, np.zeros((3, 3)))

    def test_margin_equals_predict_for_identity(self):
        m = LinearModel(0.5, np.array([1.0]), "identity")
        X = np.arange(5.0)[:, None]
        assert np.array_equal(margin(m, X), predict(m, X))

    def test_margin_is_pre_link(self):
        m = LinearModel(0.0, np.array([2.0]), "logistic")
        X = np.array([[1.0]])
        assert margin(m, X)[0] == 2.0
        assert predict(m, X)[0] == pytest.approx(sigmoid(np.array([2.0]))[0])


class TestSerialization:
    def test_linear_round_trip(self):
        m = fit_linear(np.random.default_rng(0).standard_normal((30, 2)),
                       np.random.default_rng(1).standard_normal(30))
        again = model_from_json(model_to_json(m))
        X = np.random.default_rng(2).standard_normal((10, 2))
        assert np.array_equal(m.predict(X), again.predict(X))

    def test_tree_round_trip(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((200, 3))
        t = fit_tree(X, rng.standard_normal(200), max_depth=3)
        again = model_from_json(model_to_json(t))
        assert np.array_equal(t.predict(X), again.predict(X))

    def test_gbt_round_trip(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((200, 2))
        y = (rng.random(200) < 0.5).astype(float)
        g = fit_gbt(X, y, n_trees=10)
        again = model_from_json(model_to_json(g))
        assert np.array_equal(g.predict(X), again.predict(X))
        assert model_to_json(g).startswith('{\n  "format_version": 1')

    def test_unknown_version_rejected(self):
        with pytest.raises(FitError, match="format"):
            model_from_json('{"format_version": 99, "kind": "linear"}')
