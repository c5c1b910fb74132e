"""Tests of the tree, boosting, forest and perceptron estimators"""

import numpy as np
import pytest

from regressors.boosting import GradientBoosting
from regressors.forest import RandomForest, resolve_max_features
from regressors.perceptron import Perceptron, forward, loss_and_gradients
from regressors.tree import LEAF, RegressionTree, fit_tree


def leaf(value: float) -> RegressionTree:
    "Tree of a single leaf"
    return RegressionTree(
        feature=np.array([LEAF]),
        threshold=np.zeros(1),
        left=np.array([LEAF]),
        right=np.array([LEAF]),
        value=np.array([value]),
        gain=np.zeros(1),
    )


def random_inputs(rows=60, width=5, seed=0):
    return np.random.default_rng(seed).normal(size=(rows, width))


class TestTree:
    def test_step_function(self):
        x = np.arange(20, dtype=float)[:, None]
        y = np.where(x[:, 0] < 10, 1.0, 5.0)
        tree = fit_tree(x, y, max_depth=3)
        assert tree.node_count == 3
        assert tree.feature[0] == 0
        assert tree.threshold[0] == 9.5
        assert list(tree.predict(np.array([[0.0], [9.4], [9.6], [100.0]]))) == [1, 1, 5, 5]

    def test_piecewise_constant(self):
        x = random_inputs(80, 3)
        y = x[:, 0] * 2 + np.sin(x[:, 1])
        tree = fit_tree(x, y, max_depth=3)
        leaves = set(tree.value[tree.feature == LEAF])
        grid = random_inputs(500, 3, seed=1)
        assert set(tree.predict(grid)) <= leaves
        assert len(leaves) <= 8

    def test_constant_labels_give_one_leaf(self):
        tree = fit_tree(random_inputs(), np.full(60, 3.25), max_depth=5)
        assert tree.node_count == 1
        assert tree.value[0] == pytest.approx(3.25)

    def test_min_samples_leaf(self):
        x = np.arange(10, dtype=float)[:, None]
        y = np.array([0.0] * 9 + [100.0])
        tree = fit_tree(x, y, max_depth=None, min_samples_leaf=3)
        counts = np.bincount(tree.leaf_index(x))
        assert min(c for c in counts if c > 0) >= 3

    def test_importances_follow_used_feature(self):
        x = random_inputs(50, 4)
        tree = fit_tree(x, 3 * x[:, 2], max_depth=2)
        importances = tree.importances(4)
        assert set(tree.feature[tree.feature != LEAF]) == {2}
        assert importances[2] > 0
        assert importances[[0, 1, 3]].sum() == 0


class TestBoosting:
    def test_single_stage_output(self):
        model = GradientBoosting(learning_rate=0.1, base_score=1.0, trees=[leaf(2.0)])
        assert model.predict(np.zeros((1, 3)))[0] == pytest.approx(1.2)

    def test_no_stages_predict_base(self):
        model = GradientBoosting(base_score=4.5)
        assert list(model.predict(np.zeros((2, 3)))) == [4.5, 4.5]

    def test_training_loss_never_grows(self):
        x = random_inputs(100, 4)
        y = x[:, 0] ** 2 + x[:, 1]
        model = GradientBoosting(n_estimators=40, max_depth=3).fit(x, y)
        loss = model.train_loss
        assert len(loss) == 41
        slack = 1e-12 * loss[0]
        assert all(b <= a + slack for a, b in zip(loss, loss[1:]))
        assert loss[-1] < loss[0] / 4

    def test_constant_labels(self):
        model = GradientBoosting(n_estimators=10).fit(random_inputs(), np.full(60, 7.0))
        assert model.predict(random_inputs(5, seed=3)) == pytest.approx([7.0] * 5)


class TestForest:
    def test_mean_of_trees(self):
        forest = RandomForest(trees=[leaf(2.0), leaf(4.0)])
        assert forest.predict(np.zeros((1, 2)))[0] == 3.0

    def test_same_seed_same_forest(self):
        x = random_inputs()
        y = x[:, 0] - x[:, 3]
        first = RandomForest(n_estimators=8).fit(x, y, seed=1)
        second = RandomForest(n_estimators=8).fit(x, y, seed=1)
        third = RandomForest(n_estimators=8).fit(x, y, seed=2)
        grid = random_inputs(20, seed=5)
        assert np.array_equal(first.predict(grid), second.predict(grid))
        assert not np.array_equal(first.predict(grid), third.predict(grid))

    def test_threads_give_same_forest(self):
        x = random_inputs()
        y = x[:, 1] * 3
        serial = RandomForest(n_estimators=6).fit(x, y, seed=4)
        threaded = RandomForest(n_estimators=6, n_jobs=3).fit(x, y, seed=4)
        grid = random_inputs(20, seed=5)
        assert np.array_equal(serial.predict(grid), threaded.predict(grid))

    def test_predictions_stay_in_label_range(self):
        x = random_inputs(80, 3)
        y = np.exp(x[:, 0])
        forest = RandomForest(n_estimators=10).fit(x, y, seed=0)
        outputs = forest.predict(random_inputs(200, 3, seed=9) * 10)
        assert outputs.min() >= y.min()
        assert outputs.max() <= y.max()

    @pytest.mark.parametrize(
        "setting, expected", [("sqrt", 8), ("all", 70), (5, 5), ("200", 70)]
    )
    def test_max_features(self, setting, expected):
        assert resolve_max_features(setting, 70) == expected


class TestPerceptron:
    def test_zero_weights_predict_bias(self):
        weights = [np.ones((3, 4)), np.zeros((4, 1))]
        biases = [np.zeros(4), np.array([2.5])]
        output, _ = forward(weights, biases, random_inputs(6, 3))
        assert list(output) == [2.5] * 6

    def test_constant_labels(self):
        model = Perceptron(hidden=(8,), epochs=20).fit(random_inputs(), np.full(60, 3.0), seed=0)
        assert list(model.predict(random_inputs(4, seed=2))) == [3.0] * 4

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(17)
        step = 1e-6
        for _ in range(50):
            width = int(rng.integers(1, 6))
            sizes = (width,) + tuple(int(s) for s in rng.integers(1, 17, size=rng.integers(0, 3))) + (1,)
            weights = [rng.normal(size=(a, b)) for a, b in zip(sizes[:-1], sizes[1:])]
            biases = [rng.normal(size=b) for b in sizes[1:]]
            x = rng.normal(size=(7, width))
            y = rng.normal(size=7)
            _, grad_w, grad_b = loss_and_gradients(weights, biases, x, y)
            for params, grads in ((weights, grad_w), (biases, grad_b)):
                for param, grad in zip(params, grads):
                    for index in np.ndindex(param.shape):
                        original = param[index]
                        param[index] = original + step
                        plus, _, _ = loss_and_gradients(weights, biases, x, y)
                        param[index] = original - step
                        minus, _, _ = loss_and_gradients(weights, biases, x, y)
                        param[index] = original
                        numeric = (plus - minus) / (2 * step)
                        assert grad[index] == pytest.approx(numeric, rel=1e-4, abs=1e-6)

    def test_learns_linear_function(self):
        x = random_inputs(200, 3)
        y = 2 * x[:, 0] - x[:, 1] + 0.5
        model = Perceptron(hidden=(16,), epochs=200, learning_rate=1e-2).fit(x, y, seed=0)
        error = np.mean((model.predict(x) - y) ** 2)
        assert error < 0.05 * np.var(y)

    def test_same_seed_same_network(self):
        x = random_inputs()
        y = x[:, 0]
        first = Perceptron(hidden=(4,), epochs=5).fit(x, y, seed=3)
        second = Perceptron(hidden=(4,), epochs=5).fit(x, y, seed=3)
        assert np.array_equal(first.predict(x), second.predict(x))
