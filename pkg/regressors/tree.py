"""Regression tree stored as flat node arrays"""

from dataclasses import dataclass

import numpy as np

LEAF = -1


@dataclass
class RegressionTree:
    """
    Binary regression tree. Node `i` is a leaf when feature[i] == -1,
    otherwise inputs with x[feature] <= threshold go to left[i], the rest to right[i]
    """
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.feature)

    def leaf_index(self, x: np.ndarray) -> np.ndarray:
        "Returns the leaf reached by every row of `x`"
        nodes = np.zeros(len(x), dtype=np.int64)
        rows = np.arange(len(x))
        while True:
            features = self.feature[nodes]
            inner = features != LEAF
            if not inner.any():
                return nodes
            go_left = x[rows[inner], features[inner]] <= self.threshold[nodes[inner]]
            nodes[inner] = np.where(go_left, self.left[nodes[inner]], self.right[nodes[inner]])

    def predict(self, x: np.ndarray) -> np.ndarray:
        "Leaf values for every row of a 2-D input"
        return self.value[self.leaf_index(x)]

    def importances(self, width: int) -> np.ndarray:
        "Sum of split gains per input"
        result = np.zeros(width)
        inner = self.feature != LEAF
        np.add.at(result, self.feature[inner], self.gain[inner])
        return result


def _best_split(
    x: np.ndarray, y: np.ndarray, features: np.ndarray, min_samples_leaf: int
) -> tuple[float, int, float]:
    """
    Finds the split with the largest reduction of squared error among `features`.
    Returns (gain, feature, threshold), feature -1 when no split is allowed
    """
    n = len(y)
    # gains are shift invariant, centering keeps them accurate
    y = y - np.mean(y)
    sub = x[:, features]
    order = np.argsort(sub, axis=0, kind="stable")
    xs = np.take_along_axis(sub, order, axis=0)
    ys = y[order]
    left_sum = np.cumsum(ys, axis=0)[:-1]
    total = float(np.sum(y))
    left_count = np.arange(1, n, dtype=np.float64)[:, None]
    right_count = n - left_count
    gain = (
        left_sum**2 / left_count
        + (total - left_sum) ** 2 / right_count
        - total**2 / n
    )
    valid = (
        (xs[:-1] < xs[1:])
        & (left_count >= min_samples_leaf)
        & (right_count >= min_samples_leaf)
    )
    if not valid.any():
        return 0.0, LEAF, 0.0
    gain = np.where(valid, gain, -np.inf)
    row, column = np.unravel_index(int(np.argmax(gain)), gain.shape)
    low, high = xs[row, column], xs[row + 1, column]
    threshold = (low + high) / 2
    if threshold >= high:
        threshold = low
    return float(gain[row, column]), int(features[column]), float(threshold)


def fit_tree(
    x: np.ndarray,
    y: np.ndarray,
    max_depth: int | None,
    min_samples_leaf: int = 1,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> RegressionTree:
    """
    Grows a least-squares regression tree depth first.
    With `max_features` every split looks at a random subset of inputs drawn from `rng`
    """
    width = x.shape[1]
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []
    gain: list[float] = []
    # splits below this gain are rounding noise
    min_gain = 1e-12 * max(float(np.dot(y, y)), 1e-300)

    def new_node(rows: np.ndarray) -> int:
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(np.mean(y[rows])))
        gain.append(0.0)
        return len(feature) - 1

    stack = [(new_node(np.arange(len(y))), np.arange(len(y)), 0)]
    while stack:
        node, rows, depth = stack.pop()
        if (max_depth is not None and depth >= max_depth) or len(rows) < 2 * min_samples_leaf:
            continue
        if max_features is not None and max_features < width:
            assert rng is not None
            candidates = np.sort(rng.choice(width, size=max_features, replace=False))
        else:
            candidates = np.arange(width)
        best_gain, best_feature, best_threshold = _best_split(
            x[rows], y[rows], candidates, min_samples_leaf
        )
        if best_feature == LEAF or best_gain <= min_gain:
            continue
        goes_left = x[rows, best_feature] <= best_threshold
        left_node = new_node(rows[goes_left])
        right_node = new_node(rows[~goes_left])
        feature[node] = best_feature
        threshold[node] = best_threshold
        left[node] = left_node
        right[node] = right_node
        gain[node] = best_gain
        stack.append((right_node, rows[~goes_left], depth + 1))
        stack.append((left_node, rows[goes_left], depth + 1))
    return RegressionTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value, dtype=np.float64),
        gain=np.array(gain, dtype=np.float64),
    )
