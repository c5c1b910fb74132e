"""Random forest of bootstrapped regression trees"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from regressors.tree import RegressionTree, fit_tree


def resolve_max_features(setting: str | int, width: int) -> int:
    "Number of inputs considered per split: 'sqrt', 'all' or a count"
    match setting:
        case "sqrt":
            return max(1, int(math.isqrt(width)))
        case "all":
            return width
    return min(int(setting), width)


@dataclass
class RandomForest:
    "Mean of independently grown trees, each with its own seed derived from the forest seed"
    n_estimators: int = 200
    max_depth: int | None = 12
    min_samples_leaf: int = 1
    max_features: str | int = "sqrt"
    bootstrap: bool = True
    n_jobs: int = 1
    trees: list[RegressionTree] = field(default_factory=list)

    def _fit_one(self, x: np.ndarray, y: np.ndarray, seed: np.random.SeedSequence) -> RegressionTree:
        rng = np.random.default_rng(seed)
        rows = rng.integers(0, len(y), size=len(y)) if self.bootstrap else np.arange(len(y))
        return fit_tree(
            x[rows],
            y[rows],
            self.max_depth,
            self.min_samples_leaf,
            resolve_max_features(self.max_features, x.shape[1]),
            rng,
        )

    def fit(self, x: np.ndarray, y: np.ndarray, seed: int) -> "RandomForest":
        seeds = np.random.SeedSequence(seed).spawn(self.n_estimators)
        if self.n_jobs > 1:
            with ThreadPoolExecutor(max_workers=self.n_jobs) as pool:
                self.trees = list(pool.map(lambda s: self._fit_one(x, y, s), seeds))
        else:
            self.trees = [self._fit_one(x, y, s) for s in seeds]
        return self

    def tree_predictions(self, x: np.ndarray) -> np.ndarray:
        "Array of shape (trees, rows)"
        return np.array([tree.predict(x) for tree in self.trees])

    def predict(self, x: np.ndarray) -> np.ndarray:
        "Mean of tree outputs, summed exactly so that it doesn't depend on tree order"
        outputs = self.tree_predictions(x)
        return np.array([math.fsum(column) / len(self.trees) for column in outputs.T])

    def importances(self, width: int) -> np.ndarray:
        "Mean split gain per input"
        result = np.zeros(width)
        for tree in self.trees:
            result = result + tree.importances(width)
        return result / max(len(self.trees), 1)
