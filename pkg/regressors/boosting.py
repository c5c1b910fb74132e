"""Gradient-boosted regression trees on squared error"""

from dataclasses import dataclass, field

import numpy as np

from regressors.tree import RegressionTree, fit_tree


@dataclass
class GradientBoosting:
    "Stagewise additive model: base_score + learning_rate * sum of tree outputs"
    n_estimators: int = 200
    max_depth: int = 4
    learning_rate: float = 0.1
    min_samples_leaf: int = 2
    base_score: float = 0.0
    trees: list[RegressionTree] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)

    def fit(self, x: np.ndarray, y: np.ndarray) -> "GradientBoosting":
        "Fits every stage to the residuals of the previous ones"
        self.base_score = float(np.mean(y))
        self.trees = []
        prediction = np.full(len(y), self.base_score)
        self.train_loss = [float(np.mean((y - prediction) ** 2))]
        for _ in range(self.n_estimators):
            tree = fit_tree(x, y - prediction, self.max_depth, self.min_samples_leaf)
            self.trees.append(tree)
            prediction = prediction + self.learning_rate * tree.predict(x)
            self.train_loss.append(float(np.mean((y - prediction) ** 2)))
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        prediction = np.full(len(x), self.base_score)
        for tree in self.trees:
            prediction = prediction + self.learning_rate * tree.predict(x)
        return prediction

    def importances(self, width: int) -> np.ndarray:
        "Total split gain per input over all stages"
        result = np.zeros(width)
        for tree in self.trees:
            result = result + tree.importances(width)
        return result
