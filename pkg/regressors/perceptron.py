"""Multilayer perceptron regressor with rectifier hidden layers"""

from dataclasses import dataclass, field

import numpy as np

ADAM_BETAS = (0.9, 0.999)
ADAM_EPSILON = 1e-8


def forward(
    weights: list[np.ndarray], biases: list[np.ndarray], x: np.ndarray
) -> tuple[np.ndarray, list[np.ndarray]]:
    "Returns the network output and the activations of every layer, input included"
    activations = [x]
    for index, (w, b) in enumerate(zip(weights, biases)):
        z = activations[-1] @ w + b
        activations.append(z if index == len(weights) - 1 else np.maximum(z, 0.0))
    return activations[-1][:, 0], activations


def loss_and_gradients(
    weights: list[np.ndarray], biases: list[np.ndarray], x: np.ndarray, y: np.ndarray
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    "Half mean squared error and its gradients by backpropagation"
    output, activations = forward(weights, biases, x)
    error = output - y
    loss = 0.5 * float(np.mean(error**2))
    delta = (error / len(y))[:, None]
    grad_w: list[np.ndarray] = [np.empty(0)] * len(weights)
    grad_b: list[np.ndarray] = [np.empty(0)] * len(weights)
    for index in range(len(weights) - 1, -1, -1):
        grad_w[index] = activations[index].T @ delta
        grad_b[index] = delta.sum(axis=0)
        if index > 0:
            delta = (delta @ weights[index].T) * (activations[index] > 0)
    return loss, grad_w, grad_b


@dataclass
class Perceptron:
    """
    Fully connected network trained with mini-batch Adam on squared error.
    Inputs are standardized with training means and deviations
    """
    hidden: tuple[int, ...] = (64, 32)
    epochs: int = 500
    learning_rate: float = 1e-3
    batch_size: int = 32
    weights: list[np.ndarray] = field(default_factory=list)
    biases: list[np.ndarray] = field(default_factory=list)
    mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    scale: np.ndarray = field(default_factory=lambda: np.ones(0))

    def _standardize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.scale

    def fit(self, x: np.ndarray, y: np.ndarray, seed: int) -> "Perceptron":
        """
        He-initialized hidden layers; the output layer starts at zero weights and
        the label mean as bias, so the untrained network predicts the mean
        """
        rng = np.random.default_rng(seed)
        self.mean = x.mean(axis=0)
        deviation = x.std(axis=0)
        self.scale = np.where(deviation > 0, deviation, 1.0)
        inputs = self._standardize(x)
        sizes = (x.shape[1],) + tuple(self.hidden) + (1,)
        self.weights, self.biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            self.weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), (fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))
        self.weights[-1] = np.zeros_like(self.weights[-1])
        self.biases[-1] = np.array([float(np.mean(y))])
        if np.ptp(y) == 0:
            # constant labels, output stays exactly the label
            self.biases[-1] = np.array([float(y[0])])
            return self

        params = self.weights + self.biases
        moments = [np.zeros_like(p) for p in params]
        velocities = [np.zeros_like(p) for p in params]
        beta1, beta2 = ADAM_BETAS
        step = 0
        for _ in range(self.epochs):
            order = rng.permutation(len(y))
            for start in range(0, len(y), self.batch_size):
                batch = order[start: start + self.batch_size]
                _, grad_w, grad_b = loss_and_gradients(
                    self.weights, self.biases, inputs[batch], y[batch]
                )
                step += 1
                for index, grad in enumerate(grad_w + grad_b):
                    moments[index] = beta1 * moments[index] + (1 - beta1) * grad
                    velocities[index] = beta2 * velocities[index] + (1 - beta2) * grad**2
                    corrected_m = moments[index] / (1 - beta1**step)
                    corrected_v = velocities[index] / (1 - beta2**step)
                    params[index] -= (
                        self.learning_rate * corrected_m / (np.sqrt(corrected_v) + ADAM_EPSILON)
                    )
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        output, _ = forward(self.weights, self.biases, self._standardize(x))
        return output
