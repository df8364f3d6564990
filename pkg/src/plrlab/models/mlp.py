"""Multilayer perceptron trained from scratch with full-batch gradient descent.

tanh hidden layers, identity output, mean-squared-error loss. Weights start
Glorot-uniform from an explicit seed so training is bit-reproducible; the
backward pass is exposed through mlp_gradients for finite-difference checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingDiverged, TrainingError
from .scaler import Scaler, apply_scaler, fit_scaler


@dataclass(frozen=True)
class MlpHyperparams:
    hidden_layers: int = 10
    units_per_hidden: int = 10
    iterations: int = 2000
    learning_rate: float = 0.1
    init_seed: int = 0

    def validate(self) -> None:
        if self.hidden_layers < 1 or self.units_per_hidden < 1:
            raise TrainingError("mlp needs at least one hidden layer and unit")
        if self.iterations < 1 or self.learning_rate <= 0:
            raise TrainingError("mlp iterations and learning_rate must be positive")
        if self.init_seed < 0:
            raise TrainingError("init_seed must be a nonnegative integer")

    def layer_sizes(self, n_features: int = 4) -> list[int]:
        return [n_features] + [self.units_per_hidden] * self.hidden_layers + [1]


@dataclass
class MlpModel:
    weights: list  # W[l] has shape (fan_in, fan_out)
    biases: list
    hyperparams: MlpHyperparams
    scaler: Scaler
    training_meta: dict = field(default_factory=dict)
    loss_history: np.ndarray | None = None

    kind = "mlp"

    def predict_raw(self, X: np.ndarray) -> np.ndarray:
        Z = apply_scaler(self.scaler, np.atleast_2d(np.asarray(X, dtype=np.float64)))
        return _forward(self.weights, self.biases, Z)[-1][:, 0]


def init_parameters(hp: MlpHyperparams, n_features: int = 4):
    """Glorot-uniform weights, zero biases, drawn in layer order."""
    sizes = hp.layer_sizes(n_features)
    rng = np.random.default_rng(hp.init_seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def _forward(weights, biases, Z):
    """Activations per layer; hidden layers tanh, final layer identity."""
    acts = [Z]
    last = len(weights) - 1
    for l, (W, b) in enumerate(zip(weights, biases)):
        s = acts[-1] @ W + b
        acts.append(s if l == last else np.tanh(s))
    return acts


def _loss_and_grads(weights, biases, Z, y):
    """MSE loss and its exact gradients for one full batch."""
    n = len(y)
    acts = _forward(weights, biases, Z)
    resid = acts[-1][:, 0] - y
    loss = float(resid @ resid) / n

    grad_W = [None] * len(weights)
    grad_b = [None] * len(biases)
    delta = (2.0 / n) * resid[:, None]  # d loss / d output-layer input
    for l in range(len(weights) - 1, -1, -1):
        grad_W[l] = acts[l].T @ delta
        grad_b[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ weights[l].T) * (1.0 - acts[l] ** 2)  # tanh'
    return loss, grad_W, grad_b


def train_mlp(dataset, hp: MlpHyperparams | None = None) -> MlpModel:
    """Full-batch gradient descent for hp.iterations steps at a fixed rate.

    Loss is recorded before each step plus once after the last, so
    loss_history[0] is the initial loss and loss_history[-1] the final one.
    A non-finite loss aborts with the iteration number.
    """
    hp = hp if hp is not None else MlpHyperparams()
    hp.validate()
    X = dataset.matrix()
    y = dataset.labels()
    if X.shape[0] == 0:
        raise TrainingError("mlp training needs a nonempty dataset")

    scaler = fit_scaler(X)
    Z = apply_scaler(scaler, X)
    weights, biases = init_parameters(hp, n_features=X.shape[1])

    history = np.empty(hp.iterations + 1)
    lr = hp.learning_rate
    # overflow on the way to a non-finite loss is handled via TrainingDiverged
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(hp.iterations):
            loss, grad_W, grad_b = _loss_and_grads(weights, biases, Z, y)
            if not np.isfinite(loss):
                raise TrainingDiverged(it, loss)
            history[it] = loss
            for l in range(len(weights)):
                weights[l] -= lr * grad_W[l]
                biases[l] -= lr * grad_b[l]

        final_loss, _, _ = _loss_and_grads(weights, biases, Z, y)
    if not np.isfinite(final_loss):
        raise TrainingDiverged(hp.iterations, final_loss)
    history[hp.iterations] = final_loss

    return MlpModel(
        weights=weights,
        biases=biases,
        hyperparams=hp,
        scaler=scaler,
        training_meta={
            "final_loss": final_loss,
            "initial_loss": float(history[0]),
            "iterations": hp.iterations,
            "seed": hp.init_seed,
            "n_samples": int(X.shape[0]),
            "interval_s": getattr(dataset, "interval_s", None),
        },
        loss_history=history,
    )


def mlp_gradients(model: MlpModel, X: np.ndarray, y: np.ndarray):
    """(dLoss/dW list, dLoss/db list) for a batch, via backpropagation."""
    Z = apply_scaler(model.scaler, np.atleast_2d(np.asarray(X, dtype=np.float64)))
    y = np.asarray(y, dtype=np.float64)
    _, grad_W, grad_b = _loss_and_grads(model.weights, model.biases, Z, y)
    return grad_W, grad_b


def mlp_loss(model: MlpModel, X: np.ndarray, y: np.ndarray) -> float:
    """Same loss surface the gradients differentiate; used by FD checks."""
    Z = apply_scaler(model.scaler, np.atleast_2d(np.asarray(X, dtype=np.float64)))
    y = np.asarray(y, dtype=np.float64)
    loss, _, _ = _loss_and_grads(model.weights, model.biases, Z, y)
    return loss
