"""Ridge-regularized linear regression via the closed-form normal equations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingError
from .scaler import Scaler, apply_scaler, fit_scaler


@dataclass
class LinearModel:
    weights: np.ndarray  # in standardized feature space
    bias: float
    ridge_lambda: float
    scaler: Scaler
    auto_ridged: bool = False  # singular system escalated lambda to 1e-8
    training_meta: dict = field(default_factory=dict)

    kind = "linear"

    def predict_raw(self, X: np.ndarray) -> np.ndarray:
        Z = apply_scaler(self.scaler, np.atleast_2d(np.asarray(X, dtype=np.float64)))
        return Z @ self.weights + self.bias

    def coefficients_original(self) -> tuple[np.ndarray, float]:
        """(weights, bias) mapped back to raw feature units."""
        w = self.weights / self.scaler.std
        b = self.bias - float(np.dot(self.weights, self.scaler.mean / self.scaler.std))
        return w, b


AUTO_RIDGE = 1e-8


def train_linear(dataset, ridge_lambda: float = 0.0) -> LinearModel:
    """Fit min ||y - Xw - b||^2 + lambda ||w||^2 on standardized features.

    The bias is not penalized. A singular normal system with lambda = 0
    escalates to lambda = 1e-8 and the model records that it did.
    """
    if ridge_lambda < 0:
        raise TrainingError("ridge_lambda must be nonnegative")
    X = dataset.matrix()
    y = dataset.labels()
    if X.shape[0] < 2:
        raise TrainingError("linear training needs at least 2 samples")

    scaler = fit_scaler(X)
    Z = apply_scaler(scaler, X)
    n, p = Z.shape
    A = np.column_stack([Z, np.ones(n)])
    G = A.T @ A
    rhs = A.T @ y
    penalty = np.diag(np.append(np.ones(p), 0.0))

    lam = ridge_lambda
    auto = False
    if lam == 0.0 and np.linalg.matrix_rank(G) < p + 1:
        lam = AUTO_RIDGE
        auto = True
    try:
        beta = np.linalg.solve(G + lam * penalty, rhs)
    except np.linalg.LinAlgError:
        # singular even with the user's lambda: escalate once
        lam = max(lam, AUTO_RIDGE)
        auto = True
        beta = np.linalg.solve(G + lam * penalty, rhs)
    if not np.all(np.isfinite(beta)):
        raise TrainingError("linear solve produced non-finite parameters")

    return LinearModel(
        weights=beta[:p],
        bias=float(beta[p]),
        ridge_lambda=ridge_lambda,
        scaler=scaler,
        auto_ridged=auto,
        training_meta={
            "n_samples": n,
            "effective_lambda": lam,
            "interval_s": getattr(dataset, "interval_s", None),
        },
    )
