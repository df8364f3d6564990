"""Feature standardization shared by the linear and MLP models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TrainingError


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    std: np.ndarray  # strictly positive; zero-variance columns carry 1.0

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        object.__setattr__(self, "std", np.asarray(self.std, dtype=np.float64))


def fit_scaler(X: np.ndarray) -> Scaler:
    """Per-feature mean and population standard deviation from training rows."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise TrainingError("scaler needs a nonempty 2-d sample matrix")
    mean = X.mean(axis=0)
    std = X.std(axis=0)  # population form, ddof=0
    std = np.where(std == 0.0, 1.0, std)
    return Scaler(mean=mean, std=std)


def apply_scaler(scaler: Scaler, x: np.ndarray) -> np.ndarray:
    """Standardize a vector or a row matrix."""
    return (np.asarray(x, dtype=np.float64) - scaler.mean) / scaler.std
