"""The three plr regressors: linear, regression tree, and MLP.

All models share predict() (scaler if any, model function, clamp to [0,1])
and JSON serialization under schema version "1".
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, InputError
from .linear import LinearModel, train_linear
from .mlp import (
    MlpHyperparams,
    MlpModel,
    init_parameters,
    mlp_gradients,
    mlp_loss,
    train_mlp,
)
from .scaler import Scaler, apply_scaler, fit_scaler
from .serialize import load_model, model_from_json, model_to_json, save_model
from .tree import TreeModel, TreeNode, best_split, train_tree

MODEL_KINDS = ("linear", "tree", "mlp")

__all__ = [
    "MODEL_KINDS",
    "LinearModel",
    "MlpHyperparams",
    "MlpModel",
    "Scaler",
    "TreeModel",
    "TreeNode",
    "apply_scaler",
    "best_split",
    "fit_scaler",
    "init_parameters",
    "load_model",
    "mlp_gradients",
    "mlp_loss",
    "model_from_json",
    "model_to_json",
    "predict",
    "predict_batch",
    "save_model",
    "train_linear",
    "train_mlp",
    "train_model",
    "train_tree",
]


def _as_feature_array(x) -> np.ndarray:
    arr = x.as_array() if hasattr(x, "as_array") else np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"non-finite feature value in {arr!r}")
    return arr


def predict(model, x) -> float:
    """Model output for one feature vector, clamped to [0, 1]."""
    raw = model.predict_raw(_as_feature_array(x).reshape(1, -1))
    return float(min(1.0, max(0.0, raw[0])))


def predict_batch(model, X: np.ndarray) -> np.ndarray:
    """Clamped predictions for a sample matrix, one row per vector."""
    X = np.asarray(X, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise InputError("non-finite feature value in batch")
    return np.clip(model.predict_raw(X), 0.0, 1.0)


def train_model(kind: str, dataset, hyperparams: dict | None = None):
    """Uniform training entry point used by the eval grids and the CLI."""
    hp = dict(hyperparams or {})
    if kind == "linear":
        lam = hp.pop("ridge_lambda", 0.0)
        _reject_leftovers(kind, hp)
        return train_linear(dataset, ridge_lambda=lam)
    if kind == "tree":
        depth = hp.pop("max_depth", 8)
        leaf = hp.pop("min_samples_leaf", 5)
        _reject_leftovers(kind, hp)
        return train_tree(dataset, max_depth=depth, min_samples_leaf=leaf)
    if kind == "mlp":
        try:
            mhp = MlpHyperparams(**hp)
        except TypeError:
            _reject_leftovers(kind, {k: v for k, v in hp.items()})
            raise
        return train_mlp(dataset, mhp)
    raise ConfigError(f"unknown model kind {kind!r}, expected one of {MODEL_KINDS}")


def _reject_leftovers(kind: str, hp: dict) -> None:
    known = {
        "linear": (),
        "tree": (),
        "mlp": (
            "hidden_layers",
            "units_per_hidden",
            "iterations",
            "learning_rate",
            "init_seed",
        ),
    }[kind]
    unknown = sorted(set(hp) - set(known))
    if unknown:
        raise ConfigError(f"unknown {kind} hyperparameters: {unknown}")
