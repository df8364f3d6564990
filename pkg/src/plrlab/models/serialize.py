"""Model files: versioned JSON documents, schema version "1".

Layout:
  {
    "schema_version": "1",
    "kind": "linear" | "tree" | "mlp",
    "hyperparams": {...},                  # kind-specific, see below
    "scaler": {"mean": [...], "std": [...]} | null,
    "parameters": {...},                   # kind-specific, see below
    "training_meta": {"final_loss": .., "iterations": .., "seed": ..,
                      "interval_s": ..}    # nulls where not applicable
  }

linear: hyperparams {ridge_lambda}; parameters {weights, bias, auto_ridged}
tree:   hyperparams {max_depth, min_samples_leaf}; parameters {root} where a
        node is {"type": "split", feature, threshold, left, right} or
        {"type": "leaf", value}
mlp:    hyperparams {hidden_layers, units_per_hidden, iterations,
        learning_rate, init_seed}; parameters {weights, biases} as nested
        lists per layer

Python's JSON float round-trip is exact, so load(save(m)) restores
bit-identical parameters.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from ..errors import SchemaError
from .linear import LinearModel
from .mlp import MlpHyperparams, MlpModel
from .scaler import Scaler
from .tree import TreeModel, TreeNode

SCHEMA_VERSION = "1"


def _need(obj, key: str, path: str):
    if not isinstance(obj, dict):
        raise SchemaError("expected an object", field_path=path)
    if key not in obj:
        raise SchemaError("missing field", field_path=f"{path}.{key}")
    return obj[key]


def _real_list(obj, path: str) -> np.ndarray:
    if not isinstance(obj, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj
    ):
        raise SchemaError("expected a list of reals", field_path=path)
    return np.array(obj, dtype=np.float64)


def _scaler_to_json(scaler: Scaler | None):
    if scaler is None:
        return None
    return {"mean": scaler.mean.tolist(), "std": scaler.std.tolist()}


def _scaler_from_json(obj, path: str) -> Scaler | None:
    if obj is None:
        return None
    return Scaler(
        mean=_real_list(_need(obj, "mean", path), f"{path}.mean"),
        std=_real_list(_need(obj, "std", path), f"{path}.std"),
    )


def _tree_to_json(node: TreeNode):
    if node.is_leaf:
        return {"type": "leaf", "value": node.value}
    return {
        "type": "split",
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _tree_to_json(node.left),
        "right": _tree_to_json(node.right),
    }


def _tree_from_json(obj, path: str) -> TreeNode:
    t = _need(obj, "type", path)
    if t == "leaf":
        v = _need(obj, "value", path)
        if not isinstance(v, (int, float)):
            raise SchemaError("leaf value must be a real", field_path=f"{path}.value")
        return TreeNode(value=float(v))
    if t == "split":
        f = _need(obj, "feature", path)
        thr = _need(obj, "threshold", path)
        if not isinstance(f, int) or isinstance(f, bool) or f < 0:
            raise SchemaError("bad split feature", field_path=f"{path}.feature")
        if not isinstance(thr, (int, float)):
            raise SchemaError("bad split threshold", field_path=f"{path}.threshold")
        return TreeNode(
            feature=f,
            threshold=float(thr),
            left=_tree_from_json(_need(obj, "left", path), f"{path}.left"),
            right=_tree_from_json(_need(obj, "right", path), f"{path}.right"),
        )
    raise SchemaError(f"unknown node type {t!r}", field_path=f"{path}.type")


def _training_meta(model) -> dict:
    meta = getattr(model, "training_meta", {}) or {}
    return {
        "final_loss": meta.get("final_loss"),
        "iterations": meta.get("iterations"),
        "seed": meta.get("seed"),
        "interval_s": meta.get("interval_s"),
    }


def model_to_json(model) -> dict:
    if isinstance(model, LinearModel):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "linear",
            "hyperparams": {"ridge_lambda": model.ridge_lambda},
            "scaler": _scaler_to_json(model.scaler),
            "parameters": {
                "weights": model.weights.tolist(),
                "bias": model.bias,
                "auto_ridged": model.auto_ridged,
            },
            "training_meta": _training_meta(model),
        }
    if isinstance(model, TreeModel):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "tree",
            "hyperparams": {
                "max_depth": model.max_depth,
                "min_samples_leaf": model.min_samples_leaf,
            },
            "scaler": None,
            "parameters": {"root": _tree_to_json(model.root)},
            "training_meta": _training_meta(model),
        }
    if isinstance(model, MlpModel):
        hp = model.hyperparams
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "mlp",
            "hyperparams": {
                "hidden_layers": hp.hidden_layers,
                "units_per_hidden": hp.units_per_hidden,
                "iterations": hp.iterations,
                "learning_rate": hp.learning_rate,
                "init_seed": hp.init_seed,
            },
            "scaler": _scaler_to_json(model.scaler),
            "parameters": {
                "weights": [W.tolist() for W in model.weights],
                "biases": [b.tolist() for b in model.biases],
            },
            "training_meta": _training_meta(model),
        }
    raise SchemaError(f"cannot serialize model of type {type(model).__name__}")


def model_from_json(doc: dict, path: str = "$"):
    version = _need(doc, "schema_version", path)
    if version != SCHEMA_VERSION:
        raise SchemaError(
            f"unsupported schema_version {version!r}",
            field_path=f"{path}.schema_version",
        )
    kind = _need(doc, "kind", path)
    hp = _need(doc, "hyperparams", path)
    params = _need(doc, "parameters", path)
    scaler = _scaler_from_json(_need(doc, "scaler", path), f"{path}.scaler")
    meta = _need(doc, "training_meta", path)
    if not isinstance(meta, dict):
        raise SchemaError("expected an object", field_path=f"{path}.training_meta")

    if kind == "linear":
        if scaler is None:
            raise SchemaError("linear model needs a scaler", field_path=f"{path}.scaler")
        return LinearModel(
            weights=_real_list(
                _need(params, "weights", f"{path}.parameters"),
                f"{path}.parameters.weights",
            ),
            bias=float(_need(params, "bias", f"{path}.parameters")),
            ridge_lambda=float(_need(hp, "ridge_lambda", f"{path}.hyperparams")),
            scaler=scaler,
            auto_ridged=bool(_need(params, "auto_ridged", f"{path}.parameters")),
            training_meta=dict(meta),
        )
    if kind == "tree":
        return TreeModel(
            root=_tree_from_json(
                _need(params, "root", f"{path}.parameters"), f"{path}.parameters.root"
            ),
            max_depth=int(_need(hp, "max_depth", f"{path}.hyperparams")),
            min_samples_leaf=int(
                _need(hp, "min_samples_leaf", f"{path}.hyperparams")
            ),
            training_meta=dict(meta),
        )
    if kind == "mlp":
        if scaler is None:
            raise SchemaError("mlp model needs a scaler", field_path=f"{path}.scaler")
        hyper = MlpHyperparams(
            hidden_layers=int(_need(hp, "hidden_layers", f"{path}.hyperparams")),
            units_per_hidden=int(
                _need(hp, "units_per_hidden", f"{path}.hyperparams")
            ),
            iterations=int(_need(hp, "iterations", f"{path}.hyperparams")),
            learning_rate=float(_need(hp, "learning_rate", f"{path}.hyperparams")),
            init_seed=int(_need(hp, "init_seed", f"{path}.hyperparams")),
        )
        w_raw = _need(params, "weights", f"{path}.parameters")
        b_raw = _need(params, "biases", f"{path}.parameters")
        if not isinstance(w_raw, list) or not isinstance(b_raw, list):
            raise SchemaError(
                "weights/biases must be lists", field_path=f"{path}.parameters"
            )
        if len(w_raw) != len(b_raw) or len(w_raw) != hyper.hidden_layers + 1:
            raise SchemaError(
                "layer count does not match hyperparams",
                field_path=f"{path}.parameters.weights",
            )
        weights, biases = [], []
        for li, (W, b) in enumerate(zip(w_raw, b_raw)):
            try:
                weights.append(np.array(W, dtype=np.float64))
                biases.append(np.array(b, dtype=np.float64))
            except (TypeError, ValueError):
                raise SchemaError(
                    "bad layer parameters",
                    field_path=f"{path}.parameters.weights[{li}]",
                ) from None
            if weights[-1].ndim != 2 or biases[-1].ndim != 1:
                raise SchemaError(
                    "bad layer shape", field_path=f"{path}.parameters.weights[{li}]"
                )
        sizes = hyper.layer_sizes(n_features=weights[0].shape[0])
        for li, W in enumerate(weights):
            if W.shape != (sizes[li], sizes[li + 1]) or biases[li].shape != (
                sizes[li + 1],
            ):
                raise SchemaError(
                    "layer dimensions do not chain",
                    field_path=f"{path}.parameters.weights[{li}]",
                )
        return MlpModel(
            weights=weights,
            biases=biases,
            hyperparams=hyper,
            scaler=scaler,
            training_meta=dict(meta),
        )
    raise SchemaError(f"unknown model kind {kind!r}", field_path=f"{path}.kind")


def save_model(model, path) -> None:
    """Serialize atomically: write a temp file in place, then rename."""
    doc = model_to_json(model)
    data = json.dumps(doc, indent=2, sort_keys=True)
    directory = os.path.dirname(os.fspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read model file: {exc}", field_path=str(path))
    except json.JSONDecodeError as exc:
        raise SchemaError(
            f"model file is not valid JSON: {exc}", field_path=str(path)
        ) from None
    return model_from_json(doc)
