"""Extremely randomized forest regressor.

Every tree trains on the full sample (no bootstrap) and considers every
feature at every node, drawing one uniform threshold per non-constant
feature and keeping the (feature, threshold) pair with the greatest
variance reduction. Prediction is the mean over trees; feature
importance is the normalized total variance reduction each feature
contributed across all nodes of all trees.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._backend import BACKEND, grow_tree
from ._splitmix import tree_seeds

DEFAULT_N_ESTIMATORS = 1000

#: Stand-in for "no limit" inside the integer-typed kernels.
UNLIMITED = 0x7FFFFFFF

HP_KEYS = ("max_depth", "min_samples_leaf", "min_samples_split", "max_leaf_nodes")

DEFAULT_HP = {
    "max_depth": None,
    "min_samples_leaf": 1,
    "min_samples_split": 2,
    "max_leaf_nodes": None,
}


class SchemaMismatchError(ValueError):
    """Model applied to features with a different schema."""


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            internal = feat >= 0
            if not internal.any():
                break
            rows = np.nonzero(internal)[0]
            cur = node[rows]
            go_left = X[rows, feat[rows]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
        return self.value[node]


@dataclass
class Forest:
    trees: list[Tree]
    hyperparameters: dict
    master_seed: int
    seeds: np.ndarray
    n_features: int
    feature_names: list[str] | None
    fingerprint: str
    raw_importances: np.ndarray = field(repr=False, default=None)
    backend: str = BACKEND

    @property
    def n_estimators(self) -> int:
        return len(self.trees)

    def predict(self, X: np.ndarray, feature_names: list[str] | None = None) -> np.ndarray:
        return predict(self, X, feature_names)


def schema_fingerprint(n_features: int, feature_names: list[str] | None) -> str:
    basis = f"{n_features}:" + ",".join(feature_names or [])
    return hashlib.sha256(basis.encode("utf-8")).hexdigest()[:16]


def _normalize_hp(hp: dict | None) -> dict:
    merged = dict(DEFAULT_HP)
    if hp:
        unknown = set(hp) - set(HP_KEYS)
        if unknown:
            raise ValueError(f"unknown hyperparameters: {sorted(unknown)}")
        merged.update(hp)
    for key in ("min_samples_leaf", "min_samples_split"):
        if merged[key] is None or merged[key] < 1:
            raise ValueError(f"{key} must be a positive integer")
    for key in ("max_depth", "max_leaf_nodes"):
        if merged[key] is not None and merged[key] < 1:
            raise ValueError(f"{key} must be positive or None")
    return merged


def fit(
    X: np.ndarray,
    y: np.ndarray,
    hp: dict | None = None,
    seed: int = 0,
    n_estimators: int = DEFAULT_N_ESTIMATORS,
    feature_names: list[str] | None = None,
) -> Forest:
    """Fit the forest on the full training set.

    A constant target produces single-leaf trees and an all-zero
    importance vector, with a warning.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need a 2-D feature matrix with at least 2 rows")
    if y.shape != (X.shape[0],):
        raise ValueError("y must have one value per row of X")
    if feature_names is not None and len(feature_names) != X.shape[1]:
        raise ValueError("one feature name per column required")
    hp = _normalize_hp(hp)
    if float(np.ptp(y)) == 0.0:
        warnings.warn("constant target: trees degenerate to single leaves",
                      stacklevel=2)
    seeds = tree_seeds(int(seed), n_estimators)
    max_depth = hp["max_depth"] if hp["max_depth"] is not None else UNLIMITED
    max_leaf = hp["max_leaf_nodes"] if hp["max_leaf_nodes"] is not None else UNLIMITED
    trees: list[Tree] = []
    raw_importance = np.zeros(X.shape[1])
    for s in seeds:
        grown = grow_tree(
            X,
            y,
            int(max_depth),
            int(hp["min_samples_split"]),
            int(hp["min_samples_leaf"]),
            int(max_leaf),
            int(s),
        )
        raw_importance += grown.pop("importances")
        trees.append(Tree(**grown))
    return Forest(
        trees=trees,
        hyperparameters=hp,
        master_seed=int(seed),
        seeds=seeds,
        n_features=X.shape[1],
        feature_names=list(feature_names) if feature_names is not None else None,
        fingerprint=schema_fingerprint(X.shape[1], feature_names),
        raw_importances=raw_importance,
    )


def predict(forest: Forest, X: np.ndarray, feature_names: list[str] | None = None) -> np.ndarray:
    """Mean of per-tree predictions."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != forest.n_features:
        raise SchemaMismatchError(
            f"model expects {forest.n_features} features, got "
            f"{X.shape[1] if X.ndim == 2 else 'non-2D input'}"
        )
    if feature_names is not None:
        if schema_fingerprint(X.shape[1], list(feature_names)) != forest.fingerprint:
            raise SchemaMismatchError("feature names do not match the training schema")
    out = np.zeros(X.shape[0])
    for tree in forest.trees:
        out += tree.predict(X)
    return out / forest.n_estimators


def feature_importance(forest: Forest) -> np.ndarray:
    """Normalized mean-decrease-impurity importances (sum to 1).

    A forest that never split returns all zeros with a warning.
    """
    total = forest.raw_importances.sum()
    if total <= 0.0:
        warnings.warn("forest contains no splits; importances are all zero",
                      stacklevel=2)
        return np.zeros(forest.n_features)
    return forest.raw_importances / total


def save_forest(forest: Forest, path) -> None:
    """Serialize to versioned JSON."""
    payload = {
        "schema_version": 1,
        "backend": forest.backend,
        "n_features": forest.n_features,
        "feature_names": forest.feature_names,
        "fingerprint": forest.fingerprint,
        "hyperparameters": forest.hyperparameters,
        "master_seed": forest.master_seed,
        "seeds": [int(s) for s in forest.seeds],
        "raw_importances": [float(v) for v in forest.raw_importances],
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "value": t.value.tolist(),
                "n_samples": t.n_samples.tolist(),
            }
            for t in forest.trees
        ],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def load_forest(path) -> Forest:
    with open(path, encoding="utf-8") as f:
        payload = json.load(f)
    if payload.get("schema_version") != 1:
        raise ValueError(f"unsupported model schema version {payload.get('schema_version')}")
    trees = [
        Tree(
            feature=np.asarray(t["feature"], dtype=np.int32),
            threshold=np.asarray(t["threshold"], dtype=np.float64),
            left=np.asarray(t["left"], dtype=np.int32),
            right=np.asarray(t["right"], dtype=np.int32),
            value=np.asarray(t["value"], dtype=np.float64),
            n_samples=np.asarray(t["n_samples"], dtype=np.int32),
        )
        for t in payload["trees"]
    ]
    return Forest(
        trees=trees,
        hyperparameters=payload["hyperparameters"],
        master_seed=payload["master_seed"],
        seeds=np.asarray(payload["seeds"], dtype=np.uint64),
        n_features=payload["n_features"],
        feature_names=payload["feature_names"],
        fingerprint=payload["fingerprint"],
        raw_importances=np.asarray(payload["raw_importances"], dtype=np.float64),
        backend=payload.get("backend", "unknown"),
    )
