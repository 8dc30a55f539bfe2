"""Tree ensembles: bagged random forest and two flavours of boosting."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from ..core import rng_for
from .tree import DecisionTree, TreeParams, grow_tree


def check_xy(X, y, min_rows=1):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("X: need a non-empty 2-D array")
    if y.shape != (X.shape[0],):
        raise ValueError(f"y: expected {X.shape[0]} values, got shape {y.shape}")
    if X.shape[0] < min_rows:
        raise ValueError(f"X: need at least {min_rows} rows, got {X.shape[0]}")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise ValueError("X: inputs contain non-finite values")
    return X, y


def check_width(X, n_features):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != n_features:
        raise ValueError(f"rows: expected {n_features} features, got {X.shape[1]}")
    return X


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


# -- random forest -------------------------------------------------------------------


@dataclass
class ForestConfig:
    n_trees: int = 100
    max_depth: Optional[int] = 10
    min_samples_leaf: int = 1
    features_per_split: object = "third"  # "third" = max(1, p // 3), "all", or a count
    bootstrap: bool = True


class ForestModel:
    kind = "forest"

    def __init__(self, trees, config: ForestConfig, seed: int, n_features: int):
        self.trees = list(trees)
        self.config = config
        self.seed = seed
        self.n_features = n_features

    def predict(self, X) -> np.ndarray:
        X = check_width(X, self.n_features)
        total = np.zeros(X.shape[0])
        for t in self.trees:
            total += t.predict(X)
        return total / len(self.trees)

    def to_payload(self) -> dict:
        return {
            "config": asdict(self.config),
            "seed": self.seed,
            "n_features": self.n_features,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_payload(cls, d) -> "ForestModel":
        return cls([DecisionTree.from_dict(t) for t in d["trees"]], ForestConfig(**d["config"]), d["seed"], d["n_features"])


def fit_random_forest(X, y, config: Optional[ForestConfig] = None, seed: int = 0, threads: int = 1) -> ForestModel:
    config = config or ForestConfig()
    X, y = check_xy(X, y, min_rows=2)
    if config.n_trees < 1:
        raise ValueError("n_trees: must be at least 1")
    n, p = X.shape
    fps = config.features_per_split
    if fps == "third":
        fps = max(1, p // 3)
    params = TreeParams(config.max_depth, config.min_samples_leaf, fps)

    def one(t):
        rng = rng_for(seed, "tree", t)
        if config.bootstrap:
            idx = rng.integers(0, n, size=n)
            return grow_tree(X[idx], y[idx], params, rng=rng)
        return grow_tree(X, y, params, rng=rng)

    return ForestModel(_map(one, range(config.n_trees), threads), config, seed, p)


# -- gradient boosting ---------------------------------------------------------------


@dataclass
class GbmConfig:
    n_rounds: int = 100
    learning_rate: float = 0.1
    max_depth: Optional[int] = 4
    min_samples_leaf: int = 1


@dataclass
class XgbConfig:
    n_rounds: int = 100
    learning_rate: float = 0.1
    max_depth: Optional[int] = 4
    reg_lambda: float = 1.0
    min_samples_leaf: int = 1


class BoostedModel:
    """``base_score + learning_rate * sum(tree(x))``."""

    kind = "boosted"
    config_cls = GbmConfig

    def __init__(self, base_score: float, trees, config, n_features: int, train_mse=()):
        self.base_score = float(base_score)
        self.trees = list(trees)
        self.config = config
        self.n_features = n_features
        self.train_mse = tuple(train_mse)

    @property
    def learning_rate(self) -> float:
        return self.config.learning_rate

    @property
    def n_rounds(self) -> int:
        return len(self.trees)

    def predict(self, X) -> np.ndarray:
        X = check_width(X, self.n_features)
        total = np.zeros(X.shape[0])
        for t in self.trees:
            total += t.predict(X)
        return self.base_score + self.learning_rate * total

    def to_payload(self) -> dict:
        return {
            "config": asdict(self.config),
            "base_score": self.base_score,
            "n_features": self.n_features,
            "train_mse": list(self.train_mse),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_payload(cls, d):
        return cls(
            d["base_score"],
            [DecisionTree.from_dict(t) for t in d["trees"]],
            cls.config_cls(**d["config"]),
            d["n_features"],
            d["train_mse"],
        )


class GbmModel(BoostedModel):
    kind = "gbm"
    config_cls = GbmConfig


class XgbModel(BoostedModel):
    kind = "xgb"
    config_cls = XgbConfig

    @property
    def reg_lambda(self) -> float:
        return self.config.reg_lambda


def _boost(X, y, config, step):
    base = float(np.mean(y))
    pred = np.full(len(y), base)
    trees = []
    trace = [float(np.mean((y - pred) ** 2))]
    # accumulate the tree sum separately so training predictions match predict()
    acc = np.zeros(len(y))
    for _ in range(config.n_rounds):
        tree = step(pred)
        trees.append(tree)
        acc += tree.predict(X)
        pred = base + config.learning_rate * acc
        trace.append(float(np.mean((y - pred) ** 2)))
    return base, trees, trace


def fit_gbm(X, y, config: Optional[GbmConfig] = None, seed: int = 0) -> GbmModel:
    """Least-squares gradient boosting: each round fits a CART tree to the residuals."""
    config = config or GbmConfig()
    X, y = check_xy(X, y)
    if config.n_rounds < 0:
        raise ValueError("n_rounds: must be non-negative")
    params = TreeParams(config.max_depth, config.min_samples_leaf, "all")
    base, trees, trace = _boost(X, y, config, lambda pred: grow_tree(X, y - pred, params, mode="sse"))
    return GbmModel(base, trees, config, X.shape[1], trace)


def fit_xgb(X, y, config: Optional[XgbConfig] = None, seed: int = 0) -> XgbModel:
    """Second-order boosting with L2-regularized leaf weights (squared loss, so h = 1)."""
    config = config or XgbConfig()
    X, y = check_xy(X, y)
    if config.n_rounds < 0:
        raise ValueError("n_rounds: must be non-negative")
    if config.reg_lambda < 0:
        raise ValueError("reg_lambda: must be non-negative")
    params = TreeParams(config.max_depth, config.min_samples_leaf, "all")
    hess = np.ones(len(y))

    def step(pred):
        return grow_tree(X, pred - y, params, mode="newton", hess=hess, reg_lambda=config.reg_lambda)

    base, trees, trace = _boost(X, y, config, step)
    return XgbModel(base, trees, config, X.shape[1], trace)


def leaf_weight(grad_sum: float, hess_sum: float, reg_lambda: float) -> float:
    """Optimal leaf weight ``-G / (H + lambda)``."""
    return -grad_sum / (hess_sum + reg_lambda)


__all__ = [
    "ForestConfig",
    "ForestModel",
    "GbmConfig",
    "GbmModel",
    "XgbConfig",
    "XgbModel",
    "fit_random_forest",
    "fit_gbm",
    "fit_xgb",
    "leaf_weight",
]
