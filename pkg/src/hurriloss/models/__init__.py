"""Regressors: random forest, GBM, second-order boosting, MLP and stacking."""

from __future__ import annotations

from dataclasses import fields

from .ensemble import (
    ForestConfig,
    ForestModel,
    GbmConfig,
    GbmModel,
    XgbConfig,
    XgbModel,
    fit_gbm,
    fit_random_forest,
    fit_xgb,
    leaf_weight,
)
from .importance import gain_importance, ranked
from .mlp import MlpConfig, MlpModel, fit_mlp
from .serialize import KINDS, ModelFormatError, load_model, save_model
from .stacked import BASE_KINDS, StackedModel, fit_meta, fit_stacked
from .tree import DecisionTree, TreeParams, grow_tree

MODEL_KINDS = tuple(KINDS)

CONFIGS = {"forest": ForestConfig, "gbm": GbmConfig, "xgb": XgbConfig, "mlp": MlpConfig}


def fit_tree(X, y, params: TreeParams = None, seed: int = 0) -> DecisionTree:
    """Plain CART regression tree (all features considered at every split)."""
    from ..core import rng_for

    params = params or TreeParams()
    return grow_tree(X, y, params, mode="sse", rng=rng_for(seed, "tree", 0))


def make_config(kind: str, overrides=None):
    """Config object for ``kind`` with ``overrides`` (a dict) applied."""
    if kind not in CONFIGS:
        raise ValueError(f"kind: no config for {kind!r}; valid kinds: {sorted(CONFIGS)}")
    cls = CONFIGS[kind]
    if overrides is None:
        return cls()
    if isinstance(overrides, cls):
        return overrides
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise ValueError(f"{kind} config: unknown keys {unknown}; valid keys: {sorted(known)}")
    return cls(**overrides)


def fit_model(kind: str, X, y, config=None, seed: int = 0, threads: int = 1):
    if kind == "forest":
        return fit_random_forest(X, y, make_config(kind, config), seed, threads)
    if kind == "gbm":
        return fit_gbm(X, y, make_config(kind, config), seed)
    if kind == "xgb":
        return fit_xgb(X, y, make_config(kind, config), seed)
    if kind == "mlp":
        return fit_mlp(X, y, make_config(kind, config), seed)
    if kind == "stacked":
        config = dict(config or {})
        base_kinds = tuple(config.pop("base_kinds", BASE_KINDS))
        folds = int(config.pop("folds", 5))
        return fit_stacked(X, y, seed, base_kinds=base_kinds, configs=config, folds=folds, threads=threads)
    raise ValueError(f"kind: unknown model kind {kind!r}; valid kinds: {', '.join(MODEL_KINDS)}")


def predict(model, rows):
    return model.predict(rows)


__all__ = [
    "BASE_KINDS",
    "MODEL_KINDS",
    "DecisionTree",
    "ForestConfig",
    "ForestModel",
    "GbmConfig",
    "GbmModel",
    "MlpConfig",
    "MlpModel",
    "ModelFormatError",
    "StackedModel",
    "TreeParams",
    "XgbConfig",
    "XgbModel",
    "fit_gbm",
    "fit_meta",
    "fit_mlp",
    "fit_model",
    "fit_random_forest",
    "fit_stacked",
    "fit_tree",
    "fit_xgb",
    "gain_importance",
    "leaf_weight",
    "load_model",
    "make_config",
    "predict",
    "ranked",
    "save_model",
]
