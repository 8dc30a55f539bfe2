"""Gain-based feature importance for tree ensembles."""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from .ensemble import BoostedModel, ForestModel
from .tree import LEAF


def gain_importance(model, feature_names=None) -> "OrderedDict[str, float]":
    """Share of total split gain per feature, in feature order.

    Features that never split get 0. A model without any split yields an
    empty table.
    """
    if not isinstance(model, (ForestModel, BoostedModel)):
        raise TypeError("importance requires a tree ensemble")
    p = model.n_features
    if feature_names is None:
        feature_names = getattr(model, "feature_names", None) or [f"x{j}" for j in range(p)]
    totals = np.zeros(p)
    for tree in model.trees:
        split = tree.feature != LEAF
        np.add.at(totals, tree.feature[split], tree.gain[split])
    grand = totals.sum()
    if grand <= 0:
        return OrderedDict()
    return OrderedDict((name, float(v / grand)) for name, v in zip(feature_names, totals))


def ranked(table) -> list:
    """``(feature, share)`` pairs sorted by descending share, name as tie-break."""
    return sorted(table.items(), key=lambda kv: (-kv[1], kv[0]))
