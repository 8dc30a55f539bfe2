"""Out-of-fold stacking of the four base regressors under a ridge meta-learner."""

from __future__ import annotations

import numpy as np

from ..core import derive_seed, rng_for
from .ensemble import check_width, check_xy

BASE_KINDS = ("forest", "gbm", "xgb", "mlp")
META_RIDGE = 1e-6


def kfold_slices(n: int, k: int):
    """Contiguous ``(start, stop)`` bounds of k folds whose sizes differ by at most one."""
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    bounds, start = [], 0
    for s in sizes:
        bounds.append((start, start + s))
        start += s
    return bounds


def fit_meta(Z, y, ridge: float = META_RIDGE):
    """Least squares of ``y`` on the columns of ``Z`` with a free intercept.

    The ridge penalty applies to the coefficients only. Returns
    ``(coef, intercept)``.
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float)
    zm = Z.mean(axis=0)
    ym = float(y.mean())
    Zc = Z - zm
    A = Zc.T @ Zc + ridge * np.eye(Z.shape[1])
    coef = np.linalg.solve(A, Zc.T @ (y - ym))
    return coef, ym - float(zm @ coef)


class StackedModel:
    kind = "stacked"

    def __init__(self, bases, coef, intercept, oof_folds=5):
        self.bases = list(bases)  # fitted models, in declared order
        self.coef = np.asarray(coef, dtype=float)
        self.intercept = float(intercept)
        self.oof_folds = oof_folds
        self.n_features = self.bases[0].n_features

    @property
    def base_kinds(self):
        return tuple(b.kind for b in self.bases)

    def base_predictions(self, X) -> np.ndarray:
        X = check_width(X, self.n_features)
        return np.column_stack([b.predict(X) for b in self.bases])

    def predict(self, X) -> np.ndarray:
        return self.intercept + self.base_predictions(X) @ self.coef

    def to_payload(self) -> dict:
        from .serialize import model_to_dict

        return {
            "oof_folds": self.oof_folds,
            "coef": [float(c) for c in self.coef],
            "intercept": self.intercept,
            "bases": [model_to_dict(b) for b in self.bases],
        }

    @classmethod
    def from_payload(cls, d) -> "StackedModel":
        from .serialize import model_from_dict

        return cls([model_from_dict(b) for b in d["bases"]], d["coef"], d["intercept"], d["oof_folds"])


def fit_stacked(X, y, seed: int = 0, base_kinds=BASE_KINDS, configs=None, folds: int = 5, threads: int = 1, ridge=META_RIDGE):
    """Fit the base models out-of-fold, learn the combiner, then refit the bases on all rows."""
    from . import fit_model

    X, y = check_xy(X, y)
    n = X.shape[0]
    if n < 5 * folds:
        raise ValueError(f"X: stacking with {folds} folds needs at least {5 * folds} rows, got {n}")
    configs = configs or {}
    order = rng_for(seed, "stack-fold").permutation(n)
    oof = np.zeros((n, len(base_kinds)))
    for f, (a, b) in enumerate(kfold_slices(n, folds)):
        va = order[a:b]
        tr = np.concatenate([order[:a], order[b:]])
        for j, kind in enumerate(base_kinds):
            m = fit_model(kind, X[tr], y[tr], configs.get(kind), rng_seed(seed, kind, j, f), threads)
            oof[va, j] = m.predict(X[va])
    coef, intercept = fit_meta(oof, y, ridge)
    bases = [fit_model(kind, X, y, configs.get(kind), rng_seed(seed, kind, j, folds), threads) for j, kind in enumerate(base_kinds)]
    model = StackedModel(bases, coef, intercept, folds)
    model.oof_predictions = oof
    return model


def rng_seed(seed, kind, slot, fold):
    return derive_seed(seed, f"stack-{slot}-{kind}", fold)
