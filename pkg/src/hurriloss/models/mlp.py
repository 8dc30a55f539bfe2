"""Single-hidden-layer ReLU regressor trained with Adam and early stopping."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..core import rng_for
from .ensemble import check_width, check_xy


@dataclass
class MlpConfig:
    hidden: int = 100
    l2: float = 0.01
    max_epochs: int = 500
    patience: int = 10
    val_fraction: float = 0.1
    lr: float = 1e-3
    batch_size: int = 32
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class MlpParams:
    w1: np.ndarray  # p x hidden
    b1: np.ndarray  # hidden
    w2: np.ndarray  # hidden
    b2: float

    def copy(self) -> "MlpParams":
        return MlpParams(self.w1.copy(), self.b1.copy(), self.w2.copy(), float(self.b2))

    def flat(self) -> np.ndarray:
        return np.concatenate([self.w1.ravel(), self.b1, self.w2, [self.b2]])

    @classmethod
    def unflat(cls, v, p, hidden) -> "MlpParams":
        v = np.asarray(v, dtype=float)
        i = p * hidden
        return cls(v[:i].reshape(p, hidden).copy(), v[i : i + hidden].copy(), v[i + hidden : i + 2 * hidden].copy(), float(v[-1]))


def forward(params: MlpParams, X):
    z = X @ params.w1 + params.b1
    a = np.maximum(z, 0.0)
    return a @ params.w2 + params.b2, z, a


def loss_and_grad(params: MlpParams, X, y, l2: float):
    """Objective ``mean((yhat - y)**2) + l2 * (|w1|^2 + |w2|^2)`` and its gradient."""
    n = X.shape[0]
    yhat, z, a = forward(params, X)
    r = yhat - y
    loss = float(np.dot(r, r) / n + l2 * (np.sum(params.w1**2) + np.dot(params.w2, params.w2)))
    d_out = 2.0 * r / n
    g_w2 = a.T @ d_out + 2.0 * l2 * params.w2
    g_b2 = float(np.sum(d_out))
    d_z = np.outer(d_out, params.w2) * (z > 0)
    g_w1 = X.T @ d_z + 2.0 * l2 * params.w1
    g_b1 = d_z.sum(axis=0)
    return loss, MlpParams(g_w1, g_b1, g_w2, g_b2)


def init_params(p: int, hidden: int, rng, output_bias: float = 0.0) -> MlpParams:
    """Uniform init with bound ``sqrt(6 / fan_in)``; biases start at zero except the output."""
    lim1 = math.sqrt(6.0 / p)
    lim2 = math.sqrt(6.0 / hidden)
    return MlpParams(
        rng.uniform(-lim1, lim1, size=(p, hidden)),
        np.zeros(hidden),
        rng.uniform(-lim2, lim2, size=hidden),
        float(output_bias),
    )


class MlpModel:
    kind = "mlp"

    def __init__(self, params: MlpParams, config: MlpConfig, epochs_run: int = 0, best_val_loss: float = math.nan):
        self.params = params
        self.config = config
        self.epochs_run = epochs_run
        self.best_val_loss = best_val_loss
        self.n_features = params.w1.shape[0]

    def predict(self, X) -> np.ndarray:
        X = check_width(X, self.n_features)
        return forward(self.params, X)[0]

    def to_payload(self) -> dict:
        p = self.params
        return {
            "config": asdict(self.config),
            "epochs_run": self.epochs_run,
            "best_val_loss": self.best_val_loss,
            "w1": [[float(v) for v in row] for row in p.w1],
            "b1": [float(v) for v in p.b1],
            "w2": [float(v) for v in p.w2],
            "b2": float(p.b2),
        }

    @classmethod
    def from_payload(cls, d) -> "MlpModel":
        cfg = MlpConfig(**d["config"])
        w1 = np.array(d["w1"], dtype=float).reshape(-1, cfg.hidden)
        params = MlpParams(w1, np.array(d["b1"], dtype=float), np.array(d["w2"], dtype=float), float(d["b2"]))
        return cls(params, cfg, d["epochs_run"], d["best_val_loss"])


def fit_mlp(X, y, config: MlpConfig = None, seed: int = 0) -> MlpModel:
    config = config or MlpConfig()
    X, y = check_xy(X, y)
    n, p = X.shape
    if n < 10:
        raise ValueError(f"X: MLP training needs at least 10 rows, got {n}")
    order = rng_for(seed, "mlp-split").permutation(n)
    n_val = max(1, int(math.ceil(config.val_fraction * n)))
    tr, va = order[: n - n_val], order[n - n_val :]
    Xt, yt, Xv, yv = X[tr], y[tr], X[va], y[va]

    params = init_params(p, config.hidden, rng_for(seed, "mlp-init"), output_bias=float(np.mean(yt)))
    m = MlpParams(np.zeros_like(params.w1), np.zeros(config.hidden), np.zeros(config.hidden), 0.0)
    v = MlpParams(np.zeros_like(params.w1), np.zeros(config.hidden), np.zeros(config.hidden), 0.0)
    batches = rng_for(seed, "mlp-batches")
    b1, b2, lr, eps = config.beta1, config.beta2, config.lr, config.eps

    def val_loss(prm):
        r = forward(prm, Xv)[0] - yv
        return float(np.dot(r, r) / len(r))

    best = params.copy()
    best_loss = val_loss(params)
    stale = 0
    step = 0
    epochs = 0
    for epoch in range(config.max_epochs):
        epochs = epoch + 1
        perm = batches.permutation(len(tr))
        for start in range(0, len(tr), config.batch_size):
            idx = perm[start : start + config.batch_size]
            _, g = loss_and_grad(params, Xt[idx], yt[idx], config.l2)
            step += 1
            c1 = 1.0 - b1**step
            c2 = 1.0 - b2**step
            for name in ("w1", "b1", "w2"):
                gm = getattr(g, name)
                mm = getattr(m, name)
                vv = getattr(v, name)
                mm *= b1
                mm += (1.0 - b1) * gm
                vv *= b2
                vv += (1.0 - b2) * gm * gm
                getattr(params, name)[...] -= lr * (mm / c1) / (np.sqrt(vv / c2) + eps)
            m.b2 = b1 * m.b2 + (1.0 - b1) * g.b2
            v.b2 = b2 * v.b2 + (1.0 - b2) * g.b2 * g.b2
            params.b2 -= lr * (m.b2 / c1) / (math.sqrt(v.b2 / c2) + eps)
        current = val_loss(params)
        if current < best_loss:
            best_loss = current
            best = params.copy()
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    return MlpModel(best, config, epochs, best_loss)
