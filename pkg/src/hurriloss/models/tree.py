"""Greedy binary regression trees.

One builder serves two split criteria:

* ``"sse"`` -- CART regression. A split's gain is the reduction in the
  sum of squared errors and a leaf predicts the node mean.
* ``"newton"`` -- second-order boosting trees for squared loss. With
  gradients ``g`` and hessians ``h`` the gain is
  ``0.5 * (G_L**2/(H_L+lam) + G_R**2/(H_R+lam) - G**2/(H+lam))`` and a
  leaf weighs ``-G/(H+lam)``.

Thresholds are midpoints between consecutive distinct values of the node's
samples; a sample goes left when ``x <= threshold``. Among equally good
splits the lowest feature index wins, then the lowest threshold. Gains
closer than ``TIE_RTOL`` relative to the node's total score count as
equal, so that the same partition reached through two features is always
credited to the first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

TIE_RTOL = 1e-12

LEAF = -1


@dataclass
class TreeParams:
    max_depth: Optional[int] = None  # None = unlimited
    min_samples_leaf: int = 1
    features_per_split: object = "all"  # "all" or a count

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError(f"max_depth: must be >= 1, got {self.max_depth}")
        if self.min_samples_leaf < 1:
            raise ValueError(f"min_samples_leaf: must be >= 1, got {self.min_samples_leaf}")
        if self.features_per_split != "all":
            if int(self.features_per_split) < 1:
                raise ValueError("features_per_split: must be 'all' or a positive count")

    def n_candidates(self, p: int) -> int:
        if self.features_per_split == "all":
            return p
        return min(p, int(self.features_per_split))


class DecisionTree:
    """Flat array tree. Node 0 is the root; nodes are stored in preorder."""

    def __init__(self, feature, threshold, left, right, value, gain, n_samples, n_features):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float)
        self.gain = np.asarray(gain, dtype=float)
        self.n_samples = np.asarray(n_samples, dtype=np.int64)
        self.n_features = int(n_features)
        for a in (self.feature, self.threshold, self.left, self.right, self.value, self.gain, self.n_samples):
            a.flags.writeable = False

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == LEAF))

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max()) if self.n_nodes else 0

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by every row."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.feature[node] != LEAF
        while np.any(active):
            r = rows[active]
            nd = node[r]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] != LEAF
        return node

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "n_features": self.n_features,
            "feature": self.feature.tolist(),
            "threshold": [float(v) for v in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": [float(v) for v in self.value],
            "gain": [float(v) for v in self.gain],
            "n_samples": self.n_samples.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "DecisionTree":
        return cls(
            d["feature"], d["threshold"], d["left"], d["right"], d["value"], d["gain"], d["n_samples"], d["n_features"]
        )


@njit(cache=True, nogil=True)
def _grow(X, target, hess, newton, lam, max_depth, min_leaf, cand_keys, k, tie_rtol):
    """Grow the tree structure.

    Returns per-node arrays plus ``samples``: a permutation of the row
    indices in which every node owns the slice ``[start, stop)``, kept in
    ascending row order.
    """
    n, p = X.shape
    cap = 2 * n
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    gain = np.zeros(cap)
    start = np.zeros(cap, np.int64)
    stop = np.zeros(cap, np.int64)
    samples = np.arange(n)
    scratch = np.empty(n, np.int64)
    gains = np.empty(n)
    # stack rows: start, stop, depth, parent, is_left
    stack = np.empty((cap, 5), np.int64)
    stack[0, 0] = 0
    stack[0, 1] = n
    stack[0, 2] = 0
    stack[0, 3] = -1
    stack[0, 4] = 0
    top = 1
    n_nodes = 0
    all_feats = np.arange(p)
    while top > 0:
        top -= 1
        a = stack[top, 0]
        b = stack[top, 1]
        depth = stack[top, 2]
        parent = stack[top, 3]
        node = n_nodes
        n_nodes += 1
        start[node] = a
        stop[node] = b
        if parent >= 0:
            if stack[top, 4] == 1:
                left[parent] = node
            else:
                right[parent] = node
        m = b - a
        if max_depth >= 0 and depth >= max_depth:
            continue
        if m < 2 * min_leaf:
            continue
        rows = samples[a:b]
        t = target[rows].copy()
        hr = hess[rows]
        if newton:
            total_t = t.sum()
            total_h = hr.sum()
            tol = tie_rtol * 0.5 * np.dot(t, t)
        else:
            constant = True
            for i in range(1, m):
                if t[i] != t[0]:
                    constant = False
                    break
            if constant:
                continue
            t -= t.mean()
            total_t = t.sum()
            total_h = float(m)
            tol = tie_rtol * np.dot(t, t)
        if k < p:
            cand = np.sort(np.argsort(cand_keys[node])[:k])
        else:
            cand = all_feats
        best_gain = -np.inf
        best_f = -1
        best_thr = 0.0
        for f in cand:
            xs_raw = X[rows, f]
            order = np.argsort(xs_raw, kind="mergesort")
            fmax = -np.inf
            ct = 0.0
            ch = 0.0
            for i in range(m - 1):
                ct += t[order[i]]
                ch += hr[order[i]]
                g = -np.inf
                nl = i + 1
                if xs_raw[order[i]] < xs_raw[order[i + 1]] and nl >= min_leaf and m - nl >= min_leaf:
                    if newton:
                        g = 0.5 * (ct * ct / (ch + lam) + (total_t - ct) ** 2 / (total_h - ch + lam)
                                   - total_t * total_t / (total_h + lam))
                    else:
                        g = ct * ct / nl + (total_t - ct) ** 2 / (m - nl) - total_t * total_t / m
                gains[i] = g
                if g > fmax:
                    fmax = g
            if fmax == -np.inf:
                continue
            # lowest threshold among near-ties within the feature
            pos = 0
            for i in range(m - 1):
                if gains[i] >= fmax - tol:
                    pos = i
                    break
            if best_f < 0 or gains[pos] > best_gain + tol:
                best_gain = gains[pos]
                best_f = f
                best_thr = (xs_raw[order[pos]] + xs_raw[order[pos + 1]]) / 2.0
        if best_f < 0 or best_gain <= tol:
            continue
        feature[node] = best_f
        threshold[node] = best_thr
        gain[node] = best_gain
        # stable partition keeps both halves in ascending row order
        nl = 0
        nr = 0
        for i in range(m):
            r = rows[i]
            if X[r, best_f] <= best_thr:
                samples[a + nl] = r
                nl += 1
            else:
                scratch[nr] = r
                nr += 1
        for i in range(nr):
            samples[a + nl + i] = scratch[i]
        # right pushed first so the left subtree is allocated first (preorder)
        stack[top, 0] = a + nl
        stack[top, 1] = b
        stack[top, 2] = depth + 1
        stack[top, 3] = node
        stack[top, 4] = 0
        top += 1
        stack[top, 0] = a
        stack[top, 1] = a + nl
        stack[top, 2] = depth + 1
        stack[top, 3] = node
        stack[top, 4] = 1
        top += 1
    return feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], gain[:n_nodes], \
        start[:n_nodes], stop[:n_nodes], samples


def grow_tree(X, target, params: TreeParams, mode="sse", hess=None, reg_lambda=0.0, rng=None) -> DecisionTree:
    """Grow a tree on ``target`` (values for ``"sse"``, gradients for ``"newton"``)."""
    X = np.ascontiguousarray(X, dtype=float)
    target = np.ascontiguousarray(target, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("X: need a non-empty 2-D array")
    n, p = X.shape
    if target.shape != (n,):
        raise ValueError(f"y: expected {n} values, got shape {target.shape}")
    if not np.all(np.isfinite(target)):
        raise ValueError("y: contains non-finite values")
    if mode not in ("sse", "newton"):
        raise ValueError(f"mode: unknown split criterion {mode!r}")
    h = np.ones(n) if hess is None else np.ascontiguousarray(hess, dtype=float)
    k = params.n_candidates(p)
    if k < p:
        if rng is None:
            raise ValueError("rng: feature subsampling needs a random generator")
        # one row of sort keys per potential node; the k smallest pick its features
        keys = rng.random((2 * n, p))
    else:
        keys = np.zeros((1, 1))
    max_depth = -1 if params.max_depth is None else int(params.max_depth)
    feature, threshold, left, right, gain, start, stop, samples = _grow(
        X, target, h, mode == "newton", float(reg_lambda), max_depth, int(params.min_samples_leaf), keys, k, TIE_RTOL
    )
    value = np.empty(len(feature))
    for i in range(len(feature)):
        rows = samples[start[i] : stop[i]]
        if mode == "sse":
            value[i] = np.mean(target[rows])
        else:
            value[i] = -np.sum(target[rows]) / (np.sum(h[rows]) + reg_lambda)
    return DecisionTree(feature, threshold, left, right, value, gain, stop - start, p)
