import numpy as np
import pytest

from hurriloss.models import fit_tree
from hurriloss.models.tree import LEAF, TreeParams, grow_tree


def _sse(v):
    return float(np.sum((v - v.mean()) ** 2)) if len(v) else 0.0


def oracle_cart(X, y, rows, depth, max_depth, min_leaf):
    """Reference CART on an explicit row mask: exhaustive search, SSE from direct sums."""
    node = {"value": float(np.mean(y[rows])), "n": len(rows)}
    if (max_depth is not None and depth >= max_depth) or len(rows) < 2 * min_leaf:
        return node
    parent = _sse(y[rows])
    best = None
    for f in range(X.shape[1]):
        vals = np.unique(X[rows, f])
        for lo, hi in zip(vals[:-1], vals[1:]):
            thr = (lo + hi) / 2.0
            mask = X[rows, f] <= thr
            l, r = rows[mask], rows[~mask]
            if len(l) < min_leaf or len(r) < min_leaf:
                continue
            gain = parent - _sse(y[l]) - _sse(y[r])
            if best is None or gain > best[0] + 1e-9 * max(parent, 1e-300):
                best = (gain, f, thr, l, r)
    if best is None or best[0] <= 1e-12 * parent:
        return node
    node.update(feature=best[1], threshold=best[2])
    node["left"] = oracle_cart(X, y, best[3], depth + 1, max_depth, min_leaf)
    node["right"] = oracle_cart(X, y, best[4], depth + 1, max_depth, min_leaf)
    return node


def compare(tree, ref, i=0):
    assert tree.n_samples[i] == ref["n"]
    if "feature" not in ref:
        assert tree.feature[i] == LEAF
        assert tree.value[i] == pytest.approx(ref["value"], rel=1e-12, abs=1e-12)
        return
    assert tree.feature[i] == ref["feature"]
    assert tree.threshold[i] == ref["threshold"]
    compare(tree, ref["left"], tree.left[i])
    compare(tree, ref["right"], tree.right[i])


@pytest.mark.parametrize("trial", range(200))
def test_matches_bruteforce_cart(trial):
    rng = np.random.default_rng(1000 + trial)
    n = int(rng.integers(2, 31))
    p = int(rng.integers(1, 5))
    X = rng.normal(size=(n, p))
    for f in range(p):
        if rng.random() < 0.5:
            X[:, f] = rng.integers(0, 4, size=n)
    y = rng.normal(size=n)
    max_depth = [None, 1, 2, 3, 5][int(rng.integers(0, 5))]
    min_leaf = int(rng.integers(1, 4))
    tree = grow_tree(X, y, TreeParams(max_depth, min_leaf))
    ref = oracle_cart(X, y, np.arange(n), 0, max_depth, min_leaf)
    compare(tree, ref)
    pred = tree.predict(X)
    leaf_sse = sum(_sse(y[tree.apply(X) == leaf]) for leaf in np.unique(tree.apply(X)))
    assert float(np.sum((y - pred) ** 2)) == pytest.approx(leaf_sse, rel=1e-9, abs=1e-12)


def test_step_function_single_split():
    X = np.array([[1.0], [2.0], [3.0], [4.0]])
    y = np.array([0.0, 0.0, 1.0, 1.0])
    t = grow_tree(X, y, TreeParams())
    assert t.n_nodes == 3 and t.feature[0] == 0 and t.threshold[0] == 2.5
    np.testing.assert_array_equal(t.predict(X), y)
    assert t.gain[0] == pytest.approx(1.0)


def test_constant_target_is_single_leaf():
    X = np.random.default_rng(0).normal(size=(20, 3))
    t = grow_tree(X, np.full(20, 3.5), TreeParams())
    assert t.n_nodes == 1 and t.value[0] == 3.5


def test_unlimited_depth_interpolates_distinct_rows():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(50, 2))
    y = rng.normal(size=50)
    np.testing.assert_allclose(grow_tree(X, y, TreeParams()).predict(X), y, atol=1e-12)


def test_duplicate_feature_tie_goes_to_lowest_index():
    rng = np.random.default_rng(4)
    x = rng.normal(size=40)
    X = np.column_stack([rng.normal(size=40), x, x])
    y = 3 * (x > 0)
    t = grow_tree(X, y, TreeParams(max_depth=1))
    assert t.feature[0] == 1


def test_max_depth_respected():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(200, 4))
    t = grow_tree(X, rng.normal(size=200), TreeParams(max_depth=3))
    assert t.depth() <= 3


def test_min_samples_leaf_respected():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(100, 3))
    t = grow_tree(X, rng.normal(size=100), TreeParams(min_samples_leaf=7))
    assert np.all(t.n_samples[t.feature == LEAF] >= 7)


def test_newton_leaf_values():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    g = np.array([-2.0, -2.0, -2.0, -2.0])
    t = grow_tree(X, g, TreeParams(max_depth=1), mode="newton", reg_lambda=1.0)
    # constant gradient: no split improves the score
    assert t.n_nodes == 1
    assert t.value[0] == pytest.approx(1.6)


def test_subsampling_requires_rng():
    with pytest.raises(ValueError, match="rng"):
        grow_tree(np.zeros((4, 3)), np.arange(4.0), TreeParams(features_per_split=1))


def test_invalid_params():
    with pytest.raises(ValueError, match="max_depth"):
        TreeParams(max_depth=0)
    with pytest.raises(ValueError, match="min_samples_leaf"):
        TreeParams(min_samples_leaf=0)


def test_dict_round_trip():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(60, 3))
    t = fit_tree(X, rng.normal(size=60), TreeParams(max_depth=4))
    from hurriloss.models.tree import DecisionTree

    again = DecisionTree.from_dict(t.to_dict())
    np.testing.assert_array_equal(again.predict(X), t.predict(X))
    assert again.to_dict() == t.to_dict()
