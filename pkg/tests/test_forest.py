import numpy as np
import pytest

from hurriloss.models import fit_tree
from hurriloss.models.ensemble import ForestConfig, fit_random_forest
from hurriloss.models.tree import TreeParams


@pytest.fixture
def data():
    rng = np.random.default_rng(21)
    X = rng.normal(size=(120, 6))
    return X, X[:, 0] + np.sin(X[:, 1]) + rng.normal(scale=0.1, size=120)


def test_single_full_tree_equals_cart(data):
    X, y = data
    rf = fit_random_forest(X, y, ForestConfig(n_trees=1, max_depth=6, features_per_split="all", bootstrap=False), seed=3)
    np.testing.assert_array_equal(rf.predict(X), fit_tree(X, y, TreeParams(6)).predict(X))


def test_constant_target(data):
    X, _ = data
    rf = fit_random_forest(X, np.full(len(X), 2.5), ForestConfig(n_trees=10), seed=1)
    np.testing.assert_array_equal(rf.predict(X), 2.5)


def test_prediction_is_tree_average(data):
    X, y = data
    rf = fit_random_forest(X, y, ForestConfig(n_trees=7), seed=2)
    np.testing.assert_allclose(rf.predict(X), np.mean([t.predict(X) for t in rf.trees], axis=0), atol=1e-12)


def test_deterministic_and_thread_invariant(data):
    X, y = data
    a = fit_random_forest(X, y, ForestConfig(n_trees=8), seed=5, threads=1).predict(X)
    b = fit_random_forest(X, y, ForestConfig(n_trees=8), seed=5, threads=4).predict(X)
    np.testing.assert_array_equal(a, b)
    c = fit_random_forest(X, y, ForestConfig(n_trees=8), seed=6).predict(X)
    assert not np.array_equal(a, c)


def test_third_of_features_used_per_split(data):
    X, y = data
    rf = fit_random_forest(X, y, ForestConfig(n_trees=30, max_depth=1), seed=0)
    # with 2 of 6 candidates, feature 0 cannot win every stump
    roots = {int(t.feature[0]) for t in rf.trees}
    assert len(roots) > 1


def test_trees_differ_with_bootstrap(data):
    X, y = data
    rf = fit_random_forest(X, y, ForestConfig(n_trees=3, features_per_split="all"), seed=0)
    assert not np.array_equal(rf.trees[0].predict(X), rf.trees[1].predict(X))


def test_rejects_zero_trees(data):
    with pytest.raises(ValueError, match="n_trees"):
        fit_random_forest(*data, ForestConfig(n_trees=0))
