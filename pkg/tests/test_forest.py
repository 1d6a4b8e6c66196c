import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from placenames.errors import ContractError, TrainingError
from placenames.forest import ForestConfig, ForestModel, fit_forest, fit_tree, gini, predict_proba
from placenames.resample import ResampledSet

EXHAUSTIVE = ForestConfig(n_trees=1, max_features=None, bootstrap=False)


@pytest.mark.parametrize("counts, expected", [
    ([5, 5], 0.5), ([10, 0], 0.0), ([0, 3], 0.0), ([1, 3], 0.375), ([1, 1, 1, 1], 0.75),
])
def test_gini(counts, expected):
    assert gini(counts) == pytest.approx(expected, abs=1e-15)


def test_gini_bad_input():
    with pytest.raises(ContractError):
        gini([0, 0])
    with pytest.raises(ContractError):
        gini([-1, 2])


def test_pure_node_is_leaf():
    t = fit_tree(np.arange(10.0)[:, None], np.ones(10, int), EXHAUSTIVE)
    assert t.n_nodes == 1 and t.is_leaf(0)


def test_small_node_is_leaf():
    t = fit_tree(np.arange(4.0)[:, None], np.array([0, 0, 1, 1]), EXHAUSTIVE)
    assert t.n_nodes == 1 and (t.count0[0], t.count1[0]) == (2, 2)


def test_one_dimensional_threshold():
    t = fit_tree(np.arange(6.0)[:, None], np.array([0, 0, 0, 1, 1, 1]), EXHAUSTIVE)
    assert t.feature[0] == 0 and t.threshold[0] == 2.5
    assert t.n_nodes == 3


def test_max_depth_zero():
    cfg = ForestConfig(n_trees=1, max_features=None, bootstrap=False, max_depth=0)
    t = fit_tree(np.arange(6.0)[:, None], np.array([0, 0, 0, 1, 1, 1]), cfg)
    assert t.n_nodes == 1


def _best_root_split(X, y):
    """Enumerate every (feature, midpoint) pair and score it the same way."""
    c1 = int(y.sum())
    c0 = len(y) - c1
    best = None
    for f in range(X.shape[1]):
        vals = sorted(set(X[:, f]))
        for a, b in zip(vals, vals[1:]):
            t = a / 2.0 + b / 2.0
            left = X[:, f] <= t
            l1 = int(y[left].sum())
            l0 = int(left.sum()) - l1
            r0, r1 = c0 - l0, c1 - l1
            nl, nr = l0 + l1, r0 + r1
            score = -((l0 * l0 + l1 * l1) / nl + (r0 * r0 + r1 * r1) / nr)
            key = (score, f, t)
            if best is None or key < best:
                best = key
    return best


@settings(max_examples=150, deadline=None)
@given(st.integers(5, 8), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_root_split_matches_exhaustive_search(n, d, seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 4, size=(n, d)).astype(float)
    y = rng.integers(0, 2, size=n)
    t = fit_tree(X, y, EXHAUSTIVE)
    best = _best_root_split(X, y)
    if best is None or len(set(y)) < 2:
        assert t.n_nodes == 1
        return
    assert (t.feature[0], t.threshold[0]) == (best[1], best[2])
    # children partition the rows by x <= t
    left = X[:, best[1]] <= best[2]
    l, r = t.left[0], t.right[0]
    assert t.count0[l] + t.count1[l] == left.sum()
    assert t.count1[l] == y[left].sum() and t.count1[r] == y[~left].sum()


def test_binary_fast_path_agrees_with_general_path():
    rng = np.random.default_rng(5)
    Xb = rng.integers(0, 2, size=(60, 6)).astype(float)
    y = (Xb[:, 0] + Xb[:, 3] + rng.integers(0, 2, 60) >= 2).astype(int)
    t_bin = fit_tree(Xb, y, EXHAUSTIVE)
    # same data shifted off {0, 1} so the sort-based path is used
    t_gen = fit_tree(Xb * 2.0 + 3.0, y, EXHAUSTIVE)
    assert np.array_equal(t_bin.feature, t_gen.feature)
    assert np.array_equal(t_bin.count1, t_gen.count1)
    split = t_bin.feature >= 0
    assert np.allclose(t_bin.threshold[split] * 2 + 3, t_gen.threshold[split])


def test_agrees_with_sklearn_on_blobs():
    sk = pytest.importorskip("sklearn.ensemble")
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(0, 1, (200, 9)), rng.normal(1.5, 1, (200, 9))])
    y = np.r_[np.zeros(200, int), np.ones(200, int)]
    Xt = np.vstack([rng.normal(0, 1, (300, 9)), rng.normal(1.5, 1, (300, 9))])
    yt = np.r_[np.zeros(300, int), np.ones(300, int)]
    ours = fit_forest(X, y, ForestConfig(n_trees=100, seed=1))
    ref = sk.RandomForestClassifier(n_estimators=100, min_samples_split=5, max_features="sqrt",
                                    random_state=1).fit(X, y)
    acc_ours = ((predict_proba(ours, Xt) >= 0.5) == yt).mean()
    acc_ref = (ref.predict(Xt) == yt).mean()
    assert ((predict_proba(ours, X) >= 0.5) == y).mean() >= 0.99
    assert abs(acc_ours - acc_ref) < 0.03
    p_ours = predict_proba(ours, Xt)
    p_ref = ref.predict_proba(Xt)[:, 1]
    assert np.corrcoef(p_ours, p_ref)[0, 1] > 0.95


def test_forest_deterministic():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(80, 10))
    y = (X[:, 0] > 0).astype(int)
    a = fit_forest(X, y, ForestConfig(n_trees=7, seed=3))
    b = fit_forest(X, y, ForestConfig(n_trees=7, seed=3))
    c = fit_forest(X, y, ForestConfig(n_trees=7, seed=4))
    assert np.array_equal(a.threshold, b.threshold) and np.array_equal(a.feature, b.feature)
    assert not (len(a.feature) == len(c.feature) and np.array_equal(a.threshold, c.threshold))


def test_single_tree_forest_equals_tree():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(50, 4))
    y = (X[:, 1] > 0.2).astype(int)
    model = fit_forest(X, y, EXHAUSTIVE)
    t = fit_tree(X, y, EXHAUSTIVE, seed=0)
    assert len(model.trees) == 1
    assert np.array_equal(model.trees[0].feature, t.feature)


def test_leaf_frequency_probability():
    # identical rows cannot be split: one leaf with 1 of 4 England rows
    X = np.zeros((4, 3))
    model = fit_forest(X, np.array([1, 0, 0, 0]), ForestConfig(n_trees=1, bootstrap=False))
    assert predict_proba(model, np.zeros(3)) == 0.25


def test_probability_is_mean_over_trees():
    a = fit_forest(np.zeros((4, 1)), np.array([1, 0, 0, 0]), ForestConfig(n_trees=1, bootstrap=False))
    b = fit_forest(np.zeros((4, 1)), np.array([1, 1, 1, 0]), ForestConfig(n_trees=1, bootstrap=False))
    both = ForestModel.from_trees(a.trees + b.trees, 1, a.config)
    assert predict_proba(both, np.zeros(1)) == 0.5


def test_row_order_invariance():
    rng = np.random.default_rng(4)
    X = rng.integers(0, 5, size=(40, 3)).astype(float)
    y = rng.integers(0, 2, size=40)
    perm = rng.permutation(40)
    m1 = fit_forest(X, y, EXHAUSTIVE)
    m2 = fit_forest(X[perm], y[perm], EXHAUSTIVE)
    grid = np.array(list(itertools.product(range(5), repeat=3)), dtype=float)
    assert np.array_equal(predict_proba(m1, grid), predict_proba(m2, grid))


def test_memorizes_distinct_rows():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(60, 5))
    y = rng.integers(0, 2, size=60)
    cfg = ForestConfig(n_trees=1, max_features=None, bootstrap=False, min_samples_split=2)
    model = fit_forest(X, y, cfg)
    assert np.array_equal(predict_proba(model, X), y.astype(float))


def test_accepts_resampled_set():
    data = ResampledSet.from_arrays(np.arange(10.0)[:, None], np.array([0] * 5 + [1] * 5))
    model = fit_forest(data, cfg=ForestConfig(n_trees=3))
    assert model.n_trees == 3


def test_training_contract_errors():
    with pytest.raises(TrainingError):
        fit_forest(np.zeros((5, 2)), np.ones(5, int))
    with pytest.raises(ContractError):
        fit_forest(np.zeros((5, 2)), np.array([0, 1, 2, 0, 1]))


def test_predict_contract_errors():
    model = fit_forest(np.arange(10.0)[:, None], np.array([0] * 5 + [1] * 5), ForestConfig(n_trees=2),
                       schema_version="1")
    with pytest.raises(ContractError):
        predict_proba(model, np.zeros(2))
    with pytest.raises(ContractError):
        predict_proba(model, np.zeros(1), schema_version="2")


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    X = rng.normal(size=(100, 6))
    y = (X[:, 2] > 0).astype(int)
    model = fit_forest(X, y, ForestConfig(n_trees=5, seed=9), schema_version="1")
    model.save(tmp_path / "m.npz")
    back = ForestModel.load(tmp_path / "m.npz")
    assert back.config == model.config and back.schema_version == "1"
    assert np.array_equal(predict_proba(back, X), predict_proba(model, X))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_predictions_are_probabilities(seed, n_trees):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(40, 5))
    y = rng.integers(0, 2, size=40)
    y[:2] = [0, 1]
    model = fit_forest(X, y, ForestConfig(n_trees=n_trees, seed=seed % 97))
    p = predict_proba(model, rng.normal(scale=10, size=(200, 5)))
    assert np.all((p >= 0) & (p <= 1))
    assert np.all(np.isfinite(p))
