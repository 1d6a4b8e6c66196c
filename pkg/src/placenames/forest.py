"""CART classification trees and a bagged random forest.

Trees are grown depth-first with Gini impurity. At each node features are
drawn in random order until ``max_features`` non-constant ones have been
evaluated; constant features do not count towards that budget. Candidate
thresholds are midpoints between consecutive distinct values, and a value
goes left when ``x <= threshold``. Equal-impurity candidates resolve to the
lowest feature index, then the lowest threshold.

A fitted forest is a set of flat node arrays (one row per node, all trees
concatenated) so prediction and serialization stay cheap.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from numba import njit

from .errors import ContractError, TrainingError

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def gini(counts) -> float:
    """Gini impurity ``1 - sum(p_i^2)`` of a class-count vector."""
    counts = [float(c) for c in counts]
    if any(c < 0 for c in counts):
        raise ContractError("class counts must be non-negative")
    total = sum(counts)
    if total <= 0:
        raise ContractError("gini of an empty node is undefined")
    return 1.0 - sum((c / total) ** 2 for c in counts)


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_split: int = 5
    max_features: int | str | None = "sqrt"  # "sqrt" -> floor(sqrt(n_features)); None -> all
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be None or >= 0")

    def features_per_split(self, n_features: int) -> int:
        if self.max_features is None:
            return n_features
        if self.max_features == "sqrt":
            return max(1, math.isqrt(n_features))
        if isinstance(self.max_features, int) and self.max_features >= 1:
            return min(self.max_features, n_features)
        raise ValueError(f"bad max_features {self.max_features!r}")


# --------------------------------------------------------------------------
# compiled core


@njit(cache=True)
def _next_u64(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _rand_below(state, n):
    return np.int64(_next_u64(state) % np.uint64(n))


@njit(cache=True)
def _better(score, f, t, best_score, best_f, best_t):
    if score < best_score:
        return True
    if score == best_score:
        if f < best_f:
            return True
        if f == best_f and t < best_t:
            return True
    return False


@njit(cache=True)
def _grow(X, y, sample_idx, max_features, min_samples_split, max_depth, seed):
    n_features = X.shape[1]
    n = sample_idx.shape[0]
    cap = 2 * n + 1
    feature = np.full(cap, -1, np.int32)
    threshold = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int32)
    right = np.full(cap, -1, np.int32)
    count0 = np.zeros(cap, np.int64)
    count1 = np.zeros(cap, np.int64)

    idx = sample_idx.copy()
    vals = np.empty(n, np.float64)
    labs = np.empty(n, np.int8)
    feats = np.arange(n_features)
    state = np.empty(1, np.uint64)
    state[0] = np.uint64(seed)

    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    st_node = np.empty(cap, np.int64)
    sp = 0
    st_start[0] = 0
    st_end[0] = n
    st_depth[0] = 0
    st_node[0] = 0
    sp = 1
    n_nodes = 1

    while sp > 0:
        sp -= 1
        start = st_start[sp]
        end = st_end[sp]
        depth = st_depth[sp]
        node = st_node[sp]
        m = end - start

        c1 = 0
        for i in range(start, end):
            c1 += y[idx[i]]
        c0 = m - c1
        count0[node] = c0
        count1[node] = c1
        if c0 == 0 or c1 == 0 or m < min_samples_split:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue

        best_score = np.inf
        best_f = -1
        best_t = 0.0
        visited = 0
        remaining = n_features
        while remaining > 0 and visited < max_features:
            r = _rand_below(state, remaining)
            remaining -= 1
            f = feats[r]
            feats[r] = feats[remaining]
            feats[remaining] = f

            lo = np.inf
            hi = -np.inf
            binary = True
            for i in range(start, end):
                v = X[idx[i], f]
                vals[i - start] = v
                labs[i - start] = y[idx[i]]
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
                if v != 0.0 and v != 1.0:
                    binary = False
            if lo == hi:
                continue
            visited += 1

            if binary:
                l0 = 0
                l1 = 0
                for i in range(m):
                    if vals[i] == 0.0:
                        if labs[i] == 1:
                            l1 += 1
                        else:
                            l0 += 1
                nl = l0 + l1
                r0 = c0 - l0
                r1 = c1 - l1
                nr = m - nl
                score = -((l0 * l0 + l1 * l1) / nl + (r0 * r0 + r1 * r1) / nr)
                if _better(score, f, 0.5, best_score, best_f, best_t):
                    best_score = score
                    best_f = f
                    best_t = 0.5
                continue

            order = np.argsort(vals[:m], kind="mergesort")
            l0 = 0
            l1 = 0
            for j in range(m - 1):
                o = order[j]
                if labs[o] == 1:
                    l1 += 1
                else:
                    l0 += 1
                v_here = vals[o]
                v_next = vals[order[j + 1]]
                if v_here >= v_next:
                    continue
                nl = j + 1
                r0 = c0 - l0
                r1 = c1 - l1
                nr = m - nl
                score = -((l0 * l0 + l1 * l1) / nl + (r0 * r0 + r1 * r1) / nr)
                t = v_here / 2.0 + v_next / 2.0
                if t >= v_next or t < v_here:
                    t = v_here
                if _better(score, f, t, best_score, best_f, best_t):
                    best_score = score
                    best_f = f
                    best_t = t

        if best_f < 0:
            continue

        # partition idx[start:end] so rows going left come first
        i = start
        j = end - 1
        while i <= j:
            if X[idx[i], best_f] <= best_t:
                i += 1
            else:
                tmp = idx[i]
                idx[i] = idx[j]
                idx[j] = tmp
                j -= 1
        mid = i

        feature[node] = best_f
        threshold[node] = best_t
        left[node] = n_nodes
        right[node] = n_nodes + 1
        st_start[sp] = mid
        st_end[sp] = end
        st_depth[sp] = depth + 1
        st_node[sp] = n_nodes + 1
        sp += 1
        st_start[sp] = start
        st_end[sp] = mid
        st_depth[sp] = depth + 1
        st_node[sp] = n_nodes
        sp += 1
        n_nodes += 2

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        count0[:n_nodes].copy(),
        count1[:n_nodes].copy(),
    )


@njit(cache=True)
def _predict(X, feature, threshold, left, right, count0, count1, roots):
    n = X.shape[0]
    n_trees = roots.shape[0]
    out = np.empty(n, np.float64)
    for i in range(n):
        s = 0.0
        for t in range(n_trees):
            node = roots[t]
            while feature[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            s += count1[node] / (count0[node] + count1[node])
        out[i] = s / n_trees
    return out


# --------------------------------------------------------------------------
# public API


@dataclass
class Tree:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    count0: np.ndarray
    count1: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def is_leaf(self, node: int = 0) -> bool:
        return self.feature[node] < 0

    def depth(self) -> int:
        best = 0
        stack = [(0, 0)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if self.feature[node] >= 0:
                stack += [(self.left[node], d + 1), (self.right[node], d + 1)]
        return best


def _as_training_arrays(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int8)
    if X.ndim != 2 or len(X) != len(y):
        raise ContractError("X must be 2-D with one label per row")
    if len(y) and not np.isin(y, (0, 1)).all():
        raise ContractError("labels must be 0 or 1")
    return X, y


def fit_tree(X, y, cfg: ForestConfig = ForestConfig(), seed: int = 0, sample_indices=None) -> Tree:
    """Grow one tree on ``X[sample_indices]`` (all rows by default)."""
    X, y = _as_training_arrays(X, y)
    if len(y) == 0:
        raise ContractError("cannot fit a tree on zero rows")
    if sample_indices is None:
        sample_indices = np.arange(len(y), dtype=np.int64)
    sample_indices = np.ascontiguousarray(sample_indices, dtype=np.int64)
    max_depth = -1 if cfg.max_depth is None else cfg.max_depth
    arrays = _grow(
        X, y, sample_indices, cfg.features_per_split(X.shape[1]), cfg.min_samples_split,
        max_depth, np.uint64(seed % 2**64),
    )
    return Tree(*arrays)


@dataclass
class ForestModel:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    count0: np.ndarray
    count1: np.ndarray
    roots: np.ndarray
    n_features: int
    config: ForestConfig
    schema_version: str | None = None

    @property
    def n_trees(self) -> int:
        return len(self.roots)

    @property
    def trees(self) -> list[Tree]:
        out = []
        ends = np.r_[self.roots[1:], len(self.feature)]
        for a, b in zip(self.roots, ends):
            fix = lambda arr: np.where(arr >= 0, arr - a, -1)
            out.append(Tree(self.feature[a:b], self.threshold[a:b], fix(self.left[a:b]),
                            fix(self.right[a:b]), self.count0[a:b], self.count1[a:b]))
        return out

    @classmethod
    def from_trees(cls, trees, n_features, config, schema_version=None) -> "ForestModel":
        offsets = np.cumsum([0] + [t.n_nodes for t in trees[:-1]]).astype(np.int64)
        shift = lambda arr, o: np.where(arr >= 0, arr + o, -1).astype(np.int32)
        return cls(
            np.concatenate([t.feature for t in trees]).astype(np.int32),
            np.concatenate([t.threshold for t in trees]),
            np.concatenate([shift(t.left, o) for t, o in zip(trees, offsets)]),
            np.concatenate([shift(t.right, o) for t, o in zip(trees, offsets)]),
            np.concatenate([t.count0 for t in trees]),
            np.concatenate([t.count1 for t in trees]),
            offsets,
            n_features,
            config,
            schema_version,
        )

    def save(self, path) -> None:
        meta = {"config": asdict(self.config), "n_features": self.n_features,
                "schema_version": self.schema_version, "format": 1}
        np.savez_compressed(
            path, feature=self.feature, threshold=self.threshold, left=self.left,
            right=self.right, count0=self.count0, count1=self.count1, roots=self.roots,
            meta=np.array(json.dumps(meta)),
        )

    @classmethod
    def load(cls, path) -> "ForestModel":
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            return cls(
                z["feature"], z["threshold"], z["left"], z["right"], z["count0"],
                z["count1"], z["roots"], meta["n_features"], ForestConfig(**meta["config"]),
                meta["schema_version"],
            )


def tree_seeds(seed: int, n_trees: int) -> list[tuple[int, int]]:
    """Per-tree (bootstrap seed, split seed) pairs derived from one seed."""
    children = np.random.SeedSequence(seed).spawn(n_trees)
    return [tuple(int(v) for v in c.generate_state(2, np.uint64)) for c in children]


def fit_forest(X, y=None, cfg: ForestConfig = ForestConfig(), schema_version: str | None = None) -> ForestModel:
    """Bagged forest. ``X`` may be a ``ResampledSet`` (then ``y`` is omitted)."""
    if y is None:
        X, y = X.X, X.y
    X, y = _as_training_arrays(X, y)
    if len(y) < 2 or len(np.unique(y)) < 2:
        raise TrainingError("forest training needs at least two rows covering both classes")
    n = len(y)
    trees = []
    for boot_seed, split_seed in tree_seeds(cfg.seed, cfg.n_trees):
        if cfg.bootstrap:
            idx = np.random.default_rng(boot_seed).integers(0, n, size=n)
        else:
            idx = np.arange(n)
        trees.append(fit_tree(X, y, cfg, split_seed, idx))
    return ForestModel.from_trees(trees, X.shape[1], cfg, schema_version)


def predict_proba(model: ForestModel, X, schema_version: str | None = None):
    """Mean over trees of the leaf's England (class 1) frequency.

    Accepts one vector (returns a float) or a matrix (returns an array).
    """
    if schema_version is not None and model.schema_version is not None \
            and schema_version != model.schema_version:
        raise ContractError(
            f"model trained on schema {model.schema_version!r}, input is {schema_version!r}")
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X2 = np.ascontiguousarray(X[None, :] if single else X)
    if X2.shape[1] != model.n_features:
        raise ContractError(f"expected {model.n_features} features, got {X2.shape[1]}")
    p = _predict(X2, model.feature, model.threshold, model.left, model.right,
                 model.count0, model.count1, model.roots)
    return float(p[0]) if single else p
