"""Decision tree, random forest and SAMME AdaBoost on top of the CART kernel."""

from __future__ import annotations

import math

import numpy as np

from ._cart import apply_tree, grow_tree
from .base import Model, as_dense


class _Forest:
    """Concatenated node arrays of several trees."""

    def __init__(self):
        self.parts = []

    def add(self, tree):
        self.parts.append(tree)

    def freeze(self):
        sizes = [len(t[0]) for t in self.parts]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
        self.feature, self.threshold, self.left, self.right, self.value = (
            np.concatenate([t[i] for t in self.parts]) for i in range(5))
        del self.parts

    def leaf_values(self, X, t):
        off = self.offsets[t]
        leaves = apply_tree(X, self.feature, self.threshold, self.left, self.right, off)
        return self.value[off + leaves]

    def state(self, prefix=""):
        return {prefix + k: getattr(self, k)
                for k in ("offsets", "feature", "threshold", "left", "right", "value")}

    @classmethod
    def from_state(cls, arrays, prefix=""):
        f = cls.__new__(cls)
        for k in ("offsets", "feature", "threshold", "left", "right", "value"):
            setattr(f, k, arrays[prefix + k])
        return f


def _n_features(spec, d: int) -> int:
    if spec is None or spec == "all":
        return d
    if spec == "sqrt":
        return max(1, math.ceil(math.sqrt(d)))
    return max(1, min(d, int(spec)))


def _depth(value) -> int:
    return -1 if value is None else int(value)


class DecisionTree(Model):
    """CART with Gini impurity; split thresholds are midpoints of sorted values."""

    family = "tree"
    defaults = {"min_samples_split": 2, "max_depth": None, "max_features": "all"}

    def _fit(self, X, codes):
        X = as_dense(X)
        p = self.params
        w = np.ones(X.shape[0])
        rng = np.random.default_rng(self.spec.seed)
        tree = grow_tree(X, codes, w, self.n_classes, _n_features(p["max_features"], X.shape[1]),
                         int(p["min_samples_split"]), _depth(p["max_depth"]),
                         int(rng.integers(2**31)))
        self.trees = _Forest()
        self.trees.add(tree)
        self.trees.freeze()

    def _predict(self, X):
        return np.argmax(self.trees.leaf_values(as_dense(X), 0), axis=1)

    def state(self):
        return self.trees.state()

    def load_state(self, arrays):
        self.trees = _Forest.from_state(arrays)

    @property
    def node_count(self) -> int:
        return len(self.trees.feature)


class RandomForest(Model):
    """Bagged CART trees with per-split feature subsampling; majority vote."""

    family = "forest"
    defaults = {"n_trees": 100, "max_features": "sqrt", "bootstrap": True,
                "min_samples_split": 2, "max_depth": None}

    def _fit(self, X, codes):
        X = as_dense(X)
        n, d = X.shape
        p = self.params
        mf = _n_features(p["max_features"], d)
        rng = np.random.default_rng(self.spec.seed)
        self.trees = _Forest()
        for _ in range(int(p["n_trees"])):
            tree_seed = int(rng.integers(2**31))
            if p["bootstrap"]:
                w = np.bincount(rng.integers(0, n, n), minlength=n).astype(np.float64)
            else:
                w = np.ones(n)
            self.trees.add(grow_tree(X, codes, w, self.n_classes, mf, int(p["min_samples_split"]),
                                     _depth(p["max_depth"]), tree_seed))
        self.trees.freeze()

    def _predict(self, X):
        X = as_dense(X)
        votes = np.zeros((X.shape[0], self.n_classes), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for t in range(len(self.trees.offsets)):
            votes[rows, np.argmax(self.trees.leaf_values(X, t), axis=1)] += 1
        return np.argmax(votes, axis=1)

    def state(self):
        return self.trees.state()

    def load_state(self, arrays):
        self.trees = _Forest.from_state(arrays)


class AdaBoost(Model):
    """Multi-class AdaBoost (SAMME) over depth-1 stumps.

    Boosting stops early once a stump's weighted error reaches 1 - 1/K, the
    point at which it is no better than chance; a perfect stump ends it too.
    """

    family = "adaboost"
    defaults = {"n_rounds": 50}

    def _fit(self, X, codes):
        X = as_dense(X)
        n = X.shape[0]
        K = self.n_classes
        w = np.full(n, 1.0 / n)
        self.trees = _Forest()
        alphas, self.errors = [], []
        for _ in range(int(self.params["n_rounds"])):
            stump = grow_tree(X, codes, w, K, X.shape[1], 2, 1, 0)
            f, t, left, right, value = stump
            leaves = apply_tree(X, f, t, left, right, 0)
            pred = np.argmax(value[leaves], axis=1)
            miss = pred != codes
            err = float(w[miss].sum() / w.sum())
            if err >= 1.0 - 1.0 / K:
                break
            self.trees.add(stump)
            self.errors.append(err)
            # a perfect stump gets the weight of a 1e-10 error and ends boosting
            e = max(err, 1e-10)
            alpha = math.log((1.0 - e) / e) + math.log(K - 1.0)
            if err <= 0.0:
                alphas.append(alpha)
                break
            alphas.append(alpha)
            w = w * np.exp(alpha * miss)
            w /= w.sum()
        if not alphas:
            # nothing better than chance: fall back to the weighted majority stump
            self.trees.add(grow_tree(X, codes, np.full(n, 1.0 / n), K, X.shape[1], 2, 0, 0))
            alphas.append(1.0)
        self.alphas = np.array(alphas)
        self.trees.freeze()

    def _predict(self, X):
        X = as_dense(X)
        scores = np.zeros((X.shape[0], self.n_classes))
        rows = np.arange(X.shape[0])
        for t, alpha in enumerate(self.alphas):
            scores[rows, np.argmax(self.trees.leaf_values(X, t), axis=1)] += alpha
        return np.argmax(scores, axis=1)

    def state(self):
        return {**self.trees.state(), "alphas": self.alphas}

    def load_state(self, arrays):
        self.trees = _Forest.from_state(arrays)
        self.alphas = arrays["alphas"]
