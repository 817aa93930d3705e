"""Weighted F1 and stratified per-participant folds."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np


class EmptyInput(ValueError):
    pass


class TooFewSamples(ValueError):
    pass


def weighted_f1(y_true: Sequence, y_pred: Sequence) -> float:
    """Per-class F1 averaged with true-class support as weights (0 when P + R = 0)."""
    if len(y_true) != len(y_pred):
        raise ValueError("y_true and y_pred differ in length")
    if len(y_true) == 0:
        raise EmptyInput("weighted F1 of an empty sample")
    support = Counter(y_true)
    predicted = Counter(y_pred)
    hits = Counter(t for t, p in zip(y_true, y_pred) if t == p)
    n = len(y_true)
    total = 0.0
    for cls in sorted(support, key=repr):
        tp = hits[cls]
        # F1 = 2PR/(P+R) = 2tp / (predicted + support); zero when tp == 0
        f1 = 2.0 * tp / (predicted[cls] + support[cls]) if tp else 0.0
        total += support[cls] / n * f1
    return total


@dataclass(frozen=True)
class FoldAssignment:
    """``folds[i]`` is the test fold of sample i, or -1 for training-only samples."""
    folds: tuple[int, ...]
    k: int
    training_only: tuple = ()

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.folds) == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.folds) != fold)


def stratified_kfold(labels: Sequence[Hashable], k: int = 3, seed: int = 0) -> FoldAssignment:
    """Assign samples to ``k`` test folds, class by class, in round-robin order.

    Classes with fewer than ``k`` samples cannot appear in every fold; their
    samples are kept for training only and listed in ``training_only``. The
    round-robin pointer carries over between classes, so fold sizes differ by
    at most one and so do per-class counts.
    """
    n = len(labels)
    if n < k:
        raise TooFewSamples(f"{n} samples cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    by_class: dict = {}
    for i, lab in enumerate(labels):
        by_class.setdefault(lab, []).append(i)
    folds = [-1] * n
    rare = []
    pointer = 0
    for lab in sorted(by_class, key=repr):
        idx = by_class[lab]
        if len(idx) < k:
            rare.append(lab)
            continue
        for i in rng.permutation(idx):
            folds[int(i)] = pointer % k
            pointer += 1
    return FoldAssignment(tuple(folds), k, tuple(rare))
