from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
import scipy.sparse as sp


class LearnerError(ValueError):
    pass


class EmptyDataset(LearnerError):
    pass


class ShapeMismatch(LearnerError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    family: str
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def to_dict(self) -> dict:
        return {"family": self.family, "params": dict(self.params), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(d["family"], dict(d.get("params", {})), int(d.get("seed", 0)))


def as_dense(X) -> np.ndarray:
    if sp.issparse(X):
        X = X.toarray()
    return np.asfortranarray(np.asarray(X, dtype=np.float64))


def as_csr(X) -> sp.csr_matrix:
    return sp.csr_matrix(X, dtype=np.float64)


class Model:
    """Base for fitted classifiers.

    Labels can be any sortable values; they are mapped to codes in sorted
    order, so every "lowest code" tie rule picks the lexicographically
    smallest label. A single-class training set yields a constant predictor.
    """

    family = "model"
    defaults: dict[str, Any] = {}

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self.params = {**self.defaults, **spec.params}
        unknown = set(spec.params) - set(self.defaults)
        if unknown:
            raise LearnerError(f"unknown {self.family} hyperparameters: {sorted(unknown)}")
        self.classes: list = []
        self.n_features = 0

    @property
    def constant(self) -> bool:
        return len(self.classes) == 1

    def fit(self, X, y: Sequence) -> "Model":
        n = X.shape[0]
        if n == 0:
            raise EmptyDataset("cannot train on zero rows")
        if len(y) != n:
            raise ShapeMismatch(f"{n} rows but {len(y)} labels")
        # numpy scalars become plain Python values so the class list serializes
        self.classes = sorted({v.item() if isinstance(v, np.generic) else v for v in y})
        pos = {c: i for i, c in enumerate(self.classes)}
        codes = np.fromiter((pos[v] for v in y), dtype=np.int64, count=n)
        self.n_features = X.shape[1]
        if not self.constant:
            self._fit(X, codes)
        return self

    def predict(self, X) -> list:
        if X.shape[1] != self.n_features:
            raise ShapeMismatch(f"model expects {self.n_features} columns, got {X.shape[1]}")
        if self.constant:
            return [self.classes[0]] * X.shape[0]
        return [self.classes[c] for c in self._predict(X)]

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    # subclasses
    def _fit(self, X, codes: np.ndarray) -> None:
        raise NotImplementedError

    def _predict(self, X) -> np.ndarray:
        raise NotImplementedError

    def state(self) -> dict[str, np.ndarray]:
        return {}

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        pass


class Baseline(Model):
    """Predicts the most frequent training class."""

    family = "baseline"

    def _fit(self, X, codes):
        self.majority = int(np.argmax(np.bincount(codes, minlength=self.n_classes)))

    def _predict(self, X):
        return np.full(X.shape[0], self.majority, dtype=np.int64)

    def state(self):
        return {"majority": np.array(self.majority)}

    def load_state(self, arrays):
        self.majority = int(arrays["majority"])
