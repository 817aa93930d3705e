"""From-scratch classifier suite.

>>> m = train(ModelSpec("baseline"), np.zeros((3, 1)), ["p", "p", "w"])
>>> predict(m, np.ones((2, 1)))
['p', 'p']
"""

from __future__ import annotations

import io
import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .base import Baseline, EmptyDataset, LearnerError, Model, ModelSpec, ShapeMismatch
from .linear import KNN, Logistic, Ridge
from .trees import AdaBoost, DecisionTree, RandomForest

FAMILIES: dict[str, type[Model]] = {
    cls.family: cls for cls in (Baseline, DecisionTree, RandomForest, KNN, Logistic, Ridge, AdaBoost)
}
# Families whose decisions depend on feature scale; the pipeline z-scores their inputs.
SCALE_SENSITIVE = frozenset({"knn", "logistic", "ridge"})

FORMAT_VERSION = 1


def make_model(spec: ModelSpec) -> Model:
    try:
        cls = FAMILIES[spec.family]
    except KeyError:
        raise LearnerError(f"unknown model family {spec.family!r}") from None
    return cls(spec)


def train(spec: ModelSpec, X, y: Sequence) -> Model:
    return make_model(spec).fit(X, y)


def predict(model: Model, X) -> list:
    return model.predict(X)


def save_model(model: Model, path: str | Path) -> None:
    """Write an ``.npz`` container: JSON header plus the fitted parameter arrays."""
    header = {"format": FORMAT_VERSION, "spec": model.spec.to_dict(),
              "classes": model.classes, "n_features": model.n_features}
    arrays = {} if model.constant else model.state()
    buf = io.BytesIO()
    np.savez(buf, __header__=np.array(json.dumps(header)), **arrays)
    Path(path).write_bytes(buf.getvalue())


def load_model(path: str | Path) -> Model:
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["__header__"]))
        if header.get("format") != FORMAT_VERSION:
            raise LearnerError(f"unsupported model format {header.get('format')!r}")
        model = make_model(ModelSpec.from_dict(header["spec"]))
        model.classes = header["classes"]
        model.n_features = header["n_features"]
        if not model.constant:
            model.load_state({k: data[k] for k in data.files if k != "__header__"})
    return model


__all__ = ["FAMILIES", "SCALE_SENSITIVE", "Model", "ModelSpec", "EmptyDataset", "ShapeMismatch",
           "LearnerError", "train", "predict", "make_model", "save_model", "load_model"]
