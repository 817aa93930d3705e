"""Two-stage classifier: binary role models feed binary interruptibility models."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from ..learners import Model, ModelSpec, train
from ..sessionize import LabeledWindow
from .design import FeatureBuilder, WindowTable, window_table, with_roles
from .encoding import decode_interrupt_pair, decode_role_pair, encode_interruptibility, encode_role
from .seeds import derive_seed


@dataclass
class TwoStageModel:
    role_private_model: Model
    role_work_model: Model
    intr_private_model: Model
    intr_work_model: Model
    fallback_role: str
    role_feature_encoding: str = "both"
    builder: FeatureBuilder | None = None


def most_common_role(roles: Sequence[str]) -> str:
    counts = Counter(roles)
    best = max(counts.values())
    return min(r for r, c in counts.items() if c == best)


def fit_two_stage(X: sp.spmatrix, roles: Sequence[str], interruptibility: Sequence[str],
                  spec: ModelSpec, role_feature_encoding: str = "both") -> TwoStageModel:
    """Fit all four binary models on one design matrix.

    Stage 2 is trained on ground-truth roles (teacher forcing).
    """
    role_bits = np.array([encode_role(r) for r in roles], dtype=bool).reshape(-1, 2)
    intr_bits = np.array([encode_interruptibility(i) for i in interruptibility], dtype=bool).reshape(-1, 2)
    X2 = with_roles(X, roles, role_feature_encoding)

    def fit(name, X_, y):
        return train(replace(spec, seed=derive_seed(spec.seed, name)), X_, list(y))

    return TwoStageModel(
        role_private_model=fit("role_private", X, role_bits[:, 0]),
        role_work_model=fit("role_work", X, role_bits[:, 1]),
        intr_private_model=fit("intr_private", X2, intr_bits[:, 0]),
        intr_work_model=fit("intr_work", X2, intr_bits[:, 1]),
        fallback_role=most_common_role(roles),
        role_feature_encoding=role_feature_encoding,
    )


def predict_roles(model: TwoStageModel, X: sp.spmatrix) -> list[str]:
    pairs = zip(model.role_private_model.predict(X), model.role_work_model.predict(X))
    return [decode_role_pair(p, model.fallback_role) for p in pairs]


def predict_matrix(model: TwoStageModel, X: sp.spmatrix,
                   roles: Sequence[str] | None = None) -> tuple[list[str], list[str]]:
    """Predict interruptibility from a base design matrix.

    With ``roles`` given (oracle condition) stage 1 is bypassed; the stage-2
    feature layout is the same either way.
    """
    if roles is None:
        roles = predict_roles(model, X)
    X2 = with_roles(X, roles, model.role_feature_encoding)
    pairs = zip(model.intr_private_model.predict(X2), model.intr_work_model.predict(X2))
    return [decode_interrupt_pair(p) for p in pairs], list(roles)


def train_two_stage(windows: Sequence[LabeledWindow], feature_set: str, spec: ModelSpec, *,
                    appseq_mode: str = "TFIDF", standardize: bool = False,
                    role_feature_encoding: str = "both", genres: Mapping[str, str] | None = None,
                    table: WindowTable | None = None) -> TwoStageModel:
    """Fit the feature pipeline and all four models on a participant's training windows.

    ``feature_set`` names the stage-1 input (it must not itself contain roles).
    """
    builder = FeatureBuilder(feature_set, appseq_mode, standardize)
    if builder.uses_roles:
        raise ValueError("stage-1 features must not include self-reported roles")
    table = table if table is not None else window_table(windows, genres)
    builder.fit(table)
    model = fit_two_stage(builder.transform(table), table.roles, table.interruptibility, spec,
                          role_feature_encoding)
    model.builder = builder
    return model


def predict_two_stage(model: TwoStageModel, windows: Sequence[LabeledWindow], *,
                      roles: Sequence[str] | None = None, genres: Mapping[str, str] | None = None,
                      table: WindowTable | None = None) -> tuple[list[str], list[str]]:
    table = table if table is not None else window_table(windows, genres)
    return predict_matrix(model, model.builder.transform(table), roles)
